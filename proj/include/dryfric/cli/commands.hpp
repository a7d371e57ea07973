#pragma once

// Subcommands behind the `dryfric` executable.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dryfric/cli/scenario.hpp"
#include "dryfric/engine.hpp"
#include "dryfric/friction_law.hpp"

namespace dryfric::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitParadox = 3,
  kExitNumerical = 4,
};

/// %.17g
inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t points = 1;

  double at(std::size_t i) const {
    return points == 1 ? lo
                       : lo + (hi - lo) * static_cast<double>(i) /
                                  static_cast<double>(points - 1);
  }
};

/// "a:b:n" with n >= 1 and a <= b.
inline Range parse_range(const std::string& text, const std::string& flag) {
  Range r;
  char tail = 0;
  long long n = 0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%lld%c", &r.lo, &r.hi, &n, &tail) != 3 ||
      n < 1 || !(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
    throw ConfigError(flag + ": expected lo:hi:n with lo <= hi and n >= 1, got '" +
                      text + "'");
  }
  r.points = static_cast<std::size_t>(n);
  return r;
}

// --- simulate -----------------------------------------------------------------

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline Table trajectory_table(const Scenario& scenario, const MechanicalModel& model,
                              const SimulationResult& result) {
  Table t;
  const auto contacts = model.contacts(result.samples.front().state.q());
  auto has = [&](const std::string& g) {
    return std::find(scenario.columns.begin(), scenario.columns.end(), g) !=
           scenario.columns.end();
  };
  std::vector<std::string> invariant_names;
  for (const auto& [name, value] : result.samples.front().invariant_values) {
    invariant_names.push_back(name);
  }
  if (has("t")) t.header.push_back("t");
  if (has("q")) for (const auto& n : model.coordinate_names) t.header.push_back(n);
  if (has("v")) for (const auto& n : model.velocity_names) t.header.push_back(n);
  if (has("lambda")) for (const auto& c : contacts) t.header.push_back("lambda_" + c.label());
  if (has("mode")) for (const auto& c : contacts) t.header.push_back("mode_" + c.label());
  if (has("friction_power")) t.header.push_back("friction_power");
  if (has("power_residual")) t.header.push_back("power_residual");
  if (has("contact_power")) {
    for (const auto& c : contacts) t.header.push_back("contact_power_" + c.label());
  }
  if (has("invariants")) for (const auto& n : invariant_names) t.header.push_back(n);
  if (has("energy")) t.header.push_back("energy");

  for (const auto& s : result.samples) {
    std::vector<std::string> row;
    if (has("t")) row.push_back(fmt(s.state.t()));
    if (has("q")) for (Eigen::Index i = 0; i < s.state.q().size(); ++i) row.push_back(fmt(s.state.q()(i)));
    if (has("v")) for (Eigen::Index i = 0; i < s.state.v().size(); ++i) row.push_back(fmt(s.state.v()(i)));
    if (has("lambda")) for (Eigen::Index i = 0; i < s.lambdas.size(); ++i) row.push_back(fmt(s.lambdas(i)));
    if (has("mode")) for (const auto& m : s.modes) row.push_back(m.name());
    double contact_sum = 0.0;
    for (double c : s.contact_powers) contact_sum += c;
    if (has("friction_power")) row.push_back(fmt(s.total_friction_power));
    if (has("power_residual")) row.push_back(fmt(std::abs(s.total_friction_power - contact_sum)));
    if (has("contact_power")) for (double c : s.contact_powers) row.push_back(fmt(c));
    if (has("invariants")) {
      for (const auto& n : invariant_names) row.push_back(fmt(s.invariant_values.at(n)));
    }
    if (has("energy")) row.push_back(fmt(s.energy));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    os << (i ? "," : "") << t.header[i];
  }
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
}

/// Rows as objects; numeric cells are stored as numbers.
inline nlohmann::json table_json(const Table& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      char* end = nullptr;
      const double x = std::strtod(row[i].c_str(), &end);
      if (end && *end == '\0' && !row[i].empty()) {
        obj[t.header[i]] = x;
      } else {
        obj[t.header[i]] = row[i];
      }
    }
    rows.push_back(std::move(obj));
  }
  return {{"columns", t.header}, {"rows", rows}};
}

inline nlohmann::json events_json(const std::vector<EventRecord>& events) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : events) out.push_back({{"t", e.t}, {"labels", e.labels}});
  return out;
}

inline nlohmann::json monitor_json(const MonitorReport& m) {
  nlohmann::json inv = nlohmann::json::object();
  for (const auto& [name, d] : m.invariants) {
    inv[name] = {{"initial", d.initial}, {"max_abs_drift", d.max_abs},
                 {"max_rel_drift", d.max_rel}};
  }
  return {{"invariants", inv},
          {"max_power_residual", m.max_power_residual},
          {"max_friction_power", m.max_friction_power},
          {"max_energy_increase", m.max_energy_increase},
          {"initial_energy", m.initial_energy}};
}

/// Writes to `path`, or to `fallback` when the path is empty.
template <class Fn>
void emit(const std::string& path, std::ostream& fallback, Fn&& write) {
  if (path.empty()) {
    write(fallback);
    return;
  }
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write '" + path + "'");
  write(os);
}

inline void write_trajectory(const Scenario& scenario, const MechanicalModel& model,
                             const SimulationResult& result,
                             const std::string& format, const std::string& path,
                             std::ostream& out) {
  if (result.samples.empty()) return;
  const Table table = trajectory_table(scenario, model, result);
  emit(path, out, [&](std::ostream& os) {
    if (format == "json") {
      nlohmann::json doc = table_json(table);
      doc["events"] = events_json(result.events);
      doc["termination"] =
          result.termination == Termination::kImpact ? "impact" : "horizon";
      doc["impact_contacts"] = result.impact_contacts;
      doc["monitor"] = monitor_json(monitor_report(result));
      os << doc.dump(2) << '\n';
    } else {
      write_csv(os, table);
    }
  });
}

inline void print_summary(const SimulationResult& result, std::ostream& err) {
  if (result.samples.empty()) return;
  const MonitorReport m = monitor_report(result);
  err << "samples: " << result.samples.size() << '\n';
  for (const auto& e : result.events) {
    err << "event t=" << fmt(e.t);
    for (const auto& l : e.labels) err << ' ' << l;
    err << '\n';
  }
  if (result.termination == Termination::kImpact) err << "terminated by impact\n";
  err << "max_power_residual: " << fmt(m.max_power_residual) << '\n';
  err << "max_friction_power: " << fmt(m.max_friction_power) << '\n';
  for (const auto& [name, d] : m.invariants) {
    err << "invariant " << name << " max_rel_drift: " << fmt(d.max_rel) << '\n';
  }
}

// --- paradox scan -----------------------------------------------------------

struct ScanRow {
  double mu = 0.0;
  double theta = 0.0;
  double denominator = 0.0;
};

struct CriticalPoint {
  double theta = 0.0;
  double mu = 0.0;  // +inf when the denominator cannot vanish at this θ
};

struct ParadoxScanResult {
  double sigma = 1.0;
  std::vector<ScanRow> grid;  // mu-major
  std::vector<CriticalPoint> critical;
  double mu_star = std::numeric_limits<double>::infinity();  // refined minimum
  double theta_star = 0.0;
  double mu_star_formula = 0.0;
  /// min over θ of the denominator at mu_star_formula.
  double min_denominator_at_formula = 0.0;
  double theta_at_formula = 0.0;
};

namespace detail {

/// Golden-section minimum of f on [a, b].
template <class F>
std::pair<double, double> golden_min(F&& f, double a, double b, double tol = 1e-13) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, f(x)};
}

/// Bracket around the grid minimiser, then golden section.
template <class F>
std::pair<double, double> grid_then_refine(F&& f, const Range& r) {
  std::size_t best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < r.points; ++i) {
    const double val = f(r.at(i));
    if (val < best_val) {
      best_val = val;
      best = i;
    }
  }
  if (!std::isfinite(best_val) || r.points < 3) return {r.at(best), best_val};
  const double a = r.at(best == 0 ? 0 : best - 1);
  const double b = r.at(std::min(best + 1, r.points - 1));
  auto refined = golden_min(f, a, b);
  if (refined.second > best_val) return {r.at(best), best_val};
  return refined;
}

}  // namespace detail

/// Classical-law denominator on a μ × θ grid, the critical curve μ*(θ) and
/// its minimum. Rows are computed by `workers` threads and returned in grid
/// order.
inline ParadoxScanResult paradox_scan(const PainleveParams& p, const Range& mu,
                                      const Range& theta, double sigma,
                                      unsigned workers = 0) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, mu.points));
  ParadoxScanResult out;
  out.sigma = sigma;
  std::vector<std::vector<ScanRow>> rows(mu.points);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < mu.points; i += workers) {
        auto& block = rows[i];
        block.reserve(theta.points);
        for (std::size_t j = 0; j < theta.points; ++j) {
          const double m = mu.at(i), th = theta.at(j);
          block.push_back({m, th, painleve_classical_denominator(p, th, m, sigma)});
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& block : rows) {
    out.grid.insert(out.grid.end(), block.begin(), block.end());
  }

  for (std::size_t j = 0; j < theta.points; ++j) {
    const double th = theta.at(j);
    out.critical.push_back({th, painleve_critical_mu_at(p, th, sigma)});
  }
  const auto crit = [&](double th) { return painleve_critical_mu_at(p, th, sigma); };
  const auto best = detail::grid_then_refine(crit, theta);
  out.theta_star = best.first;
  out.mu_star = best.second;

  out.mu_star_formula = painleve_critical_mu(p);
  const auto den = [&](double th) {
    return painleve_classical_denominator(p, th, out.mu_star_formula, sigma);
  };
  const auto lowest = detail::grid_then_refine(den, theta);
  out.theta_at_formula = lowest.first;
  out.min_denominator_at_formula = lowest.second;
  return out;
}

// --- frenchman ----------------------------------------------------------------

struct FrenchmanRow {
  double t = 0.0;
  Eigen::Vector4d numeric;   // ẋ, ωx, ωy, ωz
  Eigen::Vector4d analytic;
};

struct FrenchmanComparison {
  std::vector<FrenchmanRow> rows;
  /// Per component: max |numeric - analytic| / max |analytic| over [0, T).
  Eigen::Vector4d max_rel_error = Eigen::Vector4d::Zero();
  double max_rel = 0.0;
  double t_formula = 0.0;
  double t_event = std::numeric_limits<double>::quiet_NaN();
  double j_drift = 0.0;  // relative
  double event_tol = 0.0;
  SimulationResult result;
};

inline FrenchmanComparison compare_frenchman(const CushionParams& p,
                                             const FrenchmanSpec& spec,
                                             const IntegrationConfig& cfg,
                                             const MechanicalModel& model) {
  FrenchmanComparison out;
  out.event_tol = cfg.event_tol;
  const FrenchmanSolution sol =
      frenchman_solution(p, spec.v0, spec.omega_x0, spec.branch);
  out.t_formula = sol.T;
  out.result = simulate(model, frenchman_initial_state(p, spec.v0, spec.omega_x0,
                                                       spec.branch),
                        cfg);
  for (const auto& e : out.result.events) {
    if (std::find(e.labels.begin(), e.labels.end(), "spin_exhausted") !=
        e.labels.end()) {
      out.t_event = e.t;
      break;
    }
  }
  Eigen::Vector4d scale = Eigen::Vector4d::Zero();
  Eigen::Vector4d err = Eigen::Vector4d::Zero();
  for (const auto& s : out.result.samples) {
    const double t = s.state.t();
    const CushionVelocities c = frenchman_analytic(p, spec.v0, spec.omega_x0,
                                                   spec.branch, t);
    FrenchmanRow row;
    row.t = t;
    const Vector& v = s.state.v();
    row.numeric << v(0), v(3), v(4), v(5);
    row.analytic << c.xdot, c.omega_x, c.omega_y, c.omega_z;
    if (t < sol.T) {
      scale = scale.cwiseMax(row.analytic.cwiseAbs());
      err = err.cwiseMax((row.numeric - row.analytic).cwiseAbs());
    }
    out.rows.push_back(row);
  }
  for (int k = 0; k < 4; ++k) {
    out.max_rel_error(k) = scale(k) > 0.0 ? err(k) / scale(k) : err(k);
  }
  out.max_rel = out.max_rel_error.maxCoeff();
  const MonitorReport m = monitor_report(out.result);
  out.j_drift = m.invariants.count("J") ? m.invariants.at("J").max_rel : 0.0;
  return out;
}

// --- check-tensor ---------------------------------------------------------------

inline nlohmann::json condition_json(const ConditionResult& r) {
  nlohmann::json j{{"holds", r.holds}, {"rho", r.rho}, {"residual", r.residual}};
  if (r.coefficients.size() > 0) {
    nlohmann::json c = nlohmann::json::array();
    for (Eigen::Index i = 0; i < r.coefficients.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index k = 0; k < r.coefficients.cols(); ++k) {
        row.push_back(r.coefficients(i, k));
      }
      c.push_back(row);
    }
    j["coefficients"] = c;
  }
  return j;
}

inline nlohmann::json vector_json(const Vector& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline nlohmann::json check_tensor_report(const Scenario& scenario,
                                          const MechanicalModel& model,
                                          const GeneralizedState& state,
                                          std::uint64_t seed) {
  const auto contacts = model.contacts(state.q());
  const InertiaMatrix a = model.inertia(state.q());
  nlohmann::json doc;
  doc["model"] = model.name;
  doc["state"] = {{"t", state.t()}, {"q", vector_json(state.q())},
                  {"v", vector_json(state.v())}};
  doc["seed"] = seed;

  nlohmann::json per = nlohmann::json::array();
  Matrix phi_sum = Matrix::Zero(model.dof, model.dof);
  for (const auto& c : contacts) {
    const Matrix phi = lift_contact_tensor(c.projection(), c.friction());
    phi_sum += phi;
    const Matrix q = c.projection() * a.solve(Matrix(c.projection().transpose()));
    per.push_back({{"label", c.label()},
                   {"condition_i", condition_json(check_condition_i(phi, a, c.gradient()))},
                   {"condition_ii", check_condition_ii(c.friction().matrix())},
                   {"lifted_condition_ii", check_condition_ii(phi)},
                   {"alignment", condition_json(check_theorem1_alignment(
                                     c.friction(), q, c.normal()))}});
  }
  doc["contacts"] = per;
  doc["span_condition"] = condition_json(
      check_kozlov_multicontact(phi_sum, a, dryfric::detail::stacked_gradients(contacts)));

  const auto& rs = scenario.regularity;
  const auto grid = default_k_grid(rs.k_points, rs.k_min, rs.k_max);
  std::vector<Vector> vs = sample_admissible_velocities(contacts, rs.samples, seed);
  const Vector residual = dryfric::detail::stacked_gradients(contacts) * state.v();
  const bool state_admissible =
      residual.cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, state.v().norm());
  if (state_admissible) vs.insert(vs.begin(), state.v());
  const RegularityReport reg = regularity_check(contacts, a, vs, grid);
  nlohmann::json rj{{"regular", reg.regular},
                    {"samples", reg.samples},
                    {"includes_state_velocity", state_admissible},
                    {"k_grid", reg.k_grid},
                    {"min_det", reg.min_det},
                    {"min_relative_det", reg.min_relative_det},
                    {"necessary_det", reg.necessary_det},
                    {"necessary_holds", reg.necessary_holds}};
  if (reg.witness) rj["witness"] = vector_json(*reg.witness);
  if (reg.witness_k) rj["witness_k"] = *reg.witness_k;
  doc["regularity"] = rj;

  if (model.name == "cushion") {
    const double mu5 = scenario.table_tensor(1, 1);
    const double nu3 = scenario.cushion_tensor(2, 2);
    double max_rel = 0.0;
    bool positive = true;
    for (const auto& v : vs) {
      for (double k : grid) {
        const double formula =
            cushion_triangular_regularity_det(scenario.cushion, mu5, nu3, k, v(3));
        const double numeric = regularity_matrix(contacts, a, v, k).determinant();
        max_rel = std::max(max_rel, std::abs(numeric - formula) / std::abs(formula));
        positive = positive && formula > 0.0;
      }
    }
    const double wx = state.v()(3);
    doc["triangular_determinant"] = {
        {"form", "(1 + k^2 R^2 mu5 nu3 omega_x^2) / m^2"},
        {"mu5", mu5},
        {"nu3", nu3},
        {"omega_x", wx},
        {"at_k_min", cushion_triangular_regularity_det(scenario.cushion, mu5, nu3,
                                                       grid.front(), wx)},
        {"at_k_max", cushion_triangular_regularity_det(scenario.cushion, mu5, nu3,
                                                       grid.back(), wx)},
        {"always_positive", positive},
        {"max_rel_diff_numeric", max_rel}};
  }
  return doc;
}

// --- entry point ----------------------------------------------------------------

struct Flags {
  std::string scenario;
  std::uint64_t seed = 0;
  std::optional<double> dt;
  std::optional<double> t_end;
  std::string out;
  std::string format = "csv";
  std::string mu_range;
  std::string theta_range;
};

inline Scenario load_with_overrides(const Flags& f) {
  Scenario s = load_scenario(f.scenario);
  if (f.dt) s.integration.dt = *f.dt;
  if (f.t_end) s.integration.t_end = *f.t_end;
  try {
    s.integration.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
  return s;
}

inline int cmd_simulate(const Flags& f, std::ostream& out, std::ostream& err) {
  const Scenario s = load_with_overrides(f);
  const MechanicalModel model = build_model(s);
  const GeneralizedState x0 = initial_state(s);
  const std::string path = f.out.empty() ? s.trajectory_path : f.out;
  try {
    const SimulationResult r = simulate(model, x0, s.integration);
    write_trajectory(s, model, r, f.format, path, out);
    print_summary(r, err);
  } catch (const SimulationParadox& e) {
    write_trajectory(s, model, e.prefix(), f.format, path, out);
    print_summary(e.prefix(), err);
    throw;
  }
  return kExitOk;
}

inline int cmd_check_tensor(const Flags& f, std::ostream& out, std::ostream&) {
  if (f.format != "json") throw ConfigError("check-tensor: only --format json");
  const Scenario s = load_with_overrides(f);
  const MechanicalModel model = build_model(s);
  const nlohmann::json doc = check_tensor_report(s, model, initial_state(s), f.seed);
  emit(f.out, out, [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
  return kExitOk;
}

inline std::string critical_path(const std::string& out) {
  const auto dot = out.rfind('.');
  const auto slash = out.rfind('/');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
    return out.substr(0, dot) + ".critical" + out.substr(dot);
  }
  return out + ".critical.csv";
}

inline int cmd_paradox_scan(const Flags& f, std::ostream& out, std::ostream& err) {
  const Scenario s = load_with_overrides(f);
  if (s.model != "painleve") throw ConfigError("paradox-scan: painleve model only");
  const auto& c = s.scan;
  const Range mu = f.mu_range.empty() ? Range{c.mu_min, c.mu_max, c.mu_points}
                                      : parse_range(f.mu_range, "--mu-range");
  const Range theta = f.theta_range.empty()
                          ? Range{c.theta_min, c.theta_max, c.theta_points}
                          : parse_range(f.theta_range, "--theta-range");
  if (!(mu.lo >= 0.0)) throw ConfigError("--mu-range: mu must be >= 0");
  const ParadoxScanResult r = paradox_scan(s.painleve, mu, theta, c.sigma);

  emit(f.out, out, [&](std::ostream& os) {
    if (f.format == "json") {
      nlohmann::json grid = nlohmann::json::array();
      for (const auto& row : r.grid) {
        grid.push_back({{"mu", row.mu}, {"theta", row.theta},
                        {"denominator", row.denominator}});
      }
      nlohmann::json crit = nlohmann::json::array();
      for (const auto& cp : r.critical) {
        crit.push_back({{"theta", cp.theta},
                        {"mu_critical", std::isfinite(cp.mu) ? nlohmann::json(cp.mu)
                                                             : nlohmann::json(nullptr)}});
      }
      os << nlohmann::json{{"sigma", r.sigma},
                           {"grid", grid},
                           {"critical", crit},
                           {"mu_star", r.mu_star},
                           {"theta_star", r.theta_star},
                           {"mu_star_formula", r.mu_star_formula},
                           {"min_denominator_at_formula", r.min_denominator_at_formula}}
                .dump(2)
         << '\n';
      return;
    }
    os << "mu,theta,sigma,denominator,consistent\n";
    for (const auto& row : r.grid) {
      os << fmt(row.mu) << ',' << fmt(row.theta) << ',' << fmt(r.sigma) << ','
         << fmt(row.denominator) << ',' << (row.denominator > 1e-9 ? 1 : 0) << '\n';
    }
  });
  if (f.format == "csv" && !f.out.empty()) {
    emit(critical_path(f.out), out, [&](std::ostream& os) {
      os << "theta,sigma,mu_critical\n";
      for (const auto& cp : r.critical) {
        if (!std::isfinite(cp.mu)) continue;
        os << fmt(cp.theta) << ',' << fmt(r.sigma) << ',' << fmt(cp.mu) << '\n';
      }
    });
  }
  err << "mu_star: " << fmt(r.mu_star) << " at theta " << fmt(r.theta_star) << '\n';
  err << "mu_star_formula: " << fmt(r.mu_star_formula) << '\n';
  err << "min_denominator_at_formula: " << fmt(r.min_denominator_at_formula)
      << " at theta " << fmt(r.theta_at_formula) << '\n';
  return kExitOk;
}

inline int cmd_frenchman(const Flags& f, std::ostream& out, std::ostream& err) {
  const Scenario s = load_with_overrides(f);
  if (s.model != "cushion" || !s.frenchman) {
    throw ConfigError("frenchman: needs a cushion scenario with a 'frenchman' section");
  }
  const FrenchmanComparison c =
      compare_frenchman(s.cushion, *s.frenchman, s.integration, build_model(s));
  const char* names[4] = {"x_dot", "omega_x", "omega_y", "omega_z"};
  emit(f.out, out, [&](std::ostream& os) {
    if (f.format == "json") {
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& r : c.rows) {
        nlohmann::json row{{"t", r.t}};
        for (int k = 0; k < 4; ++k) {
          row[std::string(names[k]) + "_numeric"] = r.numeric(k);
          row[std::string(names[k]) + "_analytic"] = r.analytic(k);
        }
        rows.push_back(row);
      }
      os << nlohmann::json{{"rows", rows},
                           {"max_rel_error", c.max_rel},
                           {"T_formula", c.t_formula},
                           {"T_event", c.t_event},
                           {"J_drift", c.j_drift}}
                .dump(2)
         << '\n';
      return;
    }
    os << "t";
    for (const char* n : names) os << ',' << n << "_numeric," << n << "_analytic";
    os << '\n';
    for (const auto& r : c.rows) {
      os << fmt(r.t);
      for (int k = 0; k < 4; ++k) os << ',' << fmt(r.numeric(k)) << ',' << fmt(r.analytic(k));
      os << '\n';
    }
  });
  for (int k = 0; k < 4; ++k) {
    err << "max_rel_error " << names[k] << ": " << fmt(c.max_rel_error(k)) << '\n';
  }
  err << "max_rel_error: " << fmt(c.max_rel) << '\n';
  err << "T_formula: " << fmt(c.t_formula) << '\n';
  err << "T_event: " << fmt(c.t_event) << '\n';
  err << "T_difference: " << fmt(std::abs(c.t_event - c.t_formula))
      << " (limit " << fmt(2.0 * c.event_tol) << ")\n";
  err << "J_drift: " << fmt(c.j_drift) << '\n';
  return kExitOk;
}

/// Parses `args` (without the program name) and runs the subcommand.
inline int run(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"Dry-friction rigid-body dynamics", "dryfric"};
  app.require_subcommand(1);
  Flags f;
  auto common = [&](CLI::App* sub, bool ranges) {
    sub->add_option("scenario", f.scenario, "Scenario file (JSON)")->required();
    sub->add_option("--seed", f.seed, "Seed for sampled velocities");
    sub->add_option("--dt", f.dt, "Step size override");
    sub->add_option("--t-end", f.t_end, "Integration horizon override");
    sub->add_option("--out", f.out, "Output path (default: stdout)");
    sub->add_option("--format", f.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    if (ranges) {
      sub->add_option("--mu-range", f.mu_range, "lo:hi:n");
      sub->add_option("--theta-range", f.theta_range, "lo:hi:n");
    }
  };
  CLI::App* sim = app.add_subcommand("simulate", "Integrate a scenario");
  CLI::App* chk = app.add_subcommand("check-tensor", "Friction tensor conditions");
  CLI::App* scan = app.add_subcommand("paradox-scan", "Classical-law denominator scan");
  CLI::App* fr = app.add_subcommand("frenchman", "Frenchman stroke comparison");
  common(sim, false);
  common(chk, false);
  common(scan, true);
  common(fr, false);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    if (std::find(args.begin(), args.end(), "check-tensor") != args.end()) {
      f.format = "json";
    }
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sim->parsed()) return cmd_simulate(f, out, err);
    if (chk->parsed()) return cmd_check_tensor(f, out, err);
    if (scan->parsed()) return cmd_paradox_scan(f, out, err);
    return cmd_frenchman(f, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const PainleveParadox& e) {
    err << "Painleve paradox: " << e.what();
    for (const auto& [k, v] : e.context()) err << ' ' << k << '=' << fmt(v);
    err << '\n';
    return kExitParadox;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const GimbalDegeneracy& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ContractViolation& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace dryfric::cli
