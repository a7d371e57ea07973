// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dryfric/cli/commands.hpp"
#include "dryfric/engine.hpp"
#include "dryfric/friction_law.hpp"
#include "dryfric/models/ball_plane.hpp"
#include "dryfric/models/cushion.hpp"
#include "dryfric/models/painleve.hpp"
#include "dryfric/multiplier_solver.hpp"
#include "oracles.hpp"
#include "random_instances.hpp"

using namespace dryfric;
namespace fs = std::filesystem;

namespace {

std::string scenario(const std::string& name) {
  return std::string(DRYFRIC_SCENARIO_DIR) + "/" + name;
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

/// Accumulates sub-checks and a one-line summary.
class Verdict {
 public:
  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      failures_.push_back(what);
    }
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool pass() const { return pass_; }
  std::string summary() const {
    std::string out;
    for (const auto& n : notes_) out += (out.empty() ? "" : ", ") + n;
    for (const auto& f : failures_) out += (out.empty() ? "" : "; ") + std::string("FAILED ") + f;
    return out;
  }

 private:
  bool pass_ = true;
  std::vector<std::string> notes_;
  std::vector<std::string> failures_;
};

bool has_label(const SimulationResult& r, const std::string& label, double* t) {
  for (const auto& e : r.events) {
    if (std::find(e.labels.begin(), e.labels.end(), label) != e.labels.end()) {
      *t = e.t;
      return true;
    }
  }
  return false;
}

// --- 1 ------------------------------------------------------------------------

void painleve_paradox(Verdict& v) {
  std::ostringstream out, err;
  const int code = cli::run({"paradox-scan", scenario("painleve_scan.json")}, out, err);
  v.check(code == 0, "paradox-scan exit code " + std::to_string(code));
  const std::string log = err.str();
  const auto read = [&](const std::string& key) {
    const auto pos = log.find(key + ": ");
    return pos == std::string::npos ? std::nan("")
                                    : std::stod(log.substr(pos + key.size() + 2));
  };
  const double mu_star = read("mu_star");
  const double den = read("min_denominator_at_formula");
  v.note("mu* = " + cli::fmt(mu_star));
  v.check(std::abs(mu_star - std::sqrt(8.0)) <= 1e-6, "mu* within 1e-6 of sqrt(8)");
  v.check(std::abs(den) <= 1e-9, "denominator at sqrt(8) is " + num(den));

  // Brute force over the scan grid: smallest mu with a non-positive
  // denominator.
  PainleveParams p;
  double grid_min = INFINITY;
  for (int i = 0; i <= 20000; ++i) {
    const double th = std::numbers::pi * i / 20000;
    for (double sigma : {-1.0, 1.0}) {
      const double d0 = 2 * p.m1 + p.m2 * (1 + std::cos(2 * th));
      const double s = p.m2 * sigma * std::sin(2 * th);
      if (s < 0) grid_min = std::min(grid_min, -d0 / s);
    }
  }
  v.check(std::abs(grid_min - mu_star) < 1e-6, "independent grid minimum " + cli::fmt(grid_min));

  double worst = 0.0;
  for (int k = 0; k <= 1000; ++k) {
    const double mu = 0.1 * k;
    p.kappa1 = p.mu2 = mu;
    p.law = PainleveLaw::kTensor;
    const MechanicalModel m = painleve_model(p);
    for (double th : {0.1, 0.5, 0.9, 1.3, 1.8, 2.4, 3.0}) {
      for (double xd : {-2.0, 1.0}) {
        for (double thd : {-1.0, 0.0, 0.8}) {
          const double ref = painleve_lambda_frictionless(p, th, thd);
          if (ref <= 0.0) continue;
          Vector q(3), vel(3);
          q << 0, th, 0;
          vel << xd, thd, 0;
          const auto sol =
              solve_multipliers(assemble_multiplier_system(m, GeneralizedState(q, vel), true, 1e-12));
          worst = std::max(worst, std::abs(sol.lambdas(0) - ref) / ref);
        }
      }
    }
  }
  v.note("tensor-law max rel dev " + num(worst));
  v.check(worst <= 1e-12, "tensor-law lambda deviates by " + num(worst));
}

// --- 2 ------------------------------------------------------------------------

void ball_on_plane(Verdict& v) {
  const BallParams b = BallParams::isotropic(0.2, 0.034, 9.81, 0.2);
  Vector q = Vector::Zero(6), vel(6);
  q(2) = b.R;
  vel << 1.0, 0.3, 0.0, 5.0, -2.0, 7.0;
  IntegrationConfig cfg;
  cfg.dt = 1e-4;
  cfg.t_end = 10.0;
  const GeneralizedState s0(q, vel);
  const SimulationResult r = simulate(ball_plane_model(b), s0, cfg);

  const double mg = b.m * b.g;
  double lam_dev = 0.0;
  for (const auto& s : r.samples) lam_dev = std::max(lam_dev, std::abs(s.lambdas(0) - mg));
  v.note("samples " + std::to_string(r.samples.size()));
  v.note("max |lambda - mg| " + num(lam_dev));
  v.check(lam_dev <= 1e-12 * mg, "lambda = mg");
  v.check(r.samples.size() >= 100001, "a sample at every step");

  const MonitorReport mon = monitor_report(r);
  double drift = 0.0;
  for (const char* k : {"percussion_x", "percussion_y", "omega_z"}) {
    drift = std::max(drift, mon.invariants.at(k).max_rel);
  }
  v.note("invariant drift " + num(drift));
  v.check(drift < 1e-9, "invariant drift");

  double t_stick = 0.0;
  const bool stuck = has_label(r, "table:stick", &t_stick);
  v.check(stuck, "stick event");
  if (!stuck) return;
  const Vector slip0 = ball_table_projection(b.R) * vel;
  const double t_ref = oracle::ball_stick_time(0.2, b.g, slip0(0), slip0(1));
  v.note("t_stick " + cli::fmt(t_stick));
  v.check(std::abs(t_stick - t_ref) < cfg.stick_eps / (3.5 * 0.2 * b.g) + 2 * cfg.event_tol,
          "stick time vs closed form " + cli::fmt(t_ref));

  // Straight-line rolling: no slip, constant velocity, collinear positions.
  const Vector u0 = percussion_center_velocity(b, s0);
  const auto& last = r.samples.back();
  v.check(last.modes[0].is_sticking(), "final mode stick");
  v.check(std::abs(last.state.v()(0) - oracle::ball_rolling_speed(u0(0))) < 1e-9 &&
              std::abs(last.state.v()(1) - oracle::ball_rolling_speed(u0(1))) < 1e-9,
          "rolling velocity");
  const TrajectorySample* first_roll = nullptr;
  double worst_v = 0.0, worst_slip = 0.0, worst_line = 0.0;
  for (const auto& s : r.samples) {
    if (s.state.t() <= t_stick + cfg.dt) continue;
    if (!first_roll) first_roll = &s;
    worst_v = std::max(worst_v, (s.state.v().head(2) - first_roll->state.v().head(2)).norm());
    worst_slip = std::max(worst_slip, (ball_table_projection(b.R) * s.state.v()).norm());
    const Eigen::Vector2d d = s.state.q().head(2) - first_roll->state.q().head(2);
    const Eigen::Vector2d u = first_roll->state.v().head(2).normalized();
    worst_line = std::max(worst_line, std::abs(d(0) * u(1) - d(1) * u(0)));
  }
  v.check(worst_v < 1e-12, "constant velocity after stick (" + num(worst_v) + ")");
  v.check(worst_slip < cfg.stick_eps, "no slip after stick");
  v.check(worst_line < 1e-9, "straight path (" + num(worst_line) + ")");
}

// --- 3 ------------------------------------------------------------------------

void cushion_multipliers(Verdict& v) {
  CushionParams cp;
  const auto lam = cushion_lambdas(cp, 30.0, 1.0, 0.0, 0.0);
  const Eigen::Vector2d ref =
      oracle::cushion_normal_reactions(cp.m, cp.R, cp.g, cp.mu_table, cp.mu_cushion, 1.0, 30.0,
                                       0.0, 0.0);
  v.note("cushion " + cli::fmt(lam.cushion));
  v.note("table " + cli::fmt(lam.table));
  v.check(std::abs(lam.cushion - 0.26405) < 5e-6, "cushion ~ 0.26405");
  v.check(std::abs(lam.table - 1.84887) < 5e-6, "table ~ 1.84887");
  v.check(std::abs(lam.cushion - ref(0)) <= 1e-10 && std::abs(lam.table - ref(1)) <= 1e-10,
          "agreement with 2x2 solve");

  const double h = 1e-6;
  auto diff = [&](double CushionParams::*field) {
    CushionParams lo = cp, hi = cp;
    lo.*field -= h;
    hi.*field += h;
    const auto a = cushion_lambdas(lo, 30.0, 1.0, 0.0, 0.0);
    const auto b = cushion_lambdas(hi, 30.0, 1.0, 0.0, 0.0);
    return Eigen::Vector2d((b.cushion - a.cushion) / (2 * h), (b.table - a.table) / (2 * h));
  };
  const Eigen::Vector2d dt = diff(&CushionParams::mu_table);
  const Eigen::Vector2d dc = diff(&CushionParams::mu_cushion);
  v.note("dlambda/dmu_table (" + num(dt(0)) + ", " + num(dt(1)) + ")");
  v.note("dlambda/dmu_cushion (" + num(dc(0)) + ", " + num(dc(1)) + ")");
  v.check(dt.cwiseAbs().minCoeff() > 1e-3, "dlambda/dmu_table nonzero");
  v.check(dc.cwiseAbs().minCoeff() > 1e-3, "dlambda/dmu_cushion nonzero");
}

// --- 4 ------------------------------------------------------------------------

void frenchman_stroke(Verdict& v) {
  const cli::Scenario s = cli::load_scenario(scenario("cushion_frenchman.json"));
  const auto c = cli::compare_frenchman(s.cushion, *s.frenchman, s.integration, cli::build_model(s));
  const double t_sub = oracle::frenchman_time_by_substitution(
      s.cushion.R, s.cushion.g, s.cushion.mu_table, s.cushion.mu_cushion,
      s.frenchman->omega_x0, s.frenchman->branch);
  v.note("max rel error " + num(c.max_rel));
  v.note("T " + cli::fmt(c.t_formula));
  v.note("T_event - T " + num(c.t_event - c.t_formula));
  v.note("J drift " + num(c.j_drift));
  v.check(c.max_rel <= 1e-6, "velocities within 1e-6");
  v.check(std::abs(c.t_formula - 0.24418) < 5e-6, "T ~ 0.24418");
  v.check(std::abs(c.t_formula - t_sub) < 1e-12, "T vs substitution");
  v.check(std::abs(c.t_event - c.t_formula) <= 2 * c.event_tol, "event time");
  v.check(c.j_drift < 1e-9, "J drift");
}

// --- 5 ------------------------------------------------------------------------

void regularity_suite(Verdict& v) {
  const auto grid = default_k_grid();
  std::mt19937_64 rng(2024);
  int agree = 0, regular = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto rc = randinst::random_contact(rng, 5);
    const InertiaMatrix a(rc.a);
    const Matrix q = contact_mobility(rc.p, a);
    const Matrix phi = trial % 2 == 0 ? randinst::aligned_tensor(rng, q, rc.n)
                                      : randinst::random_psd_tensor(rng, 3);
    const ContactFrictionTensor tensor(phi);
    const std::vector<Contact> cs{Contact(rc.p, rc.n, tensor)};
    const auto vs = sample_admissible_velocities(cs, 20, static_cast<std::uint64_t>(trial));
    const bool reg = regularity_check(cs, a, vs, grid).regular;
    agree += reg == check_theorem1_alignment(tensor, q, rc.n).holds;
    regular += reg;
  }
  v.note("single-contact equivalence " + std::to_string(agree) + "/100 (" +
         std::to_string(regular) + " regular)");
  v.check(agree == 100, "single-contact equivalence");

  const CushionParams cp;
  int tri_ok = 0;
  double tri_dev = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto [pc, pt] = randinst::triangular_cushion_tensors(rng);
    const MechanicalModel m = cushion_model(cp, pc, pt);
    const auto cs = m.contacts(Vector::Zero(6));
    const InertiaMatrix a = m.inertia(Vector::Zero(6));
    const auto vs = sample_admissible_velocities(cs, 50, static_cast<std::uint64_t>(trial));
    tri_ok += regularity_check(cs, a, vs, grid).regular;
    for (const auto& vel : vs) {
      for (double k : grid) {
        const double f = cushion_triangular_regularity_det(cp, pt(1, 1), pc(2, 2), k, vel(3));
        tri_dev = std::max(tri_dev, std::abs(regularity_matrix(cs, a, vel, k).determinant() - f) / f);
      }
    }
  }
  const cli::Scenario tri = cli::load_scenario(scenario("cushion_triangular.json"));
  {
    const MechanicalModel m = cli::build_model(tri);
    const auto st = cli::initial_state(tri);
    const auto cs = m.contacts(st.q());
    auto vs = sample_admissible_velocities(cs, 200, 1);
    vs.push_back(st.v());
    tri_ok += regularity_check(cs, m.inertia(st.q()), vs, grid).regular;
  }
  v.note("triangular regular " + std::to_string(tri_ok) + "/101");
  v.check(tri_ok == 101, "triangular tensors regular");
  v.check(tri_dev < 1e-9, "triangular determinant matches closed form (" + num(tri_dev) + ")");

  int iso_ok = 0;
  for (int trial = 0; trial < 20; ++trial) {
    CushionParams ic;
    ic.mu_table = 0.05 + 0.05 * trial;
    ic.mu_cushion = 1.2 - 0.05 * trial;
    const MechanicalModel m = cushion_model(ic);
    const auto cs = m.contacts(Vector::Zero(6));
    const auto vs = sample_admissible_velocities(cs, 50, static_cast<std::uint64_t>(100 + trial));
    iso_ok += regularity_check(cs, m.inertia(Vector::Zero(6)), vs, grid).regular;
  }
  v.note("isotropic regular " + std::to_string(iso_ok) + "/20");
  v.check(iso_ok == 20, "isotropic tensors regular");
}

// --- 6 ------------------------------------------------------------------------

double cushion_euler_error(double dt) {
  const CushionParams cp;
  const auto c0 = frenchman_analytic(cp, 1.0, 30.0, 1, 0.0);
  Vector omega(3);
  omega << c0.omega_x, c0.omega_y, c0.omega_z;
  const auto s0 = cushion_euler_state(cp, c0.xdot, omega, 0.3, std::numbers::pi / 2, 0.0);
  IntegrationConfig cfg;
  cfg.dt = dt;
  cfg.t_end = 0.01;
  cfg.stick_eps = 1e-10;
  const auto r = simulate(cushion_model_euler(cp), s0, cfg);
  const auto& last = r.samples.back().state;
  const Vector w = cushion_euler_omega(last);
  const Eigen::Vector4d ref = oracle::frenchman_velocities(cp.R, cp.g, cp.mu_table,
                                                           cp.mu_cushion, 1.0, 30.0, 1, last.t());
  return Eigen::Vector4d(last.v()(0) - ref(0), w(0) - ref(1), w(1) - ref(2), w(2) - ref(3))
      .norm();
}

void property_suite(Verdict& v) {
  double worst_power = 0.0;
  std::size_t steps = 0, runs = 0;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(DRYFRIC_SCENARIO_DIR)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f);
    const auto doc = nlohmann::json::parse(in);
    if (!doc.contains("initial_state") && !doc.contains("frenchman")) continue;
    cli::Scenario s = cli::load_scenario(f.string());
    s.integration.sample_every = 1;
    SimulationResult r;
    try {
      r = simulate(cli::build_model(s), cli::initial_state(s), s.integration);
    } catch (const SimulationParadox& e) {
      r = e.prefix();
    }
    ++runs;
    steps += r.samples.size();
    worst_power = std::max(worst_power, monitor_report(r).max_power_residual);
  }
  v.note("power residual " + num(worst_power) + " over " + std::to_string(steps) +
         " steps in " + std::to_string(runs) + " scenarios");
  v.check(worst_power <= 1e-12, "power balance");

  std::mt19937_64 rng(77);
  double kernel = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index r = 1 + trial % 4, n = r + 1 + trial % 5;
    const Matrix p = randinst::gaussian(rng, r, n);
    const Matrix lifted =
        lift_contact_tensor(p, ContactFrictionTensor(randinst::random_psd_tensor(rng, r)));
    Eigen::FullPivLU<Eigen::MatrixXd> lu(p);
    const Eigen::MatrixXd ker = lu.kernel();
    const double scale = std::max(1.0, lifted.norm());
    kernel = std::max({kernel, (lifted * ker).norm() / scale,
                       (ker.transpose() * lifted).norm() / scale});
  }
  v.note("kernel residual " + num(kernel));
  v.check(kernel < 1e-12, "kernel property");

  int agree = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto rc = randinst::random_contact(rng, 5);
    const InertiaMatrix a(rc.a);
    const Matrix q = contact_mobility(rc.p, a);
    const ContactFrictionTensor tensor(trial % 2 == 0 ? randinst::aligned_tensor(rng, q, rc.n)
                                                      : randinst::random_psd_tensor(rng, 3));
    const Contact c(rc.p, rc.n, tensor);
    agree += check_condition_i(lift_contact_tensor(rc.p, tensor), a, c.gradient()).holds ==
             check_theorem1_alignment(tensor, q, rc.n).holds;
  }
  v.note("condition-i equivalence " + std::to_string(agree) + "/200");
  v.check(agree == 200, "condition-i equivalence");

  const double e1 = cushion_euler_error(2e-3), e2 = cushion_euler_error(1e-3),
               e3 = cushion_euler_error(5e-4);
  const double f1 = oracle::convergence_factor(e1, e2), f2 = oracle::convergence_factor(e2, e3);
  v.note("RK4 factors " + num(f1) + ", " + num(f2));
  v.check(f1 >= 12 && f1 <= 20 && f2 >= 12 && f2 <= 20, "RK4 convergence factor");
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;  // 0: none
  std::function<void(Verdict&)> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "painleve_paradox", 5.0, painleve_paradox},
      {2, "ball_on_plane", 10.0, ball_on_plane},
      {3, "cushion_multipliers", 0.0, cushion_multipliers},
      {4, "frenchman_stroke", 10.0, frenchman_stroke},
      {5, "regularity_suite", 30.0, regularity_suite},
      {6, "property_suite", 0.0, property_suite},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.body(v);
    } catch (const std::exception& e) {
      v.check(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0) v.check(secs < c.limit_s, "runtime limit " + num(c.limit_s) + " s");
    failed += !v.pass();
    std::printf("%s %d %s (%.2f s): %s\n", v.pass() ? "PASS" : "FAIL", c.id, c.name, secs,
                v.summary().c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
