#pragma once

// Scenario files: one JSON document per scenario.
//
//   {
//     "model": "painleve" | "ball_plane" | "cushion",
//     "law": "tensor" | "classical",            (painleve only)
//     "parameters": { name: number, ... },
//     "initial_state": { name: number, ... },
//     "integration": { "dt", "t_end", "stick_eps", "event_tol", "method",
//                      "singularity_tol", "drift_limit", "sample_every" },
//     "outputs": { "trajectory": path, "columns": [group, ...] },
//     "frenchman": { "v0", "omega_x0", "branch" },   (cushion only)
//     "regularity": { "samples", "k_min", "k_max", "k_points" },
//     "scan": { "mu_min", "mu_max", "mu_points", "theta_min", "theta_max",
//               "theta_points", "sigma" }              (painleve only)
//   }
//
// Unknown keys anywhere are rejected.

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dryfric/engine.hpp"
#include "dryfric/models/ball_plane.hpp"
#include "dryfric/models/cushion.hpp"
#include "dryfric/models/painleve.hpp"

namespace dryfric::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& column_groups() {
  static const std::vector<std::string> groups{
      "t",      "q",      "v",           "lambda",        "mode",
      "friction_power", "power_residual", "contact_power", "invariants",
      "energy"};
  return groups;
}

inline const std::vector<std::string>& default_column_groups() {
  static const std::vector<std::string> groups{
      "t", "q", "v", "lambda", "mode", "friction_power", "power_residual",
      "invariants"};
  return groups;
}

struct FrenchmanSpec {
  double v0 = 1.0;
  double omega_x0 = 30.0;
  int branch = 1;
};

struct RegularitySpec {
  std::size_t samples = 200;
  double k_min = 1e-3;
  double k_max = 1e3;
  std::size_t k_points = 25;
};

struct ScanSpec {
  double mu_min = 0.0;
  double mu_max = 5.0;
  std::size_t mu_points = 101;
  double theta_min = 0.0;
  double theta_max = 3.141592653589793;
  std::size_t theta_points = 181;
  double sigma = 1.0;
};

struct Scenario {
  std::string model;
  PainleveParams painleve;
  BallParams ball;
  CushionParams cushion;
  Matrix cushion_tensor;  // 3x3, cushion contact
  Matrix table_tensor;    // 3x3, table contact (cushion model)
  bool triangular = false;
  std::map<std::string, double> initial;
  IntegrationConfig integration;
  std::string trajectory_path;
  std::vector<std::string> columns = default_column_groups();
  std::optional<FrenchmanSpec> frenchman;
  RegularitySpec regularity;
  ScanSpec scan;
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::string& where,
                           const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

inline double number(const nlohmann::json& obj, const std::string& where,
                     const std::string& key) {
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return v.get<double>();
}

inline std::size_t count(const nlohmann::json& obj, const std::string& where,
                         const std::string& key) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 1) {
    throw ConfigError(where + "." + key + ": expected a positive integer");
  }
  return v.get<std::size_t>();
}

/// Copies named scalars into `out`, requiring `required` and rejecting
/// anything outside required + optional.
inline std::map<std::string, double> scalars(
    const nlohmann::json& obj, const std::string& where,
    const std::vector<std::string>& required,
    const std::vector<std::string>& optional) {
  std::set<std::string> allowed(required.begin(), required.end());
  allowed.insert(optional.begin(), optional.end());
  reject_unknown(obj, where, allowed);
  std::map<std::string, double> out;
  for (const auto& key : required) {
    if (!obj.contains(key)) {
      throw ConfigError(where + ": missing required key '" + key + "'");
    }
  }
  for (const auto& [key, value] : obj.items()) out[key] = number(obj, where, key);
  return out;
}

inline double get(const std::map<std::string, double>& m, const std::string& key,
                  double fallback) {
  const auto it = m.find(key);
  return it == m.end() ? fallback : it->second;
}

inline void parse_parameters(const nlohmann::json& doc, Scenario& s) {
  const nlohmann::json params =
      doc.contains("parameters") ? doc.at("parameters") : nlohmann::json::object();
  if (s.model == "painleve") {
    const auto m = scalars(params, "parameters", {"m1", "m2", "l", "g", "kappa1"},
                           {"kappa2", "mu2"});
    auto& p = s.painleve;
    p.m1 = m.at("m1");
    p.m2 = m.at("m2");
    p.l = m.at("l");
    p.g = m.at("g");
    p.kappa1 = m.at("kappa1");
    p.kappa2 = get(m, "kappa2", 0.0);
    p.mu2 = get(m, "mu2", p.kappa1);
    const std::string law = doc.value("law", std::string("tensor"));
    if (law == "tensor") {
      p.law = PainleveLaw::kTensor;
    } else if (law == "classical") {
      p.law = PainleveLaw::kClassical;
    } else {
      throw ConfigError("law: expected 'tensor' or 'classical', got '" + law + "'");
    }
  } else if (s.model == "ball_plane") {
    const auto m = scalars(params, "parameters", {"m", "R", "g"},
                           {"mu", "kappa1", "kappa2", "kappa3", "mu1", "mu2",
                            "mu3", "nu"});
    auto& p = s.ball;
    if (m.count("mu")) {
      for (const char* k : {"kappa1", "kappa2", "kappa3", "mu1", "mu2", "mu3", "nu"}) {
        if (m.count(k)) {
          throw ConfigError(std::string("parameters: 'mu' excludes '") + k + "'");
        }
      }
      p = BallParams::isotropic(m.at("m"), m.at("R"), m.at("g"), m.at("mu"));
    } else {
      for (const char* k : {"kappa1", "mu2", "nu"}) {
        if (!m.count(k)) {
          throw ConfigError(std::string("parameters: need 'mu' or '") + k + "'");
        }
      }
      p.m = m.at("m");
      p.R = m.at("R");
      p.g = m.at("g");
      p.kappa1 = m.at("kappa1");
      p.kappa2 = get(m, "kappa2", 0.0);
      p.kappa3 = get(m, "kappa3", 0.0);
      p.mu1 = get(m, "mu1", 0.0);
      p.mu2 = m.at("mu2");
      p.mu3 = get(m, "mu3", 0.0);
      p.nu = m.at("nu");
    }
  } else {
    // Optional triangular-family entries: cushion (kappa1..3, mu2, nu2, nu3),
    // table (kappa4..6, mu5, mu6, nu6). Omitted diagonal entries default to
    // the isotropic coefficients.
    const std::vector<std::string> tri{"kappa1", "kappa2", "kappa3", "mu2",
                                       "nu2",    "nu3",    "kappa4", "kappa5",
                                       "kappa6", "mu5",    "mu6",    "nu6"};
    const auto m = scalars(params, "parameters",
                           {"m", "R", "g", "mu_table", "mu_cushion"}, tri);
    auto& p = s.cushion;
    p.m = m.at("m");
    p.R = m.at("R");
    p.g = m.at("g");
    p.mu_table = m.at("mu_table");
    p.mu_cushion = m.at("mu_cushion");
    const double mc = p.mu_cushion, mt = p.mu_table;
    s.cushion_tensor.resize(3, 3);
    s.cushion_tensor << get(m, "kappa1", mc), get(m, "kappa2", 0.0), get(m, "kappa3", 0.0),
                        0.0, get(m, "mu2", mc), 0.0,
                        0.0, get(m, "nu2", 0.0), get(m, "nu3", mc);
    s.table_tensor.resize(3, 3);
    s.table_tensor << get(m, "kappa4", mt), get(m, "kappa5", 0.0), get(m, "kappa6", 0.0),
                      0.0, get(m, "mu5", mt), get(m, "mu6", 0.0),
                      0.0, 0.0, get(m, "nu6", mt);
    for (const auto& k : tri) s.triangular = s.triangular || m.count(k) > 0;
  }
}

inline void parse_integration(const nlohmann::json& doc, Scenario& s) {
  if (!doc.contains("integration")) return;
  const auto& obj = doc.at("integration");
  reject_unknown(obj, "integration",
                 {"dt", "t_end", "stick_eps", "event_tol", "method",
                  "singularity_tol", "drift_limit", "sample_every"});
  auto& c = s.integration;
  const std::string w = "integration";
  if (obj.contains("dt")) c.dt = number(obj, w, "dt");
  if (obj.contains("t_end")) c.t_end = number(obj, w, "t_end");
  if (obj.contains("stick_eps")) c.stick_eps = number(obj, w, "stick_eps");
  if (obj.contains("event_tol")) c.event_tol = number(obj, w, "event_tol");
  if (obj.contains("singularity_tol")) {
    c.singularity_tol = number(obj, w, "singularity_tol");
  }
  if (obj.contains("drift_limit")) c.drift_limit = number(obj, w, "drift_limit");
  if (obj.contains("sample_every")) c.sample_every = count(obj, w, "sample_every");
  if (obj.contains("method")) {
    const auto& m = obj.at("method");
    if (m == "rk4") {
      c.method = Integrator::kRK4;
    } else if (m == "midpoint") {
      c.method = Integrator::kMidpoint;
    } else {
      throw ConfigError("integration.method: expected 'rk4' or 'midpoint'");
    }
  }
}

inline void parse_outputs(const nlohmann::json& doc, Scenario& s) {
  if (!doc.contains("outputs")) return;
  const auto& obj = doc.at("outputs");
  reject_unknown(obj, "outputs", {"trajectory", "columns"});
  if (obj.contains("trajectory")) {
    if (!obj.at("trajectory").is_string()) {
      throw ConfigError("outputs.trajectory: expected a path");
    }
    s.trajectory_path = obj.at("trajectory").get<std::string>();
  }
  if (obj.contains("columns")) {
    const auto& cols = obj.at("columns");
    if (!cols.is_array() || cols.empty()) {
      throw ConfigError("outputs.columns: expected a non-empty array");
    }
    s.columns.clear();
    const auto& known = column_groups();
    for (const auto& c : cols) {
      if (!c.is_string() ||
          std::find(known.begin(), known.end(), c.get<std::string>()) == known.end()) {
        throw ConfigError("outputs.columns: unknown column group " + c.dump());
      }
      s.columns.push_back(c.get<std::string>());
    }
  }
}

inline void parse_sections(const nlohmann::json& doc, Scenario& s) {
  if (doc.contains("frenchman")) {
    if (s.model != "cushion") throw ConfigError("frenchman: cushion model only");
    const auto& obj = doc.at("frenchman");
    reject_unknown(obj, "frenchman", {"v0", "omega_x0", "branch"});
    FrenchmanSpec f;
    if (obj.contains("v0")) f.v0 = number(obj, "frenchman", "v0");
    if (obj.contains("omega_x0")) f.omega_x0 = number(obj, "frenchman", "omega_x0");
    if (obj.contains("branch")) {
      const auto& b = obj.at("branch");
      if (!b.is_number_integer() || (b.get<int>() != 1 && b.get<int>() != -1)) {
        throw ConfigError("frenchman.branch: expected 1 or -1");
      }
      f.branch = b.get<int>();
    }
    s.frenchman = f;
  }
  if (doc.contains("regularity")) {
    const auto& obj = doc.at("regularity");
    reject_unknown(obj, "regularity", {"samples", "k_min", "k_max", "k_points"});
    auto& r = s.regularity;
    if (obj.contains("samples")) r.samples = count(obj, "regularity", "samples");
    if (obj.contains("k_min")) r.k_min = number(obj, "regularity", "k_min");
    if (obj.contains("k_max")) r.k_max = number(obj, "regularity", "k_max");
    if (obj.contains("k_points")) r.k_points = count(obj, "regularity", "k_points");
    if (!(r.k_min > 0.0 && r.k_max >= r.k_min)) {
      throw ConfigError("regularity: need 0 < k_min <= k_max");
    }
  }
  if (doc.contains("scan")) {
    if (s.model != "painleve") throw ConfigError("scan: painleve model only");
    const auto& obj = doc.at("scan");
    reject_unknown(obj, "scan", {"mu_min", "mu_max", "mu_points", "theta_min",
                                 "theta_max", "theta_points", "sigma"});
    auto& c = s.scan;
    if (obj.contains("mu_min")) c.mu_min = number(obj, "scan", "mu_min");
    if (obj.contains("mu_max")) c.mu_max = number(obj, "scan", "mu_max");
    if (obj.contains("mu_points")) c.mu_points = count(obj, "scan", "mu_points");
    if (obj.contains("theta_min")) c.theta_min = number(obj, "scan", "theta_min");
    if (obj.contains("theta_max")) c.theta_max = number(obj, "scan", "theta_max");
    if (obj.contains("theta_points")) c.theta_points = count(obj, "scan", "theta_points");
    if (obj.contains("sigma")) c.sigma = number(obj, "scan", "sigma");
    if (c.sigma != 1.0 && c.sigma != -1.0) {
      throw ConfigError("scan.sigma: expected 1 or -1");
    }
  }
}

}  // namespace detail

/// Names accepted in "initial_state" and their defaults.
inline std::vector<std::pair<std::string, double>> initial_state_keys(
    const Scenario& s) {
  if (s.model == "painleve") {
    return {{"x", 0.0}, {"theta", 0.0}, {"y", 0.0},
            {"x_dot", 0.0}, {"theta_dot", 0.0}, {"y_dot", 0.0}};
  }
  const double r = s.model == "ball_plane" ? s.ball.R : s.cushion.R;
  return {{"x", 0.0},       {"y", s.model == "cushion" ? r : 0.0},
          {"z", r},         {"phi_x", 0.0},
          {"phi_y", 0.0},   {"phi_z", 0.0},
          {"x_dot", 0.0},   {"y_dot", 0.0},
          {"z_dot", 0.0},   {"omega_x", 0.0},
          {"omega_y", 0.0}, {"omega_z", 0.0},
          {"t", 0.0}};
}

inline Scenario parse_scenario(const nlohmann::json& doc) {
  detail::reject_unknown(doc, "scenario",
                         {"model", "law", "parameters", "initial_state",
                          "integration", "outputs", "frenchman", "regularity",
                          "scan"});
  if (!doc.contains("model") || !doc.at("model").is_string()) {
    throw ConfigError("scenario: missing 'model'");
  }
  Scenario s;
  s.model = doc.at("model").get<std::string>();
  if (s.model != "painleve" && s.model != "ball_plane" && s.model != "cushion") {
    throw ConfigError("model: expected painleve, ball_plane or cushion, got '" +
                      s.model + "'");
  }
  if (doc.contains("law") && s.model != "painleve") {
    throw ConfigError("law: painleve model only");
  }
  try {
    detail::parse_parameters(doc, s);
    detail::parse_integration(doc, s);
    detail::parse_outputs(doc, s);
    detail::parse_sections(doc, s);
    auto keys = initial_state_keys(s);
    if (s.model == "painleve") keys.push_back({"t", 0.0});
    std::vector<std::string> names;
    for (const auto& [k, d] : keys) {
      names.push_back(k);
      s.initial[k] = d;
    }
    if (doc.contains("initial_state")) {
      const auto given =
          detail::scalars(doc.at("initial_state"), "initial_state", {}, names);
      for (const auto& [k, v] : given) s.initial[k] = v;
    }
    s.integration.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("scenario '" + path + "': " + e.what());
  }
  return parse_scenario(doc);
}

inline MechanicalModel build_model(const Scenario& s) {
  try {
    if (s.model == "painleve") return painleve_model(s.painleve);
    if (s.model == "ball_plane") return ball_plane_model(s.ball);
    s.cushion.validate();
    MechanicalModel m = cushion_model(s.cushion, s.cushion_tensor, s.table_tensor);
    m.parameters["mu_table"] = s.cushion.mu_table;
    m.parameters["mu_cushion"] = s.cushion.mu_cushion;
    return m;
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
}

/// Initial state from "initial_state"; the cushion model with a "frenchman"
/// section starts on the closed-form solution instead.
inline GeneralizedState initial_state(const Scenario& s) {
  if (s.model == "cushion" && s.frenchman) {
    try {
      const auto st = frenchman_initial_state(s.cushion, s.frenchman->v0,
                                              s.frenchman->omega_x0,
                                              s.frenchman->branch);
      return GeneralizedState(st.q(), st.v(), s.initial.at("t"));
    } catch (const ContractViolation& e) {
      throw ConfigError(e.what());
    }
  }
  const auto keys = initial_state_keys(s);
  const std::size_t n = s.model == "painleve" ? 3 : 6;
  Vector q(static_cast<Eigen::Index>(n)), v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    q(static_cast<Eigen::Index>(i)) = s.initial.at(keys[i].first);
    v(static_cast<Eigen::Index>(i)) = s.initial.at(keys[n + i].first);
  }
  return GeneralizedState(q, v, s.initial.at("t"));
}

}  // namespace dryfric::cli
