#pragma once

// Ball on the table z = 0 pressed against the cushion y = 0. Same
// coordinates as ball_plane.hpp; the cushion contact point is (x, 0, z),
// the table contact point (x, y, 0).

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dryfric/core_types.hpp"
#include "dryfric/models/ball_plane.hpp"

namespace dryfric {

struct CushionParams {
  double m = 0.2;
  double R = 0.034;
  double g = 9.81;
  double mu_table = 0.2;
  double mu_cushion = 0.6;

  void validate() const {
    detail::require(m > 0 && R > 0 && g > 0,
                    "CushionParams: m, R, g must be positive");
    detail::require(mu_table > 0 && mu_cushion > 0,
                    "CushionParams: friction coefficients must be positive");
  }
};

/// Cushion contact map in the ω chart: v_c = (ẋ + Rωz, ẏ, ż - Rωx).
inline Matrix cushion_projection(double R) {
  Matrix proj(3, 6);
  proj << 1, 0, 0, 0, 0, R,
          0, 1, 0, 0, 0, 0,
          0, 0, 1, -R, 0, 0;
  return proj;
}

/// Cushion contact map in the Euler chart (x, y, z, α, β, γ).
inline Matrix cushion_projection_euler(double R, double alpha, double beta) {
  Matrix proj(3, 6);
  proj << 1, 0, 0, -R, 0, -R * std::cos(beta),
          0, 1, 0, 0, 0, 0,
          0, 0, 1, 0, R * std::cos(alpha), R * std::sin(alpha) * std::sin(beta);
  return proj;
}

/// 5ẋ + 2R(ωy - ωz), equal to 9ẋ + 2R(Ωy - Ωz).
inline double cushion_integral_J(const CushionParams& p,
                                 const GeneralizedState& state) {
  detail::require(state.dof() == 6, "cushion_integral_J: 6-DOF state");
  const Vector& v = state.v();
  return 5.0 * v(0) + 2.0 * p.R * (v(4) - v(5));
}

/// Model with arbitrary cushion and table tensors (contact order: cushion,
/// table).
inline MechanicalModel cushion_model(const CushionParams& p,
                                     const Matrix& phi_cushion,
                                     const Matrix& phi_table) {
  detail::require(p.m > 0 && p.R > 0 && p.g > 0,
                  "CushionParams: m, R, g must be positive");
  MechanicalModel model;
  model.name = "cushion";
  model.dof = 6;
  model.coordinate_names = {"x", "y", "z", "phi_x", "phi_y", "phi_z"};
  model.velocity_names = {"x_dot", "y_dot", "z_dot", "omega_x", "omega_y", "omega_z"};
  const InertiaMatrix a(ball_inertia_omega(p.m, p.R));
  model.inertia = [a](const Vector&) { return a; };
  model.applied_force = [p](const Vector&, const Vector&) {
    return ball_gravity(p.m, p.g);
  };
  const std::vector<Contact> contacts{
      Contact(cushion_projection(p.R), Vector::Unit(3, 1),
              ContactFrictionTensor(phi_cushion), "cushion"),
      Contact(ball_table_projection(p.R), Vector::Unit(3, 2),
              ContactFrictionTensor(phi_table), "table")};
  model.contacts = [contacts](const Vector&) { return contacts; };
  model.gaps = [p](const Vector& q) {
    Vector g(2);
    g << q(1) - p.R, q(2) - p.R;
    return g;
  };
  model.normal_bias = [](const Vector&, const Vector&) {
    return Vector::Zero(2);
  };
  model.potential_energy = [p](const Vector& q) { return p.m * p.g * q(2); };
  model.invariants = [p](const GeneralizedState& s) {
    return std::map<std::string, double>{{"J", cushion_integral_J(p, s)}};
  };
  model.events.push_back(
      {"spin_exhausted",
       [](const GeneralizedState& s) { return s.v()(3); },
       {"cushion"}});
  model.parameters = {{"m", p.m}, {"R", p.R}, {"g", p.g}};
  return model;
}

/// Isotropic tensors μ_table E3 and μ_cushion E3.
inline MechanicalModel cushion_model(const CushionParams& p) {
  p.validate();
  MechanicalModel model =
      cushion_model(p, p.mu_cushion * Matrix::Identity(3, 3),
                    p.mu_table * Matrix::Identity(3, 3));
  model.parameters["mu_table"] = p.mu_table;
  model.parameters["mu_cushion"] = p.mu_cushion;
  return model;
}

inline GeneralizedState cushion_state(const CushionParams& p, double xdot,
                                      double omega_x, double omega_y,
                                      double omega_z, double x = 0.0,
                                      double t = 0.0) {
  Vector q = Vector::Zero(6);
  q << x, p.R, p.R, 0, 0, 0;
  Vector v(6);
  v << xdot, 0, 0, omega_x, omega_y, omega_z;
  return GeneralizedState(q, v, t);
}

/// ω from the Euler-chart state (x, y, z, α, β, γ; rates).
inline Vector cushion_euler_omega(const GeneralizedState& state) {
  detail::require(state.dof() == 6, "cushion_euler_omega: 6-DOF state");
  return omega_from_euler_rates_inverse(state.q()(3), state.q()(4),
                                        state.v().tail(3));
}

/// Isotropic model in the Euler chart q = (x, y, z, α, β, γ). Same
/// Lagrangian as cushion_model; A depends on β, so the velocity equations
/// carry the gyroscopic terms.
inline MechanicalModel cushion_model_euler(const CushionParams& p) {
  p.validate();
  BallParams bp;
  bp.m = p.m;
  bp.R = p.R;
  bp.g = p.g;
  MechanicalModel model;
  model.name = "cushion_euler";
  model.dof = 6;
  model.coordinate_names = {"x", "y", "z", "alpha", "beta", "gamma"};
  model.velocity_names = {"x_dot", "y_dot", "z_dot", "alpha_dot", "beta_dot",
                          "gamma_dot"};
  model.inertia = [bp](const Vector& q) {
    (void)euler_rate_matrix(q(3), q(4));  // gimbal guard
    return InertiaMatrix(ball_inertia_euler(bp, q(4)));
  };
  const double inertia = ball_moment_of_inertia(p.m, p.R);
  model.applied_force = [p, inertia](const Vector& q, const Vector& v) {
    const double sb = std::sin(q(4));
    Vector x = ball_gravity(p.m, p.g);
    x(3) = inertia * sb * v(4) * v(5);
    x(4) = -inertia * sb * v(3) * v(5);
    x(5) = inertia * sb * v(4) * v(3);
    return x;
  };
  const Matrix phi_c = p.mu_cushion * Matrix::Identity(3, 3);
  const Matrix phi_t = p.mu_table * Matrix::Identity(3, 3);
  model.contacts = [p, bp, phi_c, phi_t](const Vector& q) {
    return std::vector<Contact>{
        Contact(cushion_projection_euler(p.R, q(3), q(4)), Vector::Unit(3, 1),
                ContactFrictionTensor(phi_c), "cushion"),
        Contact(ball_projection_euler(bp, q(3), q(4)),
                Vector::Unit(3, 2), ContactFrictionTensor(phi_t), "table")};
  };
  model.gaps = [p](const Vector& q) {
    Vector g(2);
    g << q(1) - p.R, q(2) - p.R;
    return g;
  };
  model.normal_bias = [](const Vector&, const Vector&) {
    return Vector::Zero(2);
  };
  model.potential_energy = [p](const Vector& q) { return p.m * p.g * q(2); };
  model.invariants = [p](const GeneralizedState& s) {
    const Vector w = cushion_euler_omega(s);
    return std::map<std::string, double>{
        {"J", 5.0 * s.v()(0) + 2.0 * p.R * (w(1) - w(2))}};
  };
  model.events.push_back(
      {"spin_exhausted",
       [](const GeneralizedState& s) { return cushion_euler_omega(s)(0); },
       {"cushion"}});
  model.parameters = {{"m", p.m},
                      {"R", p.R},
                      {"g", p.g},
                      {"mu_table", p.mu_table},
                      {"mu_cushion", p.mu_cushion}};
  return model;
}

/// Euler-chart state with the given orientation and ω.
inline GeneralizedState cushion_euler_state(const CushionParams& p, double xdot,
                                            const Vector& omega, double alpha,
                                            double beta, double gamma,
                                            double t = 0.0) {
  detail::require(omega.size() == 3, "cushion_euler_state: omega must be 3-vector");
  Vector q(6);
  q << 0.0, p.R, p.R, alpha, beta, gamma;
  Vector v(6);
  v << xdot, 0.0, 0.0, euler_rates_from_omega(alpha, beta, omega);
  return GeneralizedState(q, v, t);
}

struct CushionLambdas {
  double cushion = 0.0;
  double table = 0.0;
};

/// Closed-form normal reactions of the cushion and the table for sustained
/// sliding at both contacts.
inline CushionLambdas cushion_lambdas(const CushionParams& p, double omega_x,
                                      double xdot, double omega_y,
                                      double omega_z) {
  const double r = p.R;
  const double rw2 = r * r * omega_x * omega_x;
  const double st = std::sqrt(rw2 + std::pow(xdot - r * omega_y, 2));
  const double sc = std::sqrt(rw2 + std::pow(xdot + r * omega_z, 2));
  const double den = p.mu_cushion * p.mu_table * rw2 + st * sc;
  detail::require(st > 0.0 && sc > 0.0 && den > 0.0,
                  "cushion_lambdas: a slip speed is zero; resolve sticking first");
  CushionLambdas out;
  out.cushion = p.m * p.g * p.mu_table * r * omega_x * sc / den;
  out.table = p.m * p.g * st * sc / den;
  return out;
}

/// (ẍ, Ω̇x, Ω̇y, Ω̇z) for Ω = (ωx, ωy - ẋ/R, ωz + ẋ/R). Zero at Ω = 0; any
/// other vanishing denominator is the sticking sentinel.
inline Vector cushion_reduced_rhs(const CushionParams& p, const Vector& omega,
                                  double xdot) {
  (void)xdot;
  detail::require(omega.size() == 3, "cushion_reduced_rhs: Omega must be 3-vector");
  const double ox = omega(0), oy = omega(1), oz = omega(2);
  const double mc = p.mu_cushion, mt = p.mu_table;
  const double sxy = std::sqrt(ox * ox + oy * oy);
  const double sxz = std::sqrt(ox * ox + oz * oz);
  const double den = mc * mt * ox * ox + sxy * sxz;
  if (den == 0.0) {
    if (omega.isZero(0.0)) return Vector::Zero(4);
    throw ContractViolation(
        "cushion_reduced_rhs: zero slip at a contact; resolve sticking first");
  }
  const double g = p.g, r = p.R;
  Vector out(4);
  out << -g * mt * (mc * ox * oz - oy * sxz) / den,
         -5.0 * g * mt * ox * (mc * ox + sxz) / (2.0 * r * den),
         g * mt * (2.0 * mc * ox * oz - 7.0 * oy * sxz) / (2.0 * r * den),
         -g * mt * (7.0 * mc * ox * oz - 2.0 * oy * sxz) / (2.0 * r * den);
  return out;
}

/// (1 + k² R² μ5 ν3 ωx²) / m²: regularity determinant for the triangular
/// tensor family, μ5 the table (2,2) entry and ν3 the cushion (3,3) entry.
inline double cushion_triangular_regularity_det(const CushionParams& p,
                                                double mu5, double nu3,
                                                double k, double omega_x) {
  return (1.0 + k * k * p.R * p.R * mu5 * nu3 * omega_x * omega_x) /
         (p.m * p.m);
}

// --- invariant-direction solutions Ωy = η Ωx, Ωz = ζ Ωx ----------------------

struct FrenchmanDirection {
  int family = 1;
  int branch = 0;  // +1: η > 0, -1: η < 0, 0: family 1
  double eta = 0.0;
  double zeta = 0.0;
};

inline std::vector<FrenchmanDirection> frenchman_invariant_directions(
    double mu_cushion) {
  detail::require(mu_cushion > 0.0,
                  "frenchman_invariant_directions: mu_cushion must be positive");
  std::vector<FrenchmanDirection> out{{1, 0, 0.0, 0.0}};
  if (mu_cushion >= 0.5) {
    const double s = std::sqrt(4.0 * mu_cushion * mu_cushion - 1.0);
    out.push_back({2, +1, 2.0 * s, -s});
    out.push_back({2, -1, -2.0 * s, s});
  }
  if (mu_cushion >= 2.0) {
    const double s = std::sqrt(mu_cushion * mu_cushion - 4.0);
    out.push_back({3, +1, 0.25 * s, -0.5 * s});
    out.push_back({3, -1, -0.25 * s, 0.5 * s});
  }
  return out;
}

struct FrenchmanSolution {
  int branch = 1;
  int family = 2;
  double eta = 0.0;
  double zeta = 0.0;
  double v0 = 0.0;
  double omega_x0 = 0.0;
  double T = 0.0;  // spin-exhaustion time
};

/// Time for Ωx to reach zero along the ray (η, ζ); Ω̇x is constant there.
inline double frenchman_ray_time(const CushionParams& p, double eta, double zeta,
                                 double omega_x0) {
  const double a = std::sqrt(1.0 + eta * eta);
  const double b = std::sqrt(1.0 + zeta * zeta);
  const double rate = 5.0 * p.g * p.mu_table * (p.mu_cushion + b) /
                      (2.0 * p.R * (p.mu_cushion * p.mu_table + a * b));
  return omega_x0 / rate;
}

/// 2 ωx0 R (μt + 2 sqrt(16μc² - 3)) / (15 μt g).
inline double frenchman_time(const CushionParams& p, double omega_x0) {
  const double w = std::sqrt(16.0 * p.mu_cushion * p.mu_cushion - 3.0);
  return 2.0 * omega_x0 * p.R * (p.mu_table + 2.0 * w) / (15.0 * p.mu_table * p.g);
}

inline FrenchmanSolution frenchman_solution(const CushionParams& p, double v0,
                                            double omega_x0, int branch,
                                            int family = 2) {
  p.validate();
  detail::require(branch == 1 || branch == -1,
                  "frenchman_solution: branch must be +1 or -1");
  detail::require(omega_x0 > 0.0, "frenchman_solution: omega_x0 must be positive");
  FrenchmanSolution out;
  out.branch = branch;
  out.family = family;
  out.v0 = v0;
  out.omega_x0 = omega_x0;
  bool found = false;
  for (const auto& d : frenchman_invariant_directions(p.mu_cushion)) {
    if (d.family == family && (d.branch == branch || d.family == 1)) {
      out.eta = d.eta;
      out.zeta = d.zeta;
      found = true;
      break;
    }
  }
  detail::require(found, "frenchman_solution: family " + std::to_string(family) +
                             " does not exist for mu_cushion = " +
                             std::to_string(p.mu_cushion));
  out.T = family == 2 ? frenchman_time(p, omega_x0)
                      : frenchman_ray_time(p, out.eta, out.zeta, omega_x0);
  return out;
}

struct CushionVelocities {
  double xdot = 0.0;
  double omega_x = 0.0;
  double omega_y = 0.0;
  double omega_z = 0.0;
};

/// Family-2 closed-form velocities; constants for t >= T.
inline CushionVelocities frenchman_analytic(const CushionParams& p, double v0,
                                            double omega_x0, int branch,
                                            double t) {
  detail::require(p.mu_cushion >= 0.5,
                  "frenchman_analytic: family 2 needs mu_cushion >= 0.5");
  detail::require(omega_x0 > 0.0, "frenchman_analytic: omega_x0 must be positive");
  detail::require(branch == 1 || branch == -1,
                  "frenchman_analytic: branch must be +1 or -1");
  const double pm = branch;
  const double s = std::sqrt(4.0 * p.mu_cushion * p.mu_cushion - 1.0);
  const double w = std::sqrt(16.0 * p.mu_cushion * p.mu_cushion - 3.0);
  const double mt = p.mu_table, g = p.g, r = p.R;
  const double den = 2.0 * w + mt;
  CushionVelocities out;
  if (t < frenchman_time(p, omega_x0)) {
    out.xdot = v0 + pm * 5.0 * mt * g * t * s / den;
    out.omega_x = omega_x0 - 15.0 * mt * g * t / (2.0 * r * den);
    out.omega_y = v0 / r + pm * 2.0 * (omega_x0 - 5.0 * mt * g * t / (r * den)) * s;
    out.omega_z = -v0 / r - pm * (omega_x0 - 5.0 * mt * g * t / (2.0 * r * den)) * s;
  } else {
    out.xdot = v0 + pm * 2.0 / 3.0 * r * omega_x0 * s;
    out.omega_x = 0.0;
    out.omega_y = v0 / r + pm * 2.0 / 3.0 * omega_x0 * s;
    out.omega_z = -v0 / r - pm * 2.0 / 3.0 * omega_x0 * s;
  }
  return out;
}

/// Initial state of the family-2 solution (t = 0 values of the closed form).
inline GeneralizedState frenchman_initial_state(const CushionParams& p,
                                                double v0, double omega_x0,
                                                int branch) {
  const CushionVelocities c = frenchman_analytic(p, v0, omega_x0, branch, 0.0);
  return cushion_state(p, c.xdot, c.omega_x, c.omega_y, c.omega_z);
}

}  // namespace dryfric
