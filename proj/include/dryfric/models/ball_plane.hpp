#pragma once

// Homogeneous ball of mass m and radius R on the plane z = 0.
//
// Dynamics use q = (x, y, z, φx, φy, φz), v = (ẋ, ẏ, ż, ωx, ωy, ωz) where
// φ is the integrated angular velocity (a passive quasi-coordinate). The
// Euler-angle chart (α, β, γ) is provided for cross-checks only.

#include <cmath>
#include <map>
#include <string>

#include "dryfric/core_types.hpp"

namespace dryfric {

inline constexpr double kGimbalEps = 1e-6;

struct BallParams {
  double m = 0.2;
  double R = 0.034;
  double g = 9.81;
  // Contact tensor rows (κ1 κ2 κ3), (μ1 μ2 μ3), (0 0 ν).
  double kappa1 = 0.2, kappa2 = 0.0, kappa3 = 0.0;
  double mu1 = 0.0, mu2 = 0.2, mu3 = 0.0;
  double nu = 0.2;

  static BallParams isotropic(double m, double R, double g, double mu) {
    BallParams p;
    p.m = m;
    p.R = R;
    p.g = g;
    p.kappa1 = p.mu2 = p.nu = mu;
    p.kappa2 = p.kappa3 = p.mu1 = p.mu3 = 0.0;
    return p;
  }

  Matrix tensor() const {
    Matrix phi(3, 3);
    phi << kappa1, kappa2, kappa3, mu1, mu2, mu3, 0.0, 0.0, nu;
    return phi;
  }

  void validate() const {
    detail::require(m > 0 && R > 0 && g > 0,
                    "BallParams: m, R, g must be positive");
    ContactFrictionTensor check(tensor());
    (void)check;
  }
};

/// 2mR²/5.
inline double ball_moment_of_inertia(double m, double R) {
  return 0.4 * m * R * R;
}

// --- Euler-angle chart -----------------------------------------------------

/// Kinetic-energy Hessian in (x, y, z, α, β, γ).
inline Matrix ball_inertia_euler(const BallParams& p, double beta) {
  Matrix a = Matrix::Zero(6, 6);
  a.topLeftCorner(3, 3) = p.m * Matrix::Identity(3, 3);
  const double i = ball_moment_of_inertia(p.m, p.R);
  const double c = std::cos(beta);
  a.bottomRightCorner(3, 3) << i, 0, i * c, 0, i, 0, i * c, 0, i;
  return a;
}

/// Table contact map in (x, y, z, α, β, γ).
inline Matrix ball_projection_euler(const BallParams& p, double alpha,
                                    double beta) {
  const double r = p.R;
  Matrix proj(3, 6);
  proj << 1, 0, 0, 0, -r * std::sin(alpha), r * std::cos(alpha) * std::sin(beta),
          0, 1, 0, 0, -r * std::cos(alpha), -r * std::sin(alpha) * std::sin(beta),
          0, 0, 1, 0, 0, 0;
  return proj;
}

/// Linear map ω -> (α̇, β̇, γ̇).
inline Matrix euler_rate_matrix(double alpha, double beta,
                                double gimbal_eps = kGimbalEps) {
  const double sb = std::sin(beta);
  if (std::abs(sb) < gimbal_eps) {
    throw GimbalDegeneracy("Euler angles degenerate: |sin(beta)| = " +
                           std::to_string(std::abs(sb)));
  }
  const double sa = std::sin(alpha);
  const double ca = std::cos(alpha);
  const double cot = std::cos(beta) / sb;
  Matrix m(3, 3);
  m << cot * sa, cot * ca, -1.0,
       -ca, sa, 0.0,
       -sa / sb, -ca / sb, 0.0;
  return m;
}

inline Vector euler_rates_from_omega(double alpha, double beta,
                                     const Vector& omega,
                                     double gimbal_eps = kGimbalEps) {
  detail::require(omega.size() == 3, "euler_rates_from_omega: omega must be 3-vector");
  return euler_rate_matrix(alpha, beta, gimbal_eps) * omega;
}

inline Vector omega_from_euler_rates(double alpha, double beta,
                                     const Vector& rates,
                                     double gimbal_eps = kGimbalEps) {
  detail::require(rates.size() == 3, "omega_from_euler_rates: rates must be 3-vector");
  const Eigen::Matrix3d m = euler_rate_matrix(alpha, beta, gimbal_eps);
  return Vector(m.fullPivLu().solve(Eigen::Vector3d(rates)));
}

/// Rates -> ω, the inverse of euler_rate_matrix in closed form.
inline Vector omega_from_euler_rates_inverse(double alpha, double beta,
                                             const Vector& rates) {
  detail::require(rates.size() == 3, "omega_from_euler_rates: rates must be 3-vector");
  const double sa = std::sin(alpha), ca = std::cos(alpha);
  const double sb = std::sin(beta), cb = std::cos(beta);
  Vector w(3);
  w << -ca * rates(1) - sa * sb * rates(2),
       sa * rates(1) - ca * sb * rates(2),
       -rates(0) - cb * rates(2);
  return w;
}

// --- angular-velocity chart ------------------------------------------------

/// Table contact map in (ẋ, ẏ, ż, ωx, ωy, ωz): v_c = (ẋ - Rωy, ẏ + Rωx, ż).
inline Matrix ball_table_projection(double R) {
  Matrix proj(3, 6);
  proj << 1, 0, 0, 0, -R, 0,
          0, 1, 0, R, 0, 0,
          0, 0, 1, 0, 0, 0;
  return proj;
}

inline Matrix ball_inertia_omega(double m, double R) {
  Vector d(6);
  const double i = ball_moment_of_inertia(m, R);
  d << m, m, m, i, i, i;
  return Matrix(d.asDiagonal());
}

inline Vector ball_gravity(double m, double g) {
  Vector x = Vector::Zero(6);
  x(2) = -m * g;
  return x;
}

/// Horizontal velocity of the point 2R/5 above the center:
/// (ẋ + 2Rωy/5, ẏ - 2Rωx/5).
inline Vector percussion_center_velocity(const BallParams& p,
                                         const GeneralizedState& state) {
  detail::require(state.dof() == 6, "percussion_center_velocity: 6-DOF state");
  const Vector& v = state.v();
  Vector u(2);
  u << v(0) + 0.4 * p.R * v(4), v(1) - 0.4 * p.R * v(3);
  return u;
}

inline MechanicalModel ball_plane_model(const BallParams& p) {
  p.validate();
  MechanicalModel model;
  model.name = "ball_plane";
  model.dof = 6;
  model.coordinate_names = {"x", "y", "z", "phi_x", "phi_y", "phi_z"};
  model.velocity_names = {"x_dot", "y_dot", "z_dot", "omega_x", "omega_y", "omega_z"};
  const InertiaMatrix a(ball_inertia_omega(p.m, p.R));
  model.inertia = [a](const Vector&) { return a; };
  model.applied_force = [p](const Vector&, const Vector&) {
    return ball_gravity(p.m, p.g);
  };
  const Contact table(ball_table_projection(p.R), Vector::Unit(3, 2),
                      ContactFrictionTensor(p.tensor()), "table");
  model.contacts = [table](const Vector&) { return std::vector<Contact>{table}; };
  model.gaps = [p](const Vector& q) { return Vector::Constant(1, q(2) - p.R); };
  model.normal_bias = [](const Vector&, const Vector&) {
    return Vector::Zero(1);
  };
  model.potential_energy = [p](const Vector& q) { return p.m * p.g * q(2); };
  model.invariants = [p](const GeneralizedState& s) {
    const Vector u = percussion_center_velocity(p, s);
    return std::map<std::string, double>{
        {"percussion_x", u(0)}, {"percussion_y", u(1)}, {"omega_z", s.v()(5)}};
  };
  model.parameters = {{"m", p.m},           {"R", p.R},
                      {"g", p.g},           {"kappa1", p.kappa1},
                      {"kappa2", p.kappa2}, {"kappa3", p.kappa3},
                      {"mu1", p.mu1},       {"mu2", p.mu2},
                      {"mu3", p.mu3},       {"nu", p.nu}};
  return model;
}

}  // namespace dryfric
