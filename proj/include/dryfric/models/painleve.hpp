#pragma once

// Painlevé rod: point masses m1 (on the floor y >= 0) and m2 joined by a
// massless rod of length l. Coordinates q = (x, theta, y) of m1 and the rod
// angle, velocities v = (xdot, thetadot, ydot).

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "dryfric/core_types.hpp"

namespace dryfric {

enum class PainleveLaw {
  kTensor,     // contact tensor with the θ-dependent alignment entry
  kClassical,  // same tensor without it: friction only opposes xdot
};

struct PainleveParams {
  double m1 = 1.0;
  double m2 = 1.0;
  double l = 1.0;
  double g = 9.81;
  double kappa1 = 0.3;
  double kappa2 = 0.0;
  double mu2 = 0.3;
  PainleveLaw law = PainleveLaw::kTensor;

  /// Positive masses/length/gravity, kappa1 >= 0 and a contact tensor with
  /// non-negative symmetric part on a 720-point θ grid.
  void validate() const;
};

/// 2m1 + m2(1 + cos 2θ).
inline double painleve_base_denominator(const PainleveParams& p, double theta) {
  return 2.0 * p.m1 + p.m2 * (1.0 + std::cos(2.0 * theta));
}

inline Matrix painleve_inertia_matrix(const PainleveParams& p, double theta) {
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  Matrix a(3, 3);
  a << p.m1 + p.m2, -p.l * p.m2 * s, 0.0,
       -p.l * p.m2 * s, p.m2 * p.l * p.l, p.l * p.m2 * c,
       0.0, p.l * p.m2 * c, p.m1 + p.m2;
  return a;
}

inline Vector painleve_applied_force(const PainleveParams& p, const Vector& q,
                                     const Vector& v) {
  const double th = q(1);
  const double w2 = v(1) * v(1);
  Vector x(3);
  x << p.l * p.m2 * w2 * std::cos(th),
       -p.l * p.m2 * p.g * std::cos(th),
       -(p.m1 + p.m2) * p.g + p.l * p.m2 * w2 * std::sin(th);
  return x;
}

inline Matrix painleve_contact_tensor_matrix(const PainleveParams& p,
                                             double theta) {
  const double align = p.law == PainleveLaw::kTensor
                           ? p.kappa1 * p.m2 * std::sin(2.0 * theta) /
                                 painleve_base_denominator(p, theta)
                           : 0.0;
  Matrix phi(2, 2);
  phi << p.kappa1, p.kappa2, align, p.mu2;
  return phi;
}

inline ContactFrictionTensor painleve_contact_tensor(const PainleveParams& p,
                                                     double theta) {
  return ContactFrictionTensor(painleve_contact_tensor_matrix(p, theta));
}

inline Matrix painleve_projection() {
  Matrix proj(2, 3);
  proj << 1, 0, 0, 0, 0, 1;
  return proj;
}

inline void PainleveParams::validate() const {
  detail::require(m1 > 0 && m2 > 0 && l > 0 && g > 0,
                  "PainleveParams: m1, m2, l, g must be positive");
  detail::require(kappa1 >= 0 && std::isfinite(kappa1) && std::isfinite(kappa2) &&
                      std::isfinite(mu2),
                  "PainleveParams: kappa1 must be >= 0 and all entries finite");
  constexpr int kGrid = 720;
  for (int i = 0; i < kGrid; ++i) {
    const double th = 2.0 * std::numbers::pi * i / kGrid;
    const Matrix phi = painleve_contact_tensor_matrix(*this, th);
    const double scale = std::max(1.0, phi.cwiseAbs().maxCoeff());
    if (detail::min_symmetric_eigenvalue(phi) < -kPsdTolerance * scale) {
      throw ContractViolation(
          "PainleveParams: contact friction tensor is not non-negative "
          "definite at theta = " +
          std::to_string(th) + " (increase mu2)");
    }
  }
}

inline MechanicalModel painleve_model(const PainleveParams& p) {
  p.validate();
  MechanicalModel model;
  model.name = "painleve";
  model.dof = 3;
  model.coordinate_names = {"x", "theta", "y"};
  model.velocity_names = {"x_dot", "theta_dot", "y_dot"};
  model.inertia = [p](const Vector& q) {
    return InertiaMatrix(painleve_inertia_matrix(p, q(1)));
  };
  model.applied_force = [p](const Vector& q, const Vector& v) {
    return painleve_applied_force(p, q, v);
  };
  model.contacts = [p](const Vector& q) {
    Vector n(2);
    n << 0.0, 1.0;
    return std::vector<Contact>{Contact(painleve_projection(), n,
                                        painleve_contact_tensor(p, q(1)),
                                        "floor")};
  };
  model.gaps = [](const Vector& q) { return Vector::Constant(1, q(2)); };
  model.normal_bias = [](const Vector&, const Vector&) {
    return Vector::Zero(1);
  };
  model.potential_energy = [p](const Vector& q) {
    return (p.m1 + p.m2) * p.g * q(2) + p.m2 * p.g * p.l * std::sin(q(1));
  };
  model.parameters = {{"m1", p.m1},         {"m2", p.m2},
                      {"l", p.l},           {"g", p.g},
                      {"kappa1", p.kappa1}, {"kappa2", p.kappa2},
                      {"mu2", p.mu2}};
  return model;
}

/// Normal reaction under sustained contact without friction:
/// 2m1((m1+m2)g - l m2 θ̇² sinθ) / (2m1 + m2(1 + cos2θ)).
inline double painleve_lambda_frictionless(const PainleveParams& p,
                                           double theta, double theta_dot) {
  return 2.0 * p.m1 *
         ((p.m1 + p.m2) * p.g -
          p.l * p.m2 * theta_dot * theta_dot * std::sin(theta)) /
         painleve_base_denominator(p, theta);
}

/// Denominator of the classical-law reaction,
/// 2m1 + m2(1 + cos2θ) + μ m2 σ sin2θ.
inline double painleve_classical_denominator(const PainleveParams& p,
                                             double theta, double mu,
                                             double sigma) {
  return painleve_base_denominator(p, theta) +
         mu * p.m2 * sigma * std::sin(2.0 * theta);
}

/// Normal reaction with the classical law F = -λ μ σ(ẋ). sigma is the sign
/// of ẋ (or a value in [-1, 1] for the static branch). Throws
/// PainleveParadox when |denominator| < tol.
inline double painleve_lambda_classical(const PainleveParams& p, double theta,
                                        double theta_dot, double mu,
                                        double sigma, double tol = 1e-9) {
  detail::require(sigma >= -1.0 && sigma <= 1.0,
                  "painleve_lambda_classical: sigma must lie in [-1, 1]");
  detail::require(mu >= 0.0, "painleve_lambda_classical: mu must be >= 0");
  const double den = painleve_classical_denominator(p, theta, mu, sigma);
  if (std::abs(den) < tol) {
    throw PainleveParadox(
        "classical friction law: normal reaction unbounded", {"floor"},
        {{"mu", mu}, {"theta", theta}, {"sigma", sigma}, {"denominator", den}});
  }
  return 2.0 * p.m1 *
         ((p.m1 + p.m2) * p.g -
          p.l * p.m2 * theta_dot * theta_dot * std::sin(theta)) /
         den;
}

/// min over θ of the classical denominator: 2m1 + m2 - m2 sqrt(1 + μ²).
inline double painleve_min_denominator(const PainleveParams& p, double mu) {
  return 2.0 * p.m1 + p.m2 - p.m2 * std::sqrt(1.0 + mu * mu);
}

/// θ in (-π/2, π/2] attaining painleve_min_denominator for the given σ.
inline double painleve_worst_theta(double mu, double sigma) {
  double th = 0.5 * std::atan2(-mu * sigma, -1.0);
  if (th <= -0.5 * std::numbers::pi) th += std::numbers::pi;
  return th;
}

/// Smallest μ for which the classical denominator vanishes at some θ:
/// sqrt(((2m1 + m2)/m2)² - 1).
inline double painleve_critical_mu(const PainleveParams& p) {
  const double r = (2.0 * p.m1 + p.m2) / p.m2;
  return std::sqrt(r * r - 1.0);
}

/// μ at which the classical denominator vanishes for this θ and σ; +inf when
/// μ σ sin2θ cannot make it vanish.
inline double painleve_critical_mu_at(const PainleveParams& p, double theta,
                                      double sigma) {
  const double s = p.m2 * sigma * std::sin(2.0 * theta);
  if (!(s < 0.0)) return std::numeric_limits<double>::infinity();
  return -painleve_base_denominator(p, theta) / s;
}

struct PainleveRest {
  bool at_rest = false;
  /// λ σ0 κ1 needed to hold the contact point, m2 cosθ(l θ̇² - g sinθ).
  double static_force = 0.0;
  /// θ̈ with ẍ = 0: -g cosθ / l.
  double theta_ddot = 0.0;
};

inline PainleveRest painleve_rest_condition(const PainleveParams& p,
                                            double theta, double theta_dot,
                                            double lambda) {
  PainleveRest out;
  const double c = std::cos(theta);
  const double demand = c * (p.l * theta_dot * theta_dot - p.g * std::sin(theta));
  out.static_force = p.m2 * demand;
  out.theta_ddot = -p.g * c / p.l;
  out.at_rest = std::abs(demand) <= lambda * p.kappa1 / p.m2;
  return out;
}

/// Right-hand side of the impact equations:
/// (-κ1 Sx - κ2 Sy, 0, I - μ2 Sy - κ1 m2 Sx sin2θ / (2m1 + m2(1 + cos2θ))).
inline Vector painleve_impact_rhs(const PainleveParams& p, double theta,
                                  double impulse, double sx, double sy) {
  Vector b(3);
  b << -p.kappa1 * sx - p.kappa2 * sy, 0.0,
      impulse - p.mu2 * sy -
          p.kappa1 * p.m2 * sx * std::sin(2.0 * theta) /
              painleve_base_denominator(p, theta);
  return b;
}

/// Velocity jump (Δẋ, Δθ̇, Δẏ) produced by the normal impulse I and friction
/// impulses Sx, Sy at the contact configuration y = 0.
inline Vector painleve_impact_map(const PainleveParams& p,
                                  const GeneralizedState& state,
                                  double impulse, double sx, double sy) {
  detail::require(state.dof() == 3, "painleve_impact_map: state must be 3-DOF");
  detail::require(std::isfinite(impulse) && std::isfinite(sx) &&
                      std::isfinite(sy),
                  "painleve_impact_map: impulses must be finite");
  const double th = state.q()(1);
  const double s = std::sin(th);
  const double c = std::cos(th);
  Eigen::Matrix3d lhs;
  lhs << p.m1 + p.m2, -p.l * p.m2 * s, 0.0,
         p.l * p.m2 * s, -p.l * p.l * p.m2, -p.l * p.m2 * c,
         0.0, p.l * p.m2 * c, p.m1 + p.m2;
  const Eigen::FullPivLU<Eigen::Matrix3d> lu(lhs);
  detail::require(lu.isInvertible(), "painleve_impact_map: singular inertia");
  const Eigen::Vector3d rhs = painleve_impact_rhs(p, th, impulse, sx, sy);
  return Vector(lu.solve(rhs));
}

}  // namespace dryfric
