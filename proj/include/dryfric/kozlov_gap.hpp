#pragma once

// Isotropic generalized friction Φ = ν A on the Painlevé rod. It satisfies
// the orthogonality and dissipativity tests but not the contact condition,
// so its power is not the power at the contact point.

#include <cmath>

#include "dryfric/core_types.hpp"
#include "dryfric/models/painleve.hpp"

namespace dryfric {

struct KozlovPowerGap {
  Vector force;               // generalized force (F_x, F_θ, F_y)
  double k = 0.0;             // F = -k ν A v
  double total_power = 0.0;   // (F, v)
  double contact_power = 0.0; // F_x ẋ
};

/// F = -|R| ν A v / |v|_A with R = λ ∇y, λ the frictionless reaction, |R|
/// measured with A^{-1} and |v|_A = sqrt(vᵀ A v).
inline KozlovPowerGap kozlov_isotropic_force_and_power_gap(
    const PainleveParams& p, const GeneralizedState& state, double nu) {
  detail::require(state.dof() == 3, "kozlov gap: state must be 3-DOF");
  detail::require(nu > 0.0, "kozlov gap: nu must be positive");
  detail::require(std::abs(state.q()(2)) <= 1e-12 &&
                      std::abs(state.v()(2)) <= 1e-12,
                  "kozlov gap: state must satisfy y = 0, ydot = 0");
  const double theta = state.q()(1);
  const double lambda =
      painleve_lambda_frictionless(p, theta, state.v()(1));
  detail::require(lambda > 0.0, "kozlov gap: frictionless reaction must be positive");

  const InertiaMatrix a(painleve_inertia_matrix(p, theta));
  const Vector& v = state.v();
  const Vector av = a.matrix() * v;
  const double v_norm = std::sqrt(v.dot(av));
  detail::require(v_norm > 0.0, "kozlov gap: zero slip norm");
  Vector grad = Vector::Unit(3, 2);
  const double r_norm = lambda * std::sqrt(grad.dot(a.solve(grad)));

  KozlovPowerGap out;
  out.k = r_norm / v_norm;
  out.force = -out.k * nu * av;
  out.total_power = out.force.dot(v);
  out.contact_power = out.force(0) * v(0);
  return out;
}

}  // namespace dryfric
