#pragma once

// Generalized Coulomb-Amontons friction: the contact-lifted friction tensor,
// the generalized friction force, and the validity/regularity tests on
// friction tensors (orthogonality to the reaction, dissipativity, contact
// alignment, the multi-contact span condition and the scale-regularity
// determinant).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dryfric/core_types.hpp"

namespace dryfric {

inline constexpr double kParallelTolerance = 1e-9;

/// Φ = P^T Φ_c P. Its symmetric part is non-negative definite whenever that
/// of Φ_c is, and ker P ⊆ ker Φ.
inline Matrix lift_contact_tensor(const Matrix& p,
                                  const ContactFrictionTensor& phi_c) {
  detail::require(p.rows() == phi_c.size(),
                  "lift_contact_tensor: P is " + detail::dims(p.rows(), p.cols()) +
                      " but Φ_c is " + detail::dims(phi_c.size(), phi_c.size()));
  return p.transpose() * phi_c.matrix() * p;
}

struct GeneralizedFrictionForce {
  Vector force;          // n-covector P^T F_c
  Vector contact_force;  // r-vector F_c at the contact point
  /// |v_c| < stick_eps: the force is not defined by the sliding law and must
  /// come from the static branch of the caller; force is zero-filled.
  bool sticking = false;
};

/// F = -|N| P^T Φ_c v_c / |v_c| for a sliding contact.
inline GeneralizedFrictionForce generalized_friction_force(
    double normal_force_mag, const Contact& contact,
    const GeneralizedState& state, double stick_eps) {
  detail::require(normal_force_mag >= 0.0,
                  "generalized_friction_force: |N| must be non-negative");
  detail::require(stick_eps > 0.0,
                  "generalized_friction_force: stick_eps must be positive");
  const Vector vc = contact_velocity(contact, state);
  GeneralizedFrictionForce out;
  out.force = Vector::Zero(state.dof());
  out.contact_force = Vector::Zero(contact.rank());
  const double speed = vc.norm();
  if (speed < stick_eps) {
    out.sticking = true;
    return out;
  }
  out.contact_force = -normal_force_mag * contact.friction().matrix() * vc / speed;
  out.force = contact.projection().transpose() * out.contact_force;
  return out;
}

struct ConditionResult {
  bool holds = false;
  double rho = 0.0;      // proportionality factor (single constraint)
  Matrix coefficients;   // c_ij for the multi-constraint span test
  double residual = 0.0;
};

namespace detail {

inline ConditionResult parallel_test(const Vector& u, const Vector& direction,
                                     double tol) {
  require(direction.norm() > 0.0, "parallel test: zero direction");
  const Vector unit = direction.normalized();
  ConditionResult out;
  out.residual = (u - u.dot(unit) * unit).norm() / std::max(u.norm(), 1.0);
  out.rho = u.dot(direction) / direction.squaredNorm();
  out.coefficients = Matrix::Constant(1, 1, out.rho);
  out.holds = out.residual < tol;
  return out;
}

}  // namespace detail

/// Holds iff Φ^T A^{-1} ∂f/∂x is parallel to ∂f/∂x (friction orthogonal to
/// the reaction in the A^{-1} metric).
inline ConditionResult check_condition_i(const Matrix& phi,
                                         const InertiaMatrix& a,
                                         const Vector& grad_f,
                                         double tol = kParallelTolerance) {
  detail::require(phi.rows() == a.dof() && phi.cols() == a.dof() &&
                      grad_f.size() == a.dof(),
                  "check_condition_i: dimension mismatch");
  const Vector u = phi.transpose() * a.solve(grad_f);
  return detail::parallel_test(u, grad_f, tol);
}

/// Dissipativity: (Φ v, v) >= 0 for all v.
inline bool check_condition_ii(const Matrix& phi) {
  detail::require(phi.rows() == phi.cols(), "check_condition_ii: not square");
  const double scale = std::max(1.0, phi.cwiseAbs().maxCoeff());
  return detail::min_symmetric_eigenvalue(phi) >= -kPsdTolerance * scale;
}

/// Φ_c^T Q N parallel to N with Q = P A^{-1} P^T: the contact-level form of
/// condition i.
inline ConditionResult check_theorem1_alignment(
    const ContactFrictionTensor& phi_c, const Matrix& q, const Vector& normal,
    double tol = kParallelTolerance) {
  detail::require(q.rows() == phi_c.size() && q.cols() == phi_c.size() &&
                      normal.size() == phi_c.size(),
                  "check_theorem1_alignment: dimension mismatch");
  const Vector u = phi_c.matrix().transpose() * q * normal;
  return detail::parallel_test(u, normal, tol);
}

/// Multi-constraint span condition: Φ^T A^{-1} maps every gradient (row of
/// `grads`) into the span of all gradients. Coefficients are c_ij with
/// Φ^T A^{-1} g_i = Σ_j c_ij g_j.
inline ConditionResult check_kozlov_multicontact(
    const Matrix& phi, const InertiaMatrix& a, const Matrix& grads,
    double tol = kParallelTolerance) {
  const auto n = a.dof();
  detail::require(phi.rows() == n && phi.cols() == n && grads.cols() == n &&
                      grads.rows() >= 1,
                  "check_kozlov_multicontact: dimension mismatch");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(grads);
  const auto sv = svd.singularValues();
  if (grads.rows() > n || sv(sv.size() - 1) <= 1e-12 * sv(0)) {
    throw ContractViolation(
        "check_kozlov_multicontact: constraint gradients are linearly "
        "dependent");
  }
  const Eigen::MatrixXd gt = grads.transpose();
  const Eigen::MatrixXd u = phi.transpose() * a.solve(Matrix(gt));
  // u.col(i) = G^T c_i  ->  c_i by least squares.
  const Eigen::MatrixXd c_t = gt.colPivHouseholderQr().solve(u);
  ConditionResult out;
  out.coefficients = c_t.transpose();
  for (Eigen::Index i = 0; i < u.cols(); ++i) {
    const double r = (u.col(i) - gt * c_t.col(i)).norm() /
                     std::max(u.col(i).norm(), 1.0);
    out.residual = std::max(out.residual, r);
  }
  out.rho = out.coefficients(0, 0);
  out.holds = out.residual < tol;
  return out;
}

struct RegularityReport {
  bool regular = false;
  std::vector<double> k_grid;
  std::size_t samples = 0;
  /// Smallest raw determinant over all samples and k.
  double min_det = std::numeric_limits<double>::infinity();
  /// Smallest determinant divided by the product of its row norms.
  double min_relative_det = std::numeric_limits<double>::infinity();
  /// Leading-order (k -> ∞) determinant det{(n_i, P_i A^{-1} P_j^T Φ_j v_j)}:
  /// the most negative value for even p, the largest magnitude for odd p.
  double necessary_det = 0.0;
  bool necessary_holds = true;
  std::optional<Vector> witness;
  std::optional<double> witness_k;
};

/// Logarithmic grid 10^-3 ... 10^3 (25 points).
inline std::vector<double> default_k_grid(std::size_t points = 25,
                                          double lo = 1e-3, double hi = 1e3) {
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double s = points == 1 ? 0.0 : double(i) / double(points - 1);
    grid[i] = lo * std::pow(hi / lo, s);
  }
  return grid;
}

namespace detail {

inline Matrix stacked_gradients(std::span<const Contact> contacts) {
  require(!contacts.empty(), "no contacts");
  const auto n = contacts.front().dof();
  Matrix g(static_cast<Eigen::Index>(contacts.size()), n);
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    require(contacts[i].dof() == n, "contacts disagree on dimension");
    g.row(static_cast<Eigen::Index>(i)) = contacts[i].gradient().transpose();
  }
  return g;
}

}  // namespace detail

/// Gaussian velocities projected onto {v : (∂f_i/∂x, v) = 0 ∀i}.
inline std::vector<Vector> sample_admissible_velocities(
    std::span<const Contact> contacts, std::size_t count, std::uint64_t seed) {
  const Matrix g = detail::stacked_gradients(contacts);
  const auto n = g.cols();
  const Eigen::MatrixXd ggt = g * g.transpose();
  const auto ggt_ldlt = ggt.ldlt();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
    v -= g.transpose() * ggt_ldlt.solve(g * v);
    out.push_back(v);
  }
  return out;
}

/// The matrix {(n_i, P_i A^{-1} P_j^T [n_j - k Φ_j v_j])} at velocity v.
inline Matrix regularity_matrix(std::span<const Contact> contacts,
                                const InertiaMatrix& a, const Vector& v,
                                double k) {
  detail::require(v.size() == a.dof(), "regularity_matrix: velocity size");
  const auto p = static_cast<Eigen::Index>(contacts.size());
  Matrix m(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const Contact& cj = contacts[j];
    const Vector vj = cj.projection() * v;
    const Vector col =
        a.solve(Vector(cj.projection().transpose() *
                       (cj.normal() - k * (cj.friction().matrix() * vj))));
    for (Eigen::Index i = 0; i < p; ++i) m(i, j) = contacts[i].gradient().dot(col);
  }
  return m;
}

/// Scale-regularity of a set of contact friction tensors: for every sampled
/// admissible v and every k in the grid, det{(n_i, P_i A^{-1} P_j^T [n_j -
/// k Φ_j v_j])} must be positive, and the k -> ∞ leading term must satisfy
/// the necessary sign condition (>= 0 for even p, = 0 for odd p).
inline RegularityReport regularity_check(std::span<const Contact> contacts,
                                         const InertiaMatrix& a,
                                         std::span<const Vector> velocities,
                                         std::span<const double> k_grid,
                                         double tol = 1e-9) {
  detail::require(!k_grid.empty(), "regularity_check: empty k grid");
  for (double k : k_grid) {
    detail::require(k > 0.0, "regularity_check: k must be positive");
  }
  detail::require(!velocities.empty(), "regularity_check: no velocities");
  const Matrix g = detail::stacked_gradients(contacts);
  detail::require(g.cols() == a.dof(), "regularity_check: dimension mismatch");
  const auto p = static_cast<Eigen::Index>(contacts.size());

  // Coupling blocks P_i A^{-1} P_j^T, computed once.
  std::vector<Matrix> a_inv_pt;
  for (const auto& c : contacts) {
    a_inv_pt.push_back(a.solve(Matrix(c.projection().transpose())));
  }
  Eigen::MatrixXd base(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const Vector row_i = contacts[i].gradient();
    for (Eigen::Index j = 0; j < p; ++j) {
      base(i, j) = row_i.dot(a_inv_pt[j] * contacts[j].normal());
    }
  }

  RegularityReport report;
  report.k_grid.assign(k_grid.begin(), k_grid.end());
  report.samples = velocities.size();
  const bool odd = p % 2 == 1;
  double worst_necessary_rel = odd ? 0.0 : std::numeric_limits<double>::infinity();

  for (const auto& v : velocities) {
    detail::require(v.size() == a.dof(), "regularity_check: velocity size");
    const Vector residual = g * v;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (std::abs(residual(i)) >
          1e-9 * std::max(1.0, v.norm()) * g.row(i).norm()) {
        throw ContractViolation(
            "regularity_check: velocity violates constraint of contact '" +
            contacts[i].label() + "'");
      }
    }
    Eigen::MatrixXd lead(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
      const Vector row_i = contacts[i].gradient();
      for (Eigen::Index j = 0; j < p; ++j) {
        const Vector vj = contacts[j].projection() * v;
        lead(i, j) =
            row_i.dot(a_inv_pt[j] * (contacts[j].friction().matrix() * vj));
      }
    }
    for (double k : k_grid) {
      const Eigen::MatrixXd m = base - k * lead;
      const double det = m.determinant();
      double row_scale = 1.0;
      for (Eigen::Index i = 0; i < p; ++i) row_scale *= m.row(i).norm();
      const double rel = row_scale > 0.0 ? det / row_scale : 0.0;
      report.min_det = std::min(report.min_det, det);
      if (rel < report.min_relative_det) report.min_relative_det = rel;
      if (!(rel > tol) && !report.witness) {
        report.witness = v;
        report.witness_k = k;
      }
    }
    const double lead_det = lead.determinant();
    double lead_scale = 1.0;
    for (Eigen::Index i = 0; i < p; ++i) {
      lead_scale *= base.row(i).norm() + lead.row(i).norm();
    }
    const double lead_rel = lead_scale > 0.0 ? lead_det / lead_scale : 0.0;
    if (odd) {
      if (std::abs(lead_rel) > std::abs(worst_necessary_rel)) {
        worst_necessary_rel = lead_rel;
        report.necessary_det = lead_det;
      }
      if (std::abs(lead_rel) > tol) report.necessary_holds = false;
    } else {
      if (lead_rel < worst_necessary_rel) {
        worst_necessary_rel = lead_rel;
        report.necessary_det = lead_det;
      }
      if (lead_rel < -tol) report.necessary_holds = false;
    }
    if (!report.necessary_holds && !report.witness) report.witness = v;
  }
  report.regular = report.min_relative_det > tol && report.necessary_holds;
  return report;
}

/// Single-state form: uses state.v() as the only admissible velocity.
inline RegularityReport regularity_check(std::span<const Contact> contacts,
                                         const InertiaMatrix& a,
                                         const GeneralizedState& state,
                                         std::span<const double> k_grid,
                                         double tol = 1e-9) {
  const std::vector<Vector> vs{state.v()};
  return regularity_check(contacts, a, vs, k_grid, tol);
}

}  // namespace dryfric
