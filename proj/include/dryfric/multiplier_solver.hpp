#pragma once

// Lagrange multipliers under friction. The sliding-only system
//
//   Σ_j λ_j (P_i^T n_i, A^{-1} P_j^T [n_j - |n_j| Φ_j v_j / |v_j|])
//       = Z_i - (P_i^T n_i, A^{-1} X)
//
// is assembled by assemble_multiplier_system; its unique solvability is
// the absence of Painlevé paradoxes. solve_contact_forces generalizes it to
// a mix of sliding and sticking contacts for the integrator.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dryfric/core_types.hpp"

namespace dryfric {

inline constexpr double kDefaultSingularityTol = 1e-10;

struct MultiplierSystem {
  Matrix m;
  Vector rhs;
  std::vector<std::string> labels;
};

struct MultiplierSolution {
  Vector lambdas;
  std::vector<ContactMode> modes;
  double condition_number = 0.0;
  double determinant = 0.0;
  /// Contacts removed by the active-set iteration (negative multiplier).
  std::vector<std::string> released;
};

namespace detail {

/// Z_i by central differences of the gradients P_i^T n_i along q̇ = v.
inline Vector finite_difference_bias(const MechanicalModel& model,
                                     const Vector& q, const Vector& v) {
  const double h = 1e-6 / std::max(1.0, v.norm());
  const auto plus = model.contacts(q + h * v);
  const auto minus = model.contacts(q - h * v);
  Vector z(static_cast<Eigen::Index>(plus.size()));
  for (std::size_t i = 0; i < plus.size(); ++i) {
    const Vector dgrad = (plus[i].gradient() - minus[i].gradient()) / (2.0 * h);
    z(static_cast<Eigen::Index>(i)) = -dgrad.dot(v);
  }
  return z;
}

inline Vector constraint_bias(const MechanicalModel& model, const Vector& q,
                              const Vector& v) {
  if (model.normal_bias) return model.normal_bias(q, v);
  return finite_difference_bias(model, q, v);
}

inline double row_scale(const Eigen::MatrixXd& m) {
  double s = 1.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) s *= m.row(i).norm();
  return s;
}

inline double condition_number(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 1.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto sv = svd.singularValues();
  const double lo = sv(sv.size() - 1);
  return lo > 0.0 ? sv(0) / lo : std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Assembles the multiplier system over the given contacts (all of them when
/// `active` is empty). with_friction = false drops the Φ_j term. Throws
/// ContractViolation when friction is requested and a contact is below the
/// stick threshold: that contact needs the static branch.
inline MultiplierSystem assemble_multiplier_system(
    const MechanicalModel& model, const GeneralizedState& state,
    bool with_friction, double stick_eps,
    const std::vector<std::size_t>& active = {}) {
  check_model(model, state);
  const auto contacts = model.contacts(state.q());
  std::vector<std::size_t> idx = active;
  if (idx.empty()) {
    for (std::size_t i = 0; i < contacts.size(); ++i) idx.push_back(i);
  }
  const InertiaMatrix a = model.inertia(state.q());
  const Vector x = model.applied_force(state.q(), state.v());
  const Vector z = detail::constraint_bias(model, state.q(), state.v());
  const Vector a_inv_x = a.solve(x);

  const auto p = static_cast<Eigen::Index>(idx.size());
  MultiplierSystem sys;
  sys.m.resize(p, p);
  sys.rhs.resize(p);
  std::vector<Vector> a_inv_cols;
  for (auto j : idx) {
    detail::require(j < contacts.size(), "assemble_multiplier_system: index");
    const Contact& c = contacts[j];
    Vector w = c.normal();
    if (with_friction) {
      const Vector vc = contact_velocity(c, state);
      const double speed = vc.norm();
      if (speed < stick_eps) {
        throw ContractViolation("assemble_multiplier_system: contact '" +
                                c.label() +
                                "' is sticking; resolve the static branch "
                                "first");
      }
      w -= c.normal().norm() * c.friction().matrix() * vc / speed;
    }
    a_inv_cols.push_back(a.solve(Vector(c.projection().transpose() * w)));
    sys.labels.push_back(c.label());
  }
  for (Eigen::Index i = 0; i < p; ++i) {
    const Vector grad = contacts[idx[i]].gradient();
    for (Eigen::Index j = 0; j < p; ++j) sys.m(i, j) = grad.dot(a_inv_cols[j]);
    sys.rhs(i) = z(static_cast<Eigen::Index>(idx[i])) - grad.dot(a_inv_x);
  }
  return sys;
}

/// Solves M λ = rhs. Contacts with non-positive multipliers are released
/// one at a time (most negative first) and the reduced system re-solved, at
/// most p passes. A determinant below singularity_tol times the product of
/// the row norms is a Painlevé paradox.
inline MultiplierSolution solve_multipliers(
    const MultiplierSystem& sys,
    double singularity_tol = kDefaultSingularityTol) {
  const auto p = sys.m.rows();
  detail::require(sys.m.cols() == p && sys.rhs.size() == p &&
                      static_cast<Eigen::Index>(sys.labels.size()) == p,
                  "solve_multipliers: inconsistent system dimensions");
  detail::require(sys.m.allFinite() && sys.rhs.allFinite(),
                  "solve_multipliers: non-finite system");
  MultiplierSolution out;
  out.lambdas = Vector::Zero(p);
  out.modes.assign(static_cast<std::size_t>(p), ContactMode::free());
  out.condition_number = detail::condition_number(sys.m);

  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < p; ++i) active.push_back(i);
  bool first = true;
  for (Eigen::Index pass = 0; pass <= p && !active.empty(); ++pass) {
    const auto k = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd m(k, k);
    Eigen::VectorXd rhs(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      rhs(i) = sys.rhs(active[i]);
      for (Eigen::Index j = 0; j < k; ++j) m(i, j) = sys.m(active[i], active[j]);
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    const double det = lu.determinant();
    if (first) out.determinant = det;
    first = false;
    if (!(std::abs(det) > singularity_tol * detail::row_scale(m))) {
      std::vector<std::string> names;
      for (auto i : active) names.push_back(sys.labels[i]);
      std::string joined;
      for (const auto& n : names) joined += (joined.empty() ? "" : ", ") + n;
      throw PainleveParadox(
          "multiplier system is singular (contacts: " + joined + ")", names,
          {{"det", det}, {"condition_number", out.condition_number}});
    }
    const Eigen::VectorXd lambda = lu.solve(rhs);
    Eigen::Index worst = -1;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (lambda(i) <= 0.0 && (worst < 0 || lambda(i) < lambda(worst))) worst = i;
    }
    if (worst < 0) {
      for (Eigen::Index i = 0; i < k; ++i) {
        out.lambdas(active[i]) = lambda(i);
        out.modes[static_cast<std::size_t>(active[i])] = ContactMode::slipping();
      }
      break;
    }
    out.released.push_back(sys.labels[active[worst]]);
    active.erase(active.begin() + worst);
  }
  return out;
}

/// λ <= 0: free; otherwise sliding or sticking by the contact speed. Impact
/// is an event and never returned here.
inline ContactMode classify_mode(double lambda, const Vector& v_c,
                                 double stick_eps) {
  if (!(lambda > 0.0)) return ContactMode::free();
  return v_c.norm() >= stick_eps ? ContactMode::slipping()
                                 : ContactMode::sticking();
}

/// As above, but measures only the tangential part of v_c.
inline ContactMode classify_mode(double lambda, const Vector& v_c,
                                 const Vector& normal, double stick_eps) {
  detail::require(v_c.size() == normal.size(), "classify_mode: size");
  const Vector n = normal.normalized();
  return classify_mode(lambda, Vector(v_c - v_c.dot(n) * n), stick_eps);
}

// ---------------------------------------------------------------------------
// Mixed sliding/sticking system used by the integrator.

struct ContactRole {
  std::size_t index = 0;  // into model.contacts(q)
  bool sticking = false;
  /// Unit contact-space direction û for a sliding contact; friction is
  /// -λ |n| Φ û. Ignored for sticking contacts.
  Vector slip_direction;
  /// 0 turns friction off for this contact (frictionless reaction).
  double friction_scale = 1.0;
};

struct ContactForceSolution {
  bool singular = false;
  double determinant = 0.0;
  double determinant_scale = 1.0;
  Vector acceleration;            // A^{-1}(X + constraint + friction)
  Vector generalized_friction;    // Σ P_j^T F_j
  std::vector<double> lambdas;    // per role
  std::vector<Vector> friction;   // per role, contact-space friction F_j
  std::vector<double> stick_ratio;  // |s| for sticking roles, 0 otherwise
  /// s = T w / λ in contact coordinates for sticking roles (the slip
  /// direction taken when |s| exceeds 1); empty for sliding roles.
  std::vector<Vector> stick_slip;
};

/// Sliding contacts contribute one unknown λ_j and one normal equation;
/// sticking contacts contribute λ_j plus tangential unknowns w_j (friction
/// -Φ_j T_j w_j, T_j an orthonormal tangent basis) and require zero contact
/// acceleration. For sliding-only roles this is the multiplier system above.
inline ContactForceSolution solve_contact_forces(
    const MechanicalModel& model, const Vector& q, const Vector& v,
    const InertiaMatrix& a, const Vector& applied,
    const std::vector<Contact>& contacts, const std::vector<ContactRole>& roles,
    const Vector& bias, double singularity_tol = kDefaultSingularityTol) {
  const auto n = a.dof();
  std::vector<Vector> cols;   // generalized force per unknown
  std::vector<Vector> rows;   // constraint covector per equation
  std::vector<double> rhs0;   // bias part of the right-hand side
  std::vector<Eigen::Index> first_unknown;
  std::vector<Matrix> tangents(roles.size());

  bool need_tangent_bias = false;
  for (const auto& role : roles) need_tangent_bias |= role.sticking;
  std::vector<Vector> tangent_bias;
  if (need_tangent_bias) {
    // Ṗ v by central differences; exactly zero for constant P.
    const double h = 1e-6 / std::max(1.0, v.norm());
    const auto plus = model.contacts(q + h * v);
    const auto minus = model.contacts(q - h * v);
    for (std::size_t i = 0; i < plus.size(); ++i) {
      tangent_bias.push_back((plus[i].projection() - minus[i].projection()) *
                             v / (2.0 * h));
    }
  }

  for (std::size_t r = 0; r < roles.size(); ++r) {
    const auto& role = roles[r];
    const Contact& c = contacts.at(role.index);
    const Matrix pt = c.projection().transpose();
    first_unknown.push_back(static_cast<Eigen::Index>(cols.size()));
    rows.push_back(c.gradient());
    rhs0.push_back(bias(static_cast<Eigen::Index>(role.index)));
    if (!role.sticking) {
      Vector w = c.normal();
      if (role.friction_scale != 0.0) {
        w -= role.friction_scale * c.normal().norm() *
             c.friction().matrix() * role.slip_direction;
      }
      cols.push_back(pt * w);
    } else {
      tangents[r] = tangent_basis(c.normal());
      cols.push_back(pt * c.normal());
      const Matrix phi_t = c.friction().matrix() * tangents[r];
      for (Eigen::Index m = 0; m < tangents[r].cols(); ++m) {
        cols.push_back(-(pt * phi_t.col(m)));
        rows.push_back(pt * tangents[r].col(m));
        rhs0.push_back(-tangents[r].col(m).dot(tangent_bias.at(role.index)));
      }
    }
  }

  const auto k = static_cast<Eigen::Index>(cols.size());
  ContactForceSolution out;
  out.lambdas.assign(roles.size(), 0.0);
  out.friction.assign(roles.size(), Vector());
  out.stick_ratio.assign(roles.size(), 0.0);
  out.stick_slip.assign(roles.size(), Vector());
  out.generalized_friction = Vector::Zero(n);

  const Vector a_inv_x = a.solve(applied);
  if (k == 0) {
    out.acceleration = a_inv_x;
    return out;
  }
  Matrix col_mat(n, k);
  for (Eigen::Index j = 0; j < k; ++j) col_mat.col(j) = cols[j];
  const Matrix a_inv_cols = a.solve(col_mat);
  Eigen::MatrixXd m(k, k);
  Eigen::VectorXd rhs(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) m(i, j) = rows[i].dot(a_inv_cols.col(j));
    rhs(i) = rhs0[i] - rows[i].dot(a_inv_x);
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  out.determinant = lu.determinant();
  out.determinant_scale = detail::row_scale(m);
  if (!(std::abs(out.determinant) > singularity_tol * out.determinant_scale)) {
    out.singular = true;
    out.acceleration = a_inv_x;
    return out;
  }
  const Eigen::VectorXd zsol = lu.solve(rhs);
  out.acceleration = a_inv_x + a_inv_cols * zsol;

  for (std::size_t r = 0; r < roles.size(); ++r) {
    const auto& role = roles[r];
    const Contact& c = contacts[role.index];
    const Eigen::Index off = first_unknown[r];
    const double lambda = zsol(off);
    out.lambdas[r] = lambda;
    if (!role.sticking) {
      out.friction[r] = role.friction_scale == 0.0
                            ? Vector(Vector::Zero(c.rank()))
                            : Vector(-lambda * role.friction_scale *
                                     c.normal().norm() *
                                     (c.friction().matrix() * role.slip_direction));
    } else {
      const auto t = tangents[r].cols();
      const Vector w = zsol.segment(off + 1, t);
      out.friction[r] = -(c.friction().matrix() * (tangents[r] * w));
      out.stick_ratio[r] = lambda > 0.0 ? w.norm() / lambda
                                        : std::numeric_limits<double>::infinity();
      out.stick_slip[r] = tangents[r] * w / std::max(lambda, 1e-300);
    }
    out.generalized_friction += c.projection().transpose() * out.friction[r];
  }
  return out;
}

}  // namespace dryfric
