#pragma once

// Shared value types for constrained rigid-body systems with dry friction.
// Everything here is an immutable value after construction; SI units,
// angles in radians.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dryfric/errors.hpp"

namespace dryfric {

using Vector = Eigen::VectorXd;
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Parameters = std::map<std::string, double, std::less<>>;

inline constexpr double kPsdTolerance = 1e-12;
inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kUnitNormalTolerance = 1e-12;

namespace detail {

inline std::string dims(Eigen::Index rows, Eigen::Index cols) {
  std::ostringstream os;
  os << rows << "x" << cols;
  return os.str();
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

/// Smallest eigenvalue of the symmetric part of a square matrix.
inline double min_symmetric_eigenvalue(const Matrix& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym,
                                                     Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

}  // namespace detail

/// Generalized coordinates q, generalized velocities v and time t.
class GeneralizedState {
 public:
  GeneralizedState(Vector q, Vector v, double t = 0.0)
      : q_(std::move(q)), v_(std::move(v)), t_(t) {
    detail::require(q_.size() >= 1, "GeneralizedState: empty state");
    detail::require(q_.size() == v_.size(),
                    "GeneralizedState: q has dimension " +
                        std::to_string(q_.size()) + " but v has " +
                        std::to_string(v_.size()));
    detail::require(q_.allFinite() && v_.allFinite() && std::isfinite(t_),
                    "GeneralizedState: non-finite entry");
  }

  const Vector& q() const { return q_; }
  const Vector& v() const { return v_; }
  double t() const { return t_; }
  Eigen::Index dof() const { return q_.size(); }

 private:
  Vector q_;
  Vector v_;
  double t_;
};

struct InertiaReport {
  double symmetry_defect = 0.0;  // max |A - A^T| / max(1, max |A|)
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  bool passes = false;
};

/// Full eigen-analysis of a candidate kinetic-energy Hessian. Passes iff
/// the matrix is symmetric to 1e-12 relative and every eigenvalue exceeds
/// 1e-12 times the largest.
inline InertiaReport validate_inertia(const Matrix& a) {
  detail::require(a.rows() == a.cols() && a.rows() > 0,
                  "validate_inertia: matrix must be square, got " +
                      detail::dims(a.rows(), a.cols()));
  if (!a.allFinite()) {
    throw ContractViolation("validate_inertia: non-finite entry");
  }
  InertiaReport report;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  report.symmetry_defect =
      (a - a.transpose()).cwiseAbs().maxCoeff() / scale;
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym,
                                                     Eigen::EigenvaluesOnly);
  report.min_eigenvalue = eig.eigenvalues().minCoeff();
  report.max_eigenvalue = eig.eigenvalues().maxCoeff();
  report.passes = report.symmetry_defect <= kSymmetryTolerance &&
                  report.max_eigenvalue > 0.0 &&
                  report.min_eigenvalue > 1e-12 * report.max_eigenvalue;
  return report;
}

/// Symmetric positive-definite kinetic-energy Hessian A(q). Holds its LDLT
/// factorization so A^{-1} b is cheap; construction rejects anything that
/// is not SPD (the LDLT pivots double as the definiteness test).
class InertiaMatrix {
 public:
  explicit InertiaMatrix(Matrix a) : a_(std::move(a)) {
    detail::require(a_.rows() == a_.cols() && a_.rows() > 0,
                    "InertiaMatrix: must be square, got " +
                        detail::dims(a_.rows(), a_.cols()));
    detail::require(a_.allFinite(), "InertiaMatrix: non-finite entry");
    const double scale = std::max(1.0, a_.cwiseAbs().maxCoeff());
    detail::require(
        (a_ - a_.transpose()).cwiseAbs().maxCoeff() <=
            kSymmetryTolerance * scale,
        "InertiaMatrix: not symmetric");
    ldlt_.compute(Eigen::MatrixXd(a_));
    const Vector d = ldlt_.vectorD();
    detail::require(ldlt_.info() == Eigen::Success && d.maxCoeff() > 0.0 &&
                        d.minCoeff() > 1e-12 * d.maxCoeff(),
                    "InertiaMatrix: not positive definite");
  }

  const Matrix& matrix() const { return a_; }
  Eigen::Index dof() const { return a_.rows(); }

  /// A^{-1} b.
  Vector solve(const Vector& b) const {
    detail::require(b.size() == a_.rows(), "InertiaMatrix::solve: size");
    return ldlt_.solve(b);
  }
  /// A^{-1} B column by column.
  Matrix solve(const Matrix& b) const {
    detail::require(b.rows() == a_.rows(), "InertiaMatrix::solve: size");
    return ldlt_.solve(Eigen::MatrixXd(b));
  }
  Matrix inverse() const {
    return solve(Matrix(Matrix::Identity(a_.rows(), a_.rows())));
  }

 private:
  Matrix a_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
};

/// r x r contact friction tensor Φ_c. Only its quadratic form enters
/// dissipativity, so non-negative definiteness is checked on the symmetric
/// part.
class ContactFrictionTensor {
 public:
  explicit ContactFrictionTensor(Matrix phi) : phi_(std::move(phi)) {
    detail::require(phi_.rows() == phi_.cols() && phi_.rows() > 0,
                    "ContactFrictionTensor: must be square, got " +
                        detail::dims(phi_.rows(), phi_.cols()));
    detail::require(phi_.allFinite(), "ContactFrictionTensor: non-finite");
    const double lo = detail::min_symmetric_eigenvalue(phi_);
    const double scale = std::max(1.0, phi_.cwiseAbs().maxCoeff());
    if (lo < -kPsdTolerance * scale) {
      std::ostringstream os;
      os << "ContactFrictionTensor: symmetric part not non-negative "
            "definite (smallest eigenvalue "
         << lo << ")";
      throw ContractViolation(os.str());
    }
  }

  static ContactFrictionTensor isotropic(Eigen::Index r, double mu) {
    return ContactFrictionTensor(Matrix(mu * Matrix::Identity(r, r)));
  }
  static ContactFrictionTensor zero(Eigen::Index r) {
    return ContactFrictionTensor(Matrix::Zero(r, r));
  }

  const Matrix& matrix() const { return phi_; }
  Eigen::Index size() const { return phi_.rows(); }

 private:
  Matrix phi_;
};

/// One point of contact: P maps generalized velocity to the velocity of the
/// body point in contact, `normal` is the unit normal covector in contact
/// coordinates (so P^T normal is the constraint gradient).
class Contact {
 public:
  Contact(Matrix projection, Vector normal, ContactFrictionTensor phi_c,
          std::string label = "contact")
      : p_(std::move(projection)),
        normal_(std::move(normal)),
        phi_c_(std::move(phi_c)),
        label_(std::move(label)) {
    const auto r = p_.rows();
    detail::require(r >= 1 && r <= p_.cols(),
                    "Contact '" + label_ + "': P must be r x n with r <= n, got " +
                        detail::dims(p_.rows(), p_.cols()));
    detail::require(normal_.size() == r,
                    "Contact '" + label_ + "': normal has wrong dimension");
    detail::require(phi_c_.size() == r,
                    "Contact '" + label_ + "': friction tensor must be " +
                        detail::dims(r, r));
    detail::require(p_.allFinite() && normal_.allFinite(),
                    "Contact '" + label_ + "': non-finite entry");
    detail::require(std::abs(normal_.norm() - 1.0) <= kUnitNormalTolerance,
                    "Contact '" + label_ + "': normal is not a unit vector");
    // Full row rank <=> P P^T invertible.
    const Eigen::MatrixXd ppt = p_ * p_.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ppt,
                                                       Eigen::EigenvaluesOnly);
    detail::require(
        eig.eigenvalues().minCoeff() > 1e-12 * eig.eigenvalues().maxCoeff(),
        "Contact '" + label_ + "': P is not of full row rank");
  }

  const Matrix& projection() const { return p_; }
  const Vector& normal() const { return normal_; }
  const ContactFrictionTensor& friction() const { return phi_c_; }
  const std::string& label() const { return label_; }
  Eigen::Index rank() const { return p_.rows(); }
  Eigen::Index dof() const { return p_.cols(); }

  /// Constraint gradient ∂f/∂x = P^T n.
  Vector gradient() const { return p_.transpose() * normal_; }

 private:
  Matrix p_;
  Vector normal_;
  ContactFrictionTensor phi_c_;
  std::string label_;
};

struct ContactMode {
  enum class Kind { kFree, kSustained, kImpact };
  enum class Slip { kSlipping, kSticking };

  Kind kind = Kind::kFree;
  Slip slip = Slip::kSlipping;  // meaningful only when kind == kSustained

  static ContactMode free() { return {Kind::kFree, Slip::kSlipping}; }
  static ContactMode slipping() { return {Kind::kSustained, Slip::kSlipping}; }
  static ContactMode sticking() { return {Kind::kSustained, Slip::kSticking}; }
  static ContactMode impact() { return {Kind::kImpact, Slip::kSlipping}; }

  bool is_free() const { return kind == Kind::kFree; }
  bool is_sustained() const { return kind == Kind::kSustained; }
  bool is_sticking() const { return is_sustained() && slip == Slip::kSticking; }
  bool is_slipping() const { return is_sustained() && slip == Slip::kSlipping; }

  std::string name() const {
    switch (kind) {
      case Kind::kFree:
        return "free";
      case Kind::kImpact:
        return "impact";
      case Kind::kSustained:
        return slip == Slip::kSticking ? "stick" : "slip";
    }
    return "?";
  }

  friend bool operator==(const ContactMode& a, const ContactMode& b) {
    if (a.kind != b.kind) return false;
    return a.kind != Kind::kSustained || a.slip == b.slip;
  }
};

/// A zero crossing (downward) of `function` triggers `deactivate` on the
/// contacts with those labels.
struct ModelEvent {
  std::string name;
  std::function<double(const GeneralizedState&)> function;
  std::vector<std::string> deactivate;
};

/// A constrained Lagrangian system A(q) q̈ = X(q, v) + constraint and friction
/// forces. Contacts are returned in a fixed order; gaps[i] is f_i(q) for
/// contacts[i] with f_i >= 0 admissible.
struct MechanicalModel {
  std::string name;
  Eigen::Index dof = 0;
  /// Column names for q and v.
  std::vector<std::string> coordinate_names;
  std::vector<std::string> velocity_names;
  std::function<InertiaMatrix(const Vector& q)> inertia;
  std::function<Vector(const Vector& q, const Vector& v)> applied_force;
  std::function<std::vector<Contact>(const Vector& q)> contacts;
  std::function<Vector(const Vector& q)> gaps;
  /// Z_i = -(d/dt ∂f_i/∂x, v). Optional; a central finite difference of
  /// the contact gradients along v is used when empty.
  std::function<Vector(const Vector& q, const Vector& v)> normal_bias;
  std::function<double(const Vector& q)> potential_energy;
  std::function<std::map<std::string, double>(const GeneralizedState&)>
      invariants;
  std::vector<ModelEvent> events;
  Parameters parameters;
};

/// Checks that every callback agrees on the dimension n at the given state.
inline void check_model(const MechanicalModel& model,
                        const GeneralizedState& state) {
  using detail::require;
  require(model.dof >= 1, "model '" + model.name + "': dof must be >= 1");
  require(state.dof() == model.dof,
          "model '" + model.name + "': state dimension mismatch");
  require(static_cast<bool>(model.inertia) &&
              static_cast<bool>(model.applied_force) &&
              static_cast<bool>(model.contacts) && static_cast<bool>(model.gaps),
          "model '" + model.name + "': missing callback");
  require(model.inertia(state.q()).dof() == model.dof,
          "model '" + model.name + "': inertia dimension mismatch");
  require(model.applied_force(state.q(), state.v()).size() == model.dof,
          "model '" + model.name + "': applied force dimension mismatch");
  const auto cs = model.contacts(state.q());
  for (const auto& c : cs) {
    require(c.dof() == model.dof,
            "model '" + model.name + "': contact '" + c.label() +
                "' dimension mismatch");
  }
  require(model.gaps(state.q()).size() == static_cast<Eigen::Index>(cs.size()),
          "model '" + model.name + "': gap count differs from contact count");
}

/// v_c = P v.
inline Vector contact_velocity(const Contact& contact,
                               const GeneralizedState& state) {
  detail::require(contact.dof() == state.dof(),
                  "contact_velocity: contact '" + contact.label() +
                      "' expects n=" + std::to_string(contact.dof()) +
                      ", state has " + std::to_string(state.dof()));
  return contact.projection() * state.v();
}

/// Q = P A^{-1} P^T.
inline Matrix contact_mobility(const Matrix& p, const InertiaMatrix& a) {
  detail::require(p.cols() == a.dof(), "contact_mobility: dimension mismatch");
  return p * a.solve(Matrix(p.transpose()));
}

/// A-norm of the A-orthogonal lift of v_c = P v into generalized velocity
/// space, i.e. sqrt(v_c^T Q^{-1} v_c). For a body point of mass m this is
/// sqrt(2 T_point), proportional to |v_c|.
inline double a_metric_contact_speed(const Contact& contact,
                                     const InertiaMatrix& a, const Vector& v) {
  detail::require(v.size() == a.dof() && contact.dof() == a.dof(),
                  "a_metric_contact_speed: dimension mismatch");
  const Vector vc = contact.projection() * v;
  const Eigen::MatrixXd q = contact_mobility(contact.projection(), a);
  return std::sqrt(vc.dot(q.ldlt().solve(vc)));
}

/// Orthonormal basis (as columns) of the complement of the unit vector n.
/// Coordinate axes are preferred so that, e.g., n = e_z gives (e_x, e_y).
inline Matrix tangent_basis(const Vector& n) {
  const auto r = n.size();
  Matrix basis(r, r - 1);
  Eigen::Index skip = 0;
  n.cwiseAbs().maxCoeff(&skip);
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < r && col < r - 1; ++i) {
    if (i == skip) continue;
    Vector e = Vector::Unit(r, i);
    e -= e.dot(n) * n;
    for (Eigen::Index j = 0; j < col; ++j) e -= e.dot(basis.col(j)) * basis.col(j);
    basis.col(col++) = e.normalized();
  }
  return basis;
}

}  // namespace dryfric
