#include <random>

#include <gtest/gtest.h>

#include "dryfric/core_types.hpp"
#include "dryfric/models/ball_plane.hpp"
#include "dryfric/models/painleve.hpp"

using namespace dryfric;

namespace {

Matrix random_spd(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> nd;
  Matrix b(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) b(i, j) = nd(rng);
  return b * b.transpose() + Matrix::Identity(n, n);
}

}  // namespace

TEST(GeneralizedState, RejectsMismatchedDimensions) {
  EXPECT_THROW(GeneralizedState(Vector::Zero(3), Vector::Zero(2)), ContractViolation);
  EXPECT_THROW(GeneralizedState(Vector(), Vector()), ContractViolation);
}

TEST(GeneralizedState, RejectsNonFinite) {
  Vector q = Vector::Zero(2);
  q(1) = std::nan("");
  EXPECT_THROW(GeneralizedState(q, Vector::Zero(2)), ContractViolation);
  EXPECT_THROW(GeneralizedState(Vector::Zero(2), Vector::Zero(2), INFINITY),
               ContractViolation);
}

TEST(GeneralizedState, Accessors) {
  Vector q(2), v(2);
  q << 1, 2;
  v << 3, 4;
  GeneralizedState s(q, v, 0.5);
  EXPECT_EQ(s.dof(), 2);
  EXPECT_EQ(s.q(), q);
  EXPECT_EQ(s.v(), v);
  EXPECT_DOUBLE_EQ(s.t(), 0.5);
}

TEST(InertiaMatrix, RejectsNonSymmetric) {
  Matrix a(2, 2);
  a << 1, 0.5, 0, 1;
  EXPECT_THROW(InertiaMatrix{a}, ContractViolation);
}

TEST(InertiaMatrix, RejectsIndefinite) {
  Matrix a(2, 2);
  a << 1, 2, 2, 1;
  EXPECT_THROW(InertiaMatrix{a}, ContractViolation);
  EXPECT_THROW(InertiaMatrix{Matrix::Zero(2, 2)}, ContractViolation);
}

TEST(InertiaMatrix, SolveMatchesInverse) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_spd(rng, 5);
    const InertiaMatrix im(a);
    const Vector b = Vector::LinSpaced(5, -1.0, 2.0);
    EXPECT_LT((a * im.solve(b) - b).norm(), 1e-10);
    EXPECT_LT((im.inverse() * a - Matrix::Identity(5, 5)).norm(), 1e-9);
  }
}

TEST(InertiaMatrix, ValidateReport) {
  Matrix a(2, 2);
  a << 2, 0, 0, 3;
  const auto r = validate_inertia(a);
  EXPECT_TRUE(r.passes);
  EXPECT_DOUBLE_EQ(r.min_eigenvalue, 2.0);
  EXPECT_DOUBLE_EQ(r.max_eigenvalue, 3.0);
  a(0, 0) = -1;
  EXPECT_FALSE(validate_inertia(a).passes);
}

TEST(InertiaMatrix, PainleveAndBallAreSpd) {
  PainleveParams p;
  for (int i = 0; i < 360; ++i) {
    EXPECT_TRUE(validate_inertia(painleve_inertia_matrix(p, i * M_PI / 180)).passes);
  }
  EXPECT_TRUE(validate_inertia(ball_inertia_omega(0.2, 0.034)).passes);
}

TEST(ContactFrictionTensor, AcceptsNonSymmetricPsd) {
  Matrix phi(2, 2);
  phi << 1, 3, -3, 1;  // symmetric part = I
  EXPECT_NO_THROW(ContactFrictionTensor{phi});
}

TEST(ContactFrictionTensor, RejectsNegativeSymmetricPart) {
  Matrix phi(2, 2);
  phi << 1, 0, 4, 1;  // symmetric part has eigenvalue -1
  EXPECT_THROW(ContactFrictionTensor{phi}, ContractViolation);
  EXPECT_THROW(ContactFrictionTensor(Matrix::Zero(2, 3)), ContractViolation);
}

TEST(ContactFrictionTensor, Factories) {
  EXPECT_EQ(ContactFrictionTensor::isotropic(3, 0.2).matrix(),
            Matrix(0.2 * Matrix::Identity(3, 3)));
  EXPECT_TRUE(ContactFrictionTensor::zero(2).matrix().isZero());
}

TEST(Contact, GradientIsProjectedNormal) {
  const Matrix p = ball_table_projection(0.034);
  const Contact c(p, Vector::Unit(3, 2), ContactFrictionTensor::isotropic(3, 0.2),
                  "table");
  EXPECT_EQ(c.rank(), 3);
  EXPECT_EQ(c.dof(), 6);
  EXPECT_EQ(c.gradient(), Vector(p.transpose() * Vector::Unit(3, 2)));
}

TEST(Contact, RejectsBadInput) {
  const Matrix p = ball_table_projection(0.034);
  const auto phi = ContactFrictionTensor::isotropic(3, 0.2);
  EXPECT_THROW(Contact(p, Vector::Constant(3, 1.0), phi), ContractViolation);
  EXPECT_THROW(Contact(p, Vector::Unit(2, 1), phi), ContractViolation);
  Matrix deficient = p;
  deficient.row(1) = deficient.row(0);
  EXPECT_THROW(Contact(deficient, Vector::Unit(3, 2), phi), ContractViolation);
  EXPECT_THROW(Contact(p, Vector::Unit(3, 2), ContactFrictionTensor::isotropic(2, 0.2)),
               ContractViolation);
}

TEST(ContactMode, Names) {
  EXPECT_EQ(ContactMode::free().name(), "free");
  EXPECT_EQ(ContactMode::slipping().name(), "slip");
  EXPECT_EQ(ContactMode::sticking().name(), "stick");
  EXPECT_EQ(ContactMode::impact().name(), "impact");
  EXPECT_TRUE(ContactMode::sticking().is_sustained());
  EXPECT_FALSE(ContactMode::free().is_sustained());
}

TEST(ContactKinematics, ContactVelocityAndDimensionCheck) {
  const Contact c(ball_table_projection(0.5), Vector::Unit(3, 2),
                  ContactFrictionTensor::isotropic(3, 0.2));
  Vector v(6);
  v << 1, 2, 0, 3, 4, 5;
  const Vector vc = contact_velocity(c, GeneralizedState(Vector::Zero(6), v));
  EXPECT_DOUBLE_EQ(vc(0), 1 - 0.5 * 4);
  EXPECT_DOUBLE_EQ(vc(1), 2 + 0.5 * 3);
  EXPECT_DOUBLE_EQ(vc(2), 0.0);
  EXPECT_THROW(contact_velocity(c, GeneralizedState(Vector::Zero(3), Vector::Zero(3))),
               ContractViolation);
}

TEST(ContactKinematics, MetricSpeedOfPointMass) {
  // A = m I and P = I: the A-metric speed is sqrt(m) |v_c|.
  const double m = 2.5;
  const InertiaMatrix a(Matrix(m * Matrix::Identity(3, 3)));
  const Contact c(Matrix::Identity(3, 3), Vector::Unit(3, 2),
                  ContactFrictionTensor::isotropic(3, 0.3));
  Vector v(3);
  v << 0.3, -0.4, 0.0;
  EXPECT_NEAR(a_metric_contact_speed(c, a, v), std::sqrt(m) * 0.5, 1e-14);
}

TEST(ContactKinematics, TangentBasisIsOrthonormalComplement) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index r = 2 + trial % 3;
    Vector n(r);
    for (Eigen::Index i = 0; i < r; ++i) n(i) = nd(rng);
    n.normalize();
    const Matrix t = tangent_basis(n);
    ASSERT_EQ(t.cols(), r - 1);
    EXPECT_LT((t.transpose() * t - Matrix::Identity(r - 1, r - 1)).norm(), 1e-12);
    EXPECT_LT((t.transpose() * n).norm(), 1e-12);
  }
  const Matrix t = tangent_basis(Vector::Unit(3, 2));
  EXPECT_LT((t.col(0) - Vector::Unit(3, 0)).norm(), 1e-15);
  EXPECT_LT((t.col(1) - Vector::Unit(3, 1)).norm(), 1e-15);
}

TEST(MechanicalModel, CheckModelDetectsMismatch) {
  MechanicalModel m = painleve_model(PainleveParams{});
  const GeneralizedState s(Vector::Zero(3), Vector::Zero(3));
  EXPECT_NO_THROW(check_model(m, s));
  EXPECT_THROW(check_model(m, GeneralizedState(Vector::Zero(2), Vector::Zero(2))),
               ContractViolation);
  m.gaps = [](const Vector&) { return Vector::Zero(2); };
  EXPECT_THROW(check_model(m, s), ContractViolation);
  m.inertia = nullptr;
  EXPECT_THROW(check_model(m, s), ContractViolation);
}
