#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "dryfric/models/ball_plane.hpp"
#include "dryfric/models/cushion.hpp"
#include "dryfric/models/painleve.hpp"
#include "dryfric/multiplier_solver.hpp"
#include "oracles.hpp"

using namespace dryfric;

namespace {

GeneralizedState painleve_state(double theta, double xdot, double theta_dot) {
  Vector q(3), v(3);
  q << 0.0, theta, 0.0;
  v << xdot, theta_dot, 0.0;
  return GeneralizedState(q, v);
}

double painleve_lambda(const PainleveParams& p, const GeneralizedState& s) {
  const auto sys = assemble_multiplier_system(painleve_model(p), s, true, 1e-12);
  return solve_multipliers(sys).lambdas(0);
}

}  // namespace

TEST(PainleveMultiplier, TensorLawReactionIndependentOfFriction) {
  PainleveParams p;
  for (double mu : {0.0, 0.3, 1.0, 3.0, 10.0}) {
    p.kappa1 = p.mu2 = std::max(mu, 1e-3);
    for (double th : {0.2, 0.8, 1.3, 2.5}) {
      for (double xd : {-1.0, 2.0}) {
        const auto s = painleve_state(th, xd, 0.7);
        const double expected = painleve_lambda_frictionless(p, th, 0.7);
        EXPECT_NEAR(painleve_lambda(p, s), expected, 1e-12 * expected)
            << "mu=" << mu << " theta=" << th;
      }
    }
  }
}

TEST(PainleveMultiplier, MatchesPointMassOracle) {
  for (auto law : {PainleveLaw::kTensor, PainleveLaw::kClassical}) {
    PainleveParams p;
    p.m1 = 1.3;
    p.m2 = 0.7;
    p.l = 0.9;
    p.kappa1 = p.mu2 = 0.4;
    p.law = law;
    for (double th : {0.3, 1.1, 2.0}) {
      for (double xd : {-1.0, 1.5}) {
        const double thd = -0.6;
        const auto s = painleve_state(th, xd, thd);
        const Matrix phi = painleve_contact_tensor_matrix(p, th);
        const double sg = xd > 0 ? 1.0 : -1.0;
        const auto kkt = oracle::painleve_point_masses(
            p.m1, p.m2, p.l, p.g, th, thd, -phi(0, 0) * sg, -phi(1, 0) * sg);
        EXPECT_NEAR(painleve_lambda(p, s), kkt.lambda, 1e-10 * std::abs(kkt.lambda));
      }
    }
  }
}

TEST(PainleveMultiplier, ClassicalClosedForm) {
  PainleveParams p;
  p.kappa1 = p.mu2 = 1.0;
  p.law = PainleveLaw::kClassical;
  const double th = std::numbers::pi / 4;
  EXPECT_NEAR(painleve_lambda_classical(p, th, 0.0, 1.0, -1.0), 19.62, 1e-12);
  EXPECT_NEAR(painleve_lambda(p, painleve_state(th, -1.0, 0.0)), 19.62, 1e-12);
  EXPECT_THROW(painleve_lambda_classical(p, th, 0.0, 1.0, 2.0), ContractViolation);
}

TEST(PainleveMultiplier, ClassicalParadoxAtVanishingDenominator) {
  PainleveParams p;
  const double mu = 2.0 * painleve_critical_mu(p);
  p.kappa1 = p.mu2 = mu;
  p.law = PainleveLaw::kClassical;
  // Root of 2m1 + m2(1 + cos2θ) + μ m2 σ sin2θ for σ = +1.
  const double th = painleve_worst_theta(mu, 1.0);
  const double lo = th, hi = 0.5 * std::numbers::pi;
  double a = lo, b = hi;
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (a + b);
    (painleve_classical_denominator(p, m, mu, 1.0) < 0 ? a : b) = m;
  }
  const double root = 0.5 * (a + b);
  EXPECT_THROW(painleve_lambda_classical(p, root, 0.0, mu, 1.0), PainleveParadox);
  try {
    painleve_lambda(p, painleve_state(root, 1.0, 0.0));
    FAIL() << "expected PainleveParadox";
  } catch (const PainleveParadox& e) {
    ASSERT_EQ(e.contacts().size(), 1u);
    EXPECT_EQ(e.contacts()[0], "floor");
  }
}

TEST(CushionMultiplier, MatchesTwoByTwoOracle) {
  const CushionParams cp;
  const auto s = frenchman_initial_state(cp, 1.0, 30.0, 1);
  const Vector& v = s.v();
  const auto sys = assemble_multiplier_system(cushion_model(cp), s, true, 1e-12);
  ASSERT_EQ(sys.labels[0], "cushion");
  const Vector lam = solve_multipliers(sys).lambdas;
  const Eigen::Vector2d ref = oracle::cushion_normal_reactions(
      cp.m, cp.R, cp.g, cp.mu_table, cp.mu_cushion, v(0), v(3), v(4), v(5));
  EXPECT_NEAR(lam(0), ref(0), 1e-10);
  EXPECT_NEAR(lam(1), ref(1), 1e-10);
  const auto closed = cushion_lambdas(cp, v(3), v(0), v(4), v(5));
  EXPECT_NEAR(lam(0), closed.cushion, 1e-12);
  EXPECT_NEAR(lam(1), closed.table, 1e-12);
}

TEST(CushionMultiplier, ReactionDependsOnFriction) {
  CushionParams cp;
  const auto s = cushion_state(cp, 1.0, 30.0, 2.0, -4.0);
  const auto lam = [&](double mu) {
    cp.mu_table = mu;
    return solve_multipliers(assemble_multiplier_system(cushion_model(cp), s, true, 1e-12))
        .lambdas;
  };
  const double h = 1e-6;
  const Vector d = (lam(0.2 + h) - lam(0.2 - h)) / (2 * h);
  EXPECT_GT(std::abs(d(0)), 1e-3);
  EXPECT_GT(std::abs(d(1)), 1e-3);
}

TEST(BallMultiplier, TableReactionIsWeight) {
  const BallParams b = BallParams::isotropic(0.2, 0.034, 9.81, 0.2);
  Vector q = Vector::Zero(6), v(6);
  q(2) = b.R;
  v << 1, 0.3, 0, 5, -2, 7;
  const auto sol = solve_multipliers(
      assemble_multiplier_system(ball_plane_model(b), GeneralizedState(q, v), true, 1e-12));
  EXPECT_NEAR(sol.lambdas(0), b.m * b.g, 1e-14);
  EXPECT_TRUE(sol.modes[0].is_slipping());
}

TEST(BallMultiplier, StickingContactRejectedBySlidingAssembly) {
  const BallParams b = BallParams::isotropic(0.2, 0.034, 9.81, 0.2);
  Vector v = Vector::Zero(6);
  v(0) = b.R;
  v(4) = 1.0;  // rolling: zero slip
  EXPECT_THROW(assemble_multiplier_system(ball_plane_model(b),
                                          GeneralizedState(Vector::Zero(6), v), true, 1e-9),
               ContractViolation);
  EXPECT_NO_THROW(assemble_multiplier_system(ball_plane_model(b),
                                             GeneralizedState(Vector::Zero(6), v), false, 1e-9));
}

TEST(SolveMultipliers, ReleasesNegativeContacts) {
  MultiplierSystem sys;
  sys.m = Matrix::Identity(2, 2);
  sys.m(0, 1) = 0.5;
  sys.rhs = Vector(2);
  sys.rhs << -1.0, 2.0;
  sys.labels = {"a", "b"};
  const auto sol = solve_multipliers(sys);
  ASSERT_EQ(sol.released.size(), 1u);
  EXPECT_EQ(sol.released[0], "a");
  EXPECT_TRUE(sol.modes[0].is_free());
  EXPECT_TRUE(sol.modes[1].is_slipping());
  EXPECT_DOUBLE_EQ(sol.lambdas(0), 0.0);
  EXPECT_DOUBLE_EQ(sol.lambdas(1), 2.0);
}

TEST(SolveMultipliers, SingularSystemIsParadox) {
  MultiplierSystem sys;
  sys.m = Matrix::Ones(2, 2);
  sys.rhs = Vector::Ones(2);
  sys.labels = {"a", "b"};
  EXPECT_THROW(solve_multipliers(sys), PainleveParadox);
  sys.labels = {"a"};
  EXPECT_THROW(solve_multipliers(sys), ContractViolation);
}

TEST(ClassifyMode, ByReactionAndSpeed) {
  Vector vc(3);
  vc << 1e-12, 0, 0;
  EXPECT_TRUE(classify_mode(0.0, vc, 1e-9).is_free());
  EXPECT_TRUE(classify_mode(-1.0, vc, 1e-9).is_free());
  EXPECT_TRUE(classify_mode(1.0, vc, 1e-9).is_sticking());
  vc(0) = 1e-3;
  EXPECT_TRUE(classify_mode(1.0, vc, 1e-9).is_slipping());
  Vector normal_only(3);
  normal_only << 0, 0, 1.0;
  EXPECT_TRUE(classify_mode(1.0, normal_only, Vector::Unit(3, 2), 1e-9).is_sticking());
}

TEST(SolveContactForces, StickingBallRollsWithoutSlip) {
  const BallParams b = BallParams::isotropic(0.2, 0.034, 9.81, 0.2);
  const MechanicalModel m = ball_plane_model(b);
  Vector q = Vector::Zero(6), v = Vector::Zero(6);
  q(2) = b.R;
  v(0) = 1.0;
  v(4) = 1.0 / b.R;
  const auto contacts = m.contacts(q);
  ContactRole role;
  role.index = 0;
  role.sticking = true;
  const auto sol = solve_contact_forces(m, q, v, m.inertia(q), m.applied_force(q, v), contacts,
                                        {role}, Vector::Zero(1));
  ASSERT_FALSE(sol.singular);
  EXPECT_NEAR(sol.lambdas[0], b.m * b.g, 1e-12);
  EXPECT_LT(sol.acceleration.norm(), 1e-12);
  EXPECT_LT(sol.stick_ratio[0], 1e-12);
}

TEST(SolveContactForces, SlidingRoleMatchesMultiplierSystem) {
  const CushionParams cp;
  const MechanicalModel m = cushion_model(cp);
  const auto s = cushion_state(cp, 1.0, 30.0, 2.0, -4.0);
  const auto contacts = m.contacts(s.q());
  std::vector<ContactRole> roles(2);
  for (std::size_t i = 0; i < 2; ++i) {
    roles[i].index = i;
    const Vector vc = contacts[i].projection() * s.v();
    roles[i].slip_direction = vc.normalized();
  }
  const auto sol = solve_contact_forces(m, s.q(), s.v(), m.inertia(s.q()),
                                        m.applied_force(s.q(), s.v()), contacts, roles,
                                        Vector::Zero(2));
  const auto ref = solve_multipliers(assemble_multiplier_system(m, s, true, 1e-12));
  EXPECT_NEAR(sol.lambdas[0], ref.lambdas(0), 1e-12);
  EXPECT_NEAR(sol.lambdas[1], ref.lambdas(1), 1e-12);
  // Normal accelerations vanish.
  EXPECT_NEAR(sol.acceleration(1), 0.0, 1e-10);
  EXPECT_NEAR(sol.acceleration(2), 0.0, 1e-10);
}
