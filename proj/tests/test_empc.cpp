#include "pwadc/empc.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>

using namespace pwadc;
using namespace pwadc::empc;

namespace {

MatrixXd riccati_rhs(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R, const MatrixXd& P) {
  const MatrixXd S = R + B.transpose() * P * B;
  return A.transpose() * P * A - A.transpose() * P * B * S.inverse() * B.transpose() * P * A + Q;
}

struct Law {
  MpcSpec spec;
  CondensedQp qp;
  ExploreResult ex;
  PwaFunction f;
};

const Law& law(int N) {
  static std::map<int, Law> cache;
  auto it = cache.find(N);
  if (it == cache.end()) {
    Law l;
    l.spec = MpcSpec::double_integrator(N);
    l.qp = condense(l.spec);
    l.ex = explore(l.qp);
    l.f = make_pwa(l.ex.regions);
    it = cache.emplace(N, std::move(l)).first;
  }
  return it->second;
}

// KKT check written against the raw QP data: u feasible, and the gradient is
// a nonnegative combination of the constraint rows tight at u.
double kkt_residual(const CondensedQp& qp, const VectorXd& x, const VectorXd& u) {
  const VectorXd slack = qp.w + qp.S * x - qp.G * u;
  double worst = std::max(0.0, -slack.minCoeff());
  std::vector<Index> tight;
  for (Index i = 0; i < slack.size(); ++i)
    if (slack[i] <= 1e-7) tight.push_back(i);
  const VectorXd grad = qp.H * u + qp.F * x;
  if (tight.empty()) return std::max(worst, grad.cwiseAbs().maxCoeff());
  MatrixXd Gt(qp.G.cols(), static_cast<Index>(tight.size()));
  for (std::size_t k = 0; k < tight.size(); ++k) Gt.col(static_cast<Index>(k)) = qp.G.row(tight[k]).transpose();
  const VectorXd lam = Gt.completeOrthogonalDecomposition().solve(-grad);
  worst = std::max(worst, (Gt * lam + grad).cwiseAbs().maxCoeff());
  worst = std::max(worst, std::max(0.0, -lam.minCoeff()));
  return worst;
}

}  // namespace

TEST(Empc, DareScalarGoldenRatio) {
  const MatrixXd I = MatrixXd::Identity(2, 2);
  const MatrixXd P = dare(I, I, I, I);
  const double phi = (1 + std::sqrt(5.0)) / 2;
  EXPECT_NEAR(P(0, 0), phi, 1e-10);
  EXPECT_NEAR(P(1, 1), phi, 1e-10);
  EXPECT_NEAR(P(0, 1), 0.0, 1e-12);
}

TEST(Empc, DareResidualDoubleIntegrator) {
  const auto s = MpcSpec::double_integrator(1);
  EXPECT_LE((s.P - riccati_rhs(s.A, s.B, s.Q, s.R, s.P)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_EQ(s.P.llt().info(), Eigen::Success);
  EXPECT_LE((s.P - s.P.transpose()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Empc, DareZeroCost) {
  const MatrixXd I = MatrixXd::Identity(2, 2);
  const MatrixXd P = dare(0.5 * I, I, MatrixXd::Zero(2, 2), I);
  EXPECT_LE(P.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Empc, DareUnstabilizableDoesNotConverge) {
  const MatrixXd A = 2.0 * MatrixXd::Identity(1, 1);
  EXPECT_THROW(dare(A, MatrixXd::Zero(1, 1), MatrixXd::Identity(1, 1), MatrixXd::Identity(1, 1), 200),
               NoConvergence);
}

TEST(Empc, InvariantSetForContractiveDynamics) {
  const MatrixXd A = 0.5 * MatrixXd::Identity(2, 2);
  const auto X = Polyhedron::box(Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1));
  const auto U = Polyhedron::box(VectorXd::Constant(1, -1.0), VectorXd::Constant(1, 1.0));
  const auto T = lqr_invariant_set(A, MatrixXd::Zero(2, 1), MatrixXd::Zero(1, 2), X, U);
  EXPECT_TRUE(oracle::same_vertex_set(oracle::vertices2d(T), oracle::vertices2d(X)));
}

TEST(Empc, InvariantSetLooseConstraints) {
  const auto s = MpcSpec::double_integrator(1);
  const auto X = Polyhedron::box(Eigen::Vector2d(-1e3, -1e3), Eigen::Vector2d(1e3, 1e3));
  const auto U = Polyhedron::box(VectorXd::Constant(1, -1e6), VectorXd::Constant(1, 1e6));
  const MatrixXd K = lqr_gain(s.A, s.B, s.R, s.P);
  const auto T = lqr_invariant_set(s.A, s.B, K, X, U);
  // Closed loop from X may leave X, so T is X intersected with a few more rows.
  for (const auto& x : sample_uniform(T, 200, 3)) EXPECT_TRUE(X.contains(x, 0.0));
}

TEST(Empc, TerminalSetIsInvariant) {
  const auto s = MpcSpec::double_integrator(1);
  const MatrixXd K = lqr_gain(s.A, s.B, s.R, s.P);
  const MatrixXd Acl = s.A + s.B * K;
  for (const auto& x : sample_uniform(s.T, 1000, 5)) {
    ASSERT_TRUE(s.T.contains(Acl * x, 1e-9));
    ASSERT_TRUE(s.X.contains(x, 1e-9));
    ASSERT_LE(std::abs((K * x)[0]), 1.0 + 1e-9);
  }
}

TEST(Empc, CondenseHorizonOne) {
  const auto s = MpcSpec::double_integrator(1);
  const auto qp = condense(s);
  ASSERT_EQ(qp.H.rows(), 1);
  EXPECT_NEAR(qp.H(0, 0), (s.R + s.B.transpose() * s.P * s.B)(0, 0), 1e-12);
  const MatrixXd F = s.B.transpose() * s.P * s.A;
  EXPECT_LE((qp.F - F).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Empc, CondenseHorizonFiveIsPositiveDefinite) {
  const auto qp = condense(MpcSpec::double_integrator(5));
  ASSERT_EQ(qp.H.rows(), 5);
  EXPECT_EQ(qp.H.llt().info(), Eigen::Success);
  EXPECT_LE((qp.H - qp.H.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Empc, HorizonZeroRejected) {
  auto s = MpcSpec::double_integrator(1);
  s.N = 0;
  EXPECT_THROW(condense(s), std::invalid_argument);
}

TEST(Empc, HorizonOneHasSevenRegions) {
  const auto& l = law(1);
  EXPECT_EQ(l.f.size(), 7u);
  EXPECT_NEAR(eval(l.f, Eigen::Vector2d(0, 0)), 0.0, 1e-12);
}

TEST(Empc, LawNearOriginIsLqr) {
  const auto& l = law(5);
  const MatrixXd K = lqr_gain(l.spec.A, l.spec.B, l.spec.R, l.spec.P);
  for (const auto& cr : l.ex.regions) {
    if (!cr.active_set.empty()) continue;
    EXPECT_LE((cr.u0_law.a - K.row(0).transpose()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(cr.u0_law.b, 0.0, 1e-12);
    EXPECT_TRUE(cr.region.contains(Eigen::Vector2d(0, 0), 0.0));
    return;
  }
  FAIL() << "no unconstrained region";
}

TEST(Empc, LawRespectsInputBoundAndSaturates) {
  const auto& l = law(5);
  double hi = 0;
  for (const auto& x : sample_uniform(l.f.domain, 5000, 7)) {
    const double u = eval(l.f, x);
    ASSERT_LE(std::abs(u), 1.0 + 1e-9);
    hi = std::max(hi, std::abs(u));
  }
  EXPECT_NEAR(hi, 1.0, 1e-9);
}

TEST(Empc, FeasibleSetIsConvex) {
  const auto& l = law(3);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> ux(-25, 25), uv(-5, 5);
  std::vector<VectorXd> feas;
  while (feas.size() < 400) {
    const Eigen::Vector2d x(ux(rng), uv(rng));
    if (l.qp.solve_at(x)) feas.push_back(x);
  }
  for (std::size_t k = 0; k + 1 < feas.size(); k += 2) {
    const VectorXd mid = 0.5 * (feas[k] + feas[k + 1]);
    EXPECT_TRUE(l.qp.solve_at(mid).has_value());
    EXPECT_GE(l.f.locate(mid, 1e-7), 0);
  }
}

TEST(Empc, RegionInteriorsDisjoint) {
  const auto& l = law(3);
  const auto& R = l.f.regions;
  for (std::size_t i = 0; i < R.size(); ++i)
    for (std::size_t j = i + 1; j < R.size(); ++j) {
      if (!R[i].bounding_box().overlaps(R[j].bounding_box(), 1e-9)) continue;
      ASSERT_FALSE(is_full_dim(intersect(R[i], R[j]))) << i << "," << j;
    }
}

TEST(Empc, HorizonOneMatchesClampedMinimizer) {
  // With a single input the QP is a 1-D convex problem: clamp the
  // unconstrained minimizer to the feasible interval.
  const auto& l = law(1);
  for (const auto& x : sample_uniform(l.f.domain, 1000, 19)) {
    const double H = l.qp.H(0, 0), q = (l.qp.F * x)[0];
    double lo = -lp::kInf, hi = lp::kInf;
    const VectorXd rhs = l.qp.w + l.qp.S * x;
    for (Index i = 0; i < l.qp.G.rows(); ++i) {
      const double g = l.qp.G(i, 0);
      if (g > 0) hi = std::min(hi, rhs[i] / g);
      if (g < 0) lo = std::max(lo, rhs[i] / g);
    }
    ASSERT_LE(lo, hi + 1e-9);
    const double u = std::clamp(-q / H, lo, hi);
    ASSERT_NEAR(eval(l.f, x), u, 1e-6);
  }
}

TEST(Empc, ExplicitLawMatchesKkt) {
  for (int N : {2, 5}) {
    const auto& l = law(N);
    std::size_t checked = 0;
    for (const auto& x : sample_uniform(l.f.domain, 1000, 31)) {
      const long r = l.f.locate(x, tolerances().geo);
      ASSERT_GE(r, 0);
      const auto& cr = l.ex.regions[static_cast<std::size_t>(r)];
      const VectorXd u = cr.Ku * x + cr.ku;
      ASSERT_LE(kkt_residual(l.qp, x, u), 1e-6) << "N=" << N << " x=" << x.transpose();
      const auto sol = l.qp.solve_at(x);
      ASSERT_TRUE(sol.has_value());
      ASSERT_NEAR(sol->u[0], eval(l.f, x), 1e-6);
      ++checked;
    }
    EXPECT_EQ(checked, 1000u);
  }
}
