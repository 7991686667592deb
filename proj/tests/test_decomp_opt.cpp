#include "pwadc/decomp_opt.hpp"
#include "pwadc/empc.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace pwadc;
using oracle::piece1;

namespace {

void expect_valid(const PwaFunction& f, const Decomposition& d, std::size_t samples = 2000) {
  for (const auto& x : sample_uniform(f.domain, samples, 17)) {
    const double fx = eval(f, x);
    const double gx = eval(d.g, x), hx = eval(d.h, x);
    ASSERT_NEAR(gx - hx, fx, 1e-6 * (1 + std::abs(fx)));
    ASSERT_NEAR(gx, max_of_pieces(d.g.pieces, x), 1e-6 * (1 + std::abs(gx)));
    ASSERT_NEAR(hx, max_of_pieces(d.h.pieces, x), 1e-6 * (1 + std::abs(hx)));
  }
}

// max(0, min(x1, x2)) on [-1,1]^2. The concave fold on the diagonal ends at
// the origin, so no convex g lives on this partition.
PwaFunction clipped_min() {
  PwaFunction f;
  f.n = 2;
  f.domain = Polyhedron::box(Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1));
  auto with = [&](std::initializer_list<std::array<double, 3>> rows) {
    MatrixXd V(4 + static_cast<Index>(rows.size()), 2);
    VectorXd w(V.rows());
    V.topRows(4) = f.domain.V();
    w.head(4) = f.domain.w();
    Index r = 4;
    for (const auto& row : rows) {
      V.row(r) << row[0], row[1];
      w[r++] = row[2];
    }
    return Polyhedron(V, w);
  };
  f.regions = {with({{1, 0, 0}}), with({{-1, 0, 0}, {0, 1, 0}}), with({{-1, 0, 0}, {1, -1, 0}}),
               with({{0, -1, 0}, {-1, 1, 0}})};
  f.pieces = {{Eigen::Vector2d(0, 0), 0}, {Eigen::Vector2d(0, 0), 0}, {Eigen::Vector2d(1, 0), 0},
              {Eigen::Vector2d(0, 1), 0}};
  return f;
}

}  // namespace

TEST(DecompOpt, SingleRegion) {
  const auto f = oracle::make1d({{-1, 1}}, {piece1(2, 3)});
  const auto out = decompose_optim(f, Objective::FeasibilityOnly, false);
  ASSERT_TRUE(out.feasible());
  expect_valid(f, *out.decomposition);
}

TEST(DecompOpt, OneDimensionalModels) {
  for (const auto& f : {oracle::abs_model(), oracle::neg_abs_model(), oracle::zigzag()}) {
    for (auto obj : {Objective::FeasibilityOnly, Objective::L1Coefficients}) {
      const auto out = decompose_optim(f, obj, false);
      ASSERT_TRUE(out.feasible());
      EXPECT_EQ(out.route, "lp");
      EXPECT_LE(out.residual, 1e-9);
      const auto& d = *out.decomposition;
      EXPECT_EQ(d.g.size(), f.size());
      EXPECT_EQ(d.objective, to_string(obj));
      EXPECT_FALSE(d.regularized);
      expect_valid(f, d);
    }
  }
}

TEST(DecompOpt, L1ObjectivePicksMinimalCoefficients) {
  // For |x| the unique minimizer of sum |g coef| + |h coef| is g = |x|, h = 0.
  const auto out = decompose_optim(oracle::abs_model(), Objective::L1Coefficients, false);
  ASSERT_TRUE(out.feasible());
  const auto& d = *out.decomposition;
  EXPECT_NEAR(d.g.pieces[0].a[0], -1.0, 1e-9);
  EXPECT_NEAR(d.g.pieces[1].a[0], 1.0, 1e-9);
  for (const auto& p : d.h.pieces) {
    EXPECT_NEAR(p.a[0], 0.0, 1e-9);
    EXPECT_NEAR(p.b, 0.0, 1e-9);
  }
}

TEST(DecompOpt, FoldMultipliersOnZigzag) {
  const auto sys = assemble(oracle::zigzag());
  ASSERT_EQ(sys.couplings.size(), 2u);
  // Region i lies on the side normal'x <= offset; f_i - f_j = fold (offset - normal'x).
  for (const auto& cp : sys.couplings) EXPECT_NEAR(std::abs(cp.fold), 2.0, 1e-12);
  EXPECT_GT(sys.couplings[0].fold, 0.0);  // convex at 0
  EXPECT_LT(sys.couplings[1].fold, 0.0);  // concave at 1
  EXPECT_TRUE(sys.consistent(1e-9));
}

TEST(DecompOpt, DiscontinuousInputIsInfeasible) {
  auto f = oracle::abs_model();
  f.pieces[1].b = 0.25;
  const auto out = decompose_optim(f, Objective::FeasibilityOnly, false);
  EXPECT_FALSE(out.feasible());
  EXPECT_EQ(out.route, "consistency");
}

TEST(DecompOpt, LiteralAndFacetProgramsAgree) {
  const std::vector<PwaFunction> cases{oracle::abs_model(), oracle::neg_abs_model(), oracle::zigzag(), clipped_min(),
                                       empc::double_integrator_law(1), empc::double_integrator_law(2)};
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const auto sys = assemble(cases[c]);
    for (auto obj : {Objective::FeasibilityOnly, Objective::L1Coefficients}) {
      const auto lit = lp::solve(sys.literal_program(obj));
      FarkasSystem::FacetLayout L;
      const auto fac = lp::solve(sys.facet_program(obj, &L));
      EXPECT_EQ(lit.status, fac.status) << "case " << c << " " << to_string(obj);
      if (obj == Objective::L1Coefficients && lit.optimal() && fac.optimal()) {
        // Both minimize sum |g coef| + |h coef|; the facet program drops a constant.
        EXPECT_NEAR(lit.objective, fac.objective + L.cost_constant, 1e-6 * (1 + std::abs(lit.objective)))
            << "case " << c;
      }
    }
  }
}

TEST(DecompOpt, TerminatingConcaveFoldIsInfeasible) {
  const auto f = clipped_min();
  ASSERT_TRUE(validate(f).ok()) << validate(f).summary();
  EXPECT_FALSE(decompose_optim(f, Objective::FeasibilityOnly, false).feasible());

  const auto out = decompose_optim(f, Objective::FeasibilityOnly, true);
  ASSERT_TRUE(out.feasible());
  EXPECT_TRUE(out.decomposition->regularized);
  EXPECT_EQ(out.decomposition->g.size(), 6u);  // three full lines through the origin
  expect_valid(f, *out.decomposition);
}

TEST(DecompOpt, ScalingInvariance) {
  const auto f = empc::double_integrator_law(1);
  auto s = f;
  for (auto& p : s.pieces) {
    p.a *= 1000.0;
    p.b *= 1000.0;
  }
  const auto a = decompose_optim(f, Objective::FeasibilityOnly, false);
  const auto b = decompose_optim(s, Objective::FeasibilityOnly, false);
  EXPECT_EQ(a.feasible(), b.feasible());
  ASSERT_TRUE(b.feasible());
  expect_valid(s, *b.decomposition);
}

TEST(DecompOpt, MpcHorizonOneIsFeasibleOnRawPartition) {
  const auto f = empc::double_integrator_law(1);
  ASSERT_EQ(f.size(), 7u);
  const auto out = decompose_optim(f, Objective::FeasibilityOnly, false);
  ASSERT_TRUE(out.feasible());
  EXPECT_EQ(out.decomposition->stats.cells_g, 7u);
  EXPECT_EQ(out.decomposition->stats.cells_h, 7u);
  expect_valid(f, *out.decomposition);
}

TEST(DecompOpt, MpcLongerHorizonsNeedRegularization) {
  for (int N : {2, 5}) {
    const auto f = empc::double_integrator_law(N);
    EXPECT_FALSE(decompose_optim(f, Objective::FeasibilityOnly, false).feasible()) << N;
  }
  const auto f = empc::double_integrator_law(2);
  const auto out = decompose_optim(f, Objective::FeasibilityOnly, true);
  ASSERT_TRUE(out.feasible());
  EXPECT_TRUE(out.decomposition->regularized);
  EXPECT_GT(out.decomposition->g.size(), f.size());
  expect_valid(f, *out.decomposition);
}

TEST(DecompOpt, ArrangementRouteMatchesLp) {
  // Forcing the closed form on a regularized partition gives a valid pair too.
  const auto r = regularize_arrangement(clipped_min());
  OptimOptions tiny;
  tiny.dense_entry_cap = 1.0;
  const auto out = solve_decomposition(assemble(r), Objective::FeasibilityOnly, tiny);
  ASSERT_TRUE(out.feasible());
  EXPECT_EQ(out.route, "arrangement");
  expect_valid(clipped_min(), *out.decomposition);
}

TEST(DecompOpt, ClosedFormUnavailableWithoutArrangement) {
  OptimOptions tiny;
  tiny.dense_entry_cap = 1.0;
  EXPECT_THROW(solve_decomposition(assemble(oracle::zigzag()), Objective::FeasibilityOnly, tiny),
               lp::NumericalFailure);
}
