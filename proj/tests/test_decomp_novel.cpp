#include "pwadc/decomp_novel.hpp"
#include "pwadc/empc.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace pwadc;

namespace {

void expect_identity_and_convexity(const PwaFunction& f, const Decomposition& d, std::size_t samples = 2000) {
  for (const auto& x : sample_uniform(f.domain, samples, 23)) {
    const double fx = eval(f, x);
    const double gx = eval(d.g, x), hx = eval(d.h, x);
    ASSERT_NEAR(gx - hx, fx, 1e-6 * (1 + std::abs(fx)));
    ASSERT_NEAR(gx, max_of_pieces(d.g.pieces, x), 1e-6 * (1 + std::abs(gx)));
    ASSERT_NEAR(hx, max_of_pieces(d.h.pieces, x), 1e-6 * (1 + std::abs(hx)));
  }
}

// Cells cover F, have pairwise disjoint interiors, and f' = f everywhere.
void expect_fold_partition(const PwaFunction& f, const FoldArrangement& arr, const PwaFunction& fp) {
  for (std::size_t i = 0; i < arr.cells.size(); ++i)
    for (std::size_t j = i + 1; j < arr.cells.size(); ++j) {
      if (!arr.cells[i].bounding_box().overlaps(arr.cells[j].bounding_box(), 1e-9)) continue;
      ASSERT_FALSE(is_full_dim(intersect(arr.cells[i], arr.cells[j]))) << i << "," << j;
    }
  for (const auto& x : sample_uniform(f.domain, 2000, 29)) {
    ASSERT_GE(fp.locate(x, tolerances().geo), 0);
    const double fx = eval(f, x);
    ASSERT_NEAR(eval(fp, x), fx, 1e-6 * (1 + std::abs(fx)));
  }
}

}  // namespace

TEST(DecompNovel, ZigzagUsesBothFoldLines) {
  const auto f = oracle::zigzag();
  FoldArrangement arr;
  const auto fp = fold_relabel(f, &arr);
  EXPECT_EQ(arr.hyperplanes.size(), 2u);
  EXPECT_EQ(arr.cells.size(), 3u);
  expect_fold_partition(f, arr, fp);

  const auto d = decompose_novel(f);
  EXPECT_EQ(d.method, Method::Novel);
  ASSERT_TRUE(d.arrangement.has_value());
  EXPECT_EQ(d.arrangement->hyperplanes, 2u);
  EXPECT_EQ(d.arrangement->cells, 3u);
  EXPECT_EQ(d.objective, "feasibility");
  expect_identity_and_convexity(f, d);
}

TEST(DecompNovel, AbsoluteValue) {
  const auto d = decompose_novel(oracle::abs_model(), Objective::L1Coefficients);
  EXPECT_EQ(d.g.size(), 2u);
  for (double x = -1; x <= 1; x += 0.05) {
    const VectorXd p = VectorXd::Constant(1, x);
    EXPECT_NEAR(eval(d.g, p), std::abs(x), 1e-9);
    EXPECT_NEAR(eval(d.h, p), 0.0, 1e-9);
  }
}

TEST(DecompNovel, CollinearFoldsShareOneHyperplane) {
  // |x1| - |x2| on the quadrants: four folds, two distinct separator lines.
  PwaFunction f;
  f.n = 2;
  f.domain = Polyhedron::box(Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1));
  for (int sx : {-1, 1})
    for (int sy : {-1, 1}) {
      const Eigen::Vector2d lo(sx < 0 ? -1 : 0, sy < 0 ? -1 : 0);
      f.regions.push_back(Polyhedron::box(lo, lo + Eigen::Vector2d(1, 1)));
      f.pieces.push_back({Eigen::Vector2d(sx, -sy), 0.0});
    }
  const auto folds = classify_folds(f);
  EXPECT_EQ(folds.convex.size(), 2u);
  EXPECT_EQ(folds.concave.size(), 2u);
  EXPECT_EQ(fold_hyperplanes(f, folds).size(), 2u);
  const auto d = decompose_novel(f);
  EXPECT_EQ(d.arrangement->cells, 4u);
  expect_identity_and_convexity(f, d);
}

TEST(DecompNovel, ExtendsTerminatingFold) {
  // max(0, min(x1, x2)): the diagonal fold stops at the origin; extending it
  // to a full line makes the partition regular.
  PwaFunction g;
  g.n = 2;
  g.domain = Polyhedron::box(Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1));
  g.regions.push_back(Polyhedron::box(Eigen::Vector2d(-1, -1), Eigen::Vector2d(0, 1)));
  g.pieces.push_back({Eigen::Vector2d(0, 0), 0});
  g.regions.push_back(Polyhedron::box(Eigen::Vector2d(0, -1), Eigen::Vector2d(1, 0)));
  g.pieces.push_back({Eigen::Vector2d(0, 0), 0});
  MatrixXd T1(2, 2), T2(2, 2);
  T1 << -1, 0, 1, -1;  // x1 >= 0, x1 <= x2
  T2 << 0, -1, -1, 1;  // x2 >= 0, x2 <= x1
  g.regions.push_back(Polyhedron::box(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)).with_rows(T1, VectorXd::Zero(2)));
  g.pieces.push_back({Eigen::Vector2d(1, 0), 0});
  g.regions.push_back(Polyhedron::box(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)).with_rows(T2, VectorXd::Zero(2)));
  g.pieces.push_back({Eigen::Vector2d(0, 1), 0});
  ASSERT_TRUE(validate(g).ok()) << validate(g).summary();

  FoldArrangement arr;
  const auto fp = fold_relabel(g, &arr);
  EXPECT_EQ(arr.hyperplanes.size(), 3u);
  EXPECT_EQ(arr.cells.size(), 6u);
  expect_fold_partition(g, arr, fp);
  expect_identity_and_convexity(g, decompose_novel(g));
}

TEST(DecompNovel, AffineFunctionKeepsDomain) {
  const auto f = oracle::make1d({{-1, 0}, {0, 1}}, {oracle::piece1(1, 1), oracle::piece1(1, 1)});
  const auto d = decompose_novel(f);
  EXPECT_EQ(d.arrangement->hyperplanes, 0u);
  EXPECT_EQ(d.arrangement->cells, 1u);
  expect_identity_and_convexity(f, d);
}

TEST(DecompNovel, MpcHorizonOne) {
  const auto f = empc::double_integrator_law(1);
  FoldArrangement arr;
  const auto fp = fold_relabel(f, &arr);
  EXPECT_EQ(arr.cells.size(), 33u);
  expect_fold_partition(f, arr, fp);
  const auto d = decompose_novel(f);
  EXPECT_EQ(d.stats.cells_g, 33u);
  EXPECT_EQ(d.stats.cells_h, 33u);
  expect_identity_and_convexity(f, d);
}

TEST(DecompNovel, MpcHorizonThree) {
  const auto f = empc::double_integrator_law(3);
  FoldArrangement arr;
  const auto fp = fold_relabel(f, &arr);
  expect_fold_partition(f, arr, fp);
  const auto d = decompose_novel(f, Objective::L1Coefficients);
  EXPECT_EQ(d.objective, "l1");
  expect_identity_and_convexity(f, d);
}
