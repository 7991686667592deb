#include "pwadc/geom.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace pwadc;

namespace {

Polyhedron box2(double x0, double y0, double x1, double y1) {
  return Polyhedron::box(Eigen::Vector2d(x0, y0), Eigen::Vector2d(x1, y1));
}

Polyhedron triangle() {
  MatrixXd V(3, 2);
  V << -1, 0, 0, -1, 1, 1;
  return {V, (VectorXd(3) << 0, 0, 1).finished()};
}

Polyhedron add_row(const Polyhedron& P, double a0, double a1, double b) {
  return P.with_rows((MatrixXd(1, 2) << a0, a1).finished(), VectorXd::Constant(1, b));
}

}  // namespace

TEST(Geom, FullDimensionality) {
  EXPECT_TRUE(is_full_dim(box2(-1, -1, 1, 1)));
  MatrixXd V(4, 2);
  V << 1, 0, -1, 0, 0, 1, 0, -1;
  EXPECT_FALSE(is_full_dim(Polyhedron(V, (VectorXd(4) << 0, 0, 1, 1).finished())));
  EXPECT_TRUE(is_full_dim(triangle()));
}

TEST(Geom, EmptySetIsNotFullDimensional) {
  const auto P = add_row(box2(0, 0, 1, 1), 1, 0, -1);
  EXPECT_TRUE(is_empty(P));
  EXPECT_FALSE(is_full_dim(P));
  EXPECT_THROW(remove_redundant(P), EmptyInput);
}

TEST(Geom, IntersectBoxes) {
  const auto R = intersect(box2(-1, -1, 1, 1), box2(0, 0, 2, 2));
  EXPECT_EQ(R.rows(), 4);
  EXPECT_TRUE(oracle::same_vertex_set(oracle::vertices2d(R), oracle::vertices2d(box2(0, 0, 1, 1))));
}

TEST(Geom, IntersectDisjointBoxesIsEmpty) {
  const auto R = intersect(box2(-2, -2, -1, -1), box2(1, 1, 2, 2));
  EXPECT_TRUE(is_empty(R));
}

TEST(Geom, IntersectWithHalfspaceDropsRedundantRows) {
  const Polyhedron half((MatrixXd(1, 2) << 1, 0).finished(), VectorXd::Constant(1, 0.5));
  const auto R = intersect(box2(-1, -1, 1, 1), half);
  EXPECT_EQ(R.rows(), 4);  // x <= 1 is gone
  EXPECT_TRUE(oracle::same_vertex_set(oracle::vertices2d(R), oracle::vertices2d(box2(-1, -1, 0.5, 1))));
}

TEST(Geom, RemoveRedundantDuplicateAndSlackRows) {
  auto P = add_row(box2(-1, -1, 1, 1), 1, 0, 1);
  EXPECT_EQ(remove_redundant(P).rows(), 4);
  P = add_row(box2(-1, -1, 1, 1), 1, 0, 100);
  EXPECT_EQ(remove_redundant(P).rows(), 4);
}

TEST(Geom, RemoveRedundantPreservesVerticesOnRandomPolygons) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ang(0.0, 2 * M_PI);
  for (int trial = 0; trial < 30; ++trial) {
    // Tangent lines of the unit circle (irredundant) plus 3 shifted copies.
    const int k = 5 + trial % 4;
    MatrixXd V(k + 3, 2);
    VectorXd w(k + 3);
    for (int i = 0; i < k; ++i) {
      const double t = 2 * M_PI * i / k + 0.1 * ang(rng) / (2 * M_PI);
      V.row(i) << std::cos(t), std::sin(t);
      w[i] = 1.0;
    }
    for (int i = 0; i < 3; ++i) {
      const double t = ang(rng);
      V.row(k + i) << std::cos(t), std::sin(t);
      w[k + i] = 1.0 / std::cos(M_PI / k) + 0.5 + i;  // outside the polygon
    }
    const Polyhedron P(V, w);
    const auto R = remove_redundant(P);
    SCOPED_TRACE(trial);
    EXPECT_EQ(R.rows(), k);
    EXPECT_TRUE(oracle::same_vertex_set(oracle::vertices2d(P), oracle::vertices2d(R)));
    EXPECT_EQ(remove_redundant(R).rows(), R.rows());  // idempotent
  }
}

TEST(Geom, FacetDimCheck) {
  EXPECT_TRUE(facet_dim_check(box2(-1, 0, 0, 1), box2(0, 0, 1, 1)));
  EXPECT_FALSE(facet_dim_check(box2(-1, -1, 0, 0), box2(0, 0, 1, 1)));
  // 1-D: adjacent intervals meet in a point, which is a facet for n = 1.
  EXPECT_TRUE(facet_dim_check(oracle::interval(-2, 0), oracle::interval(0, 1)));
  EXPECT_FALSE(facet_dim_check(oracle::interval(-2, 0), oracle::interval(1, 2)));
}

TEST(Geom, FacetDimCheckIsSymmetric) {
  const std::vector<Polyhedron> ps{box2(-1, 0, 0, 1), box2(0, 0, 1, 1), box2(-1, -1, 0, 0), box2(0, -1, 1, 0),
                                   box2(0.5, 0.5, 2, 2)};
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (std::size_t j = 0; j < ps.size(); ++j)
      if (i != j) {
        EXPECT_EQ(facet_dim_check(ps[i], ps[j]), facet_dim_check(ps[j], ps[i])) << i << "," << j;
      }
}

TEST(Geom, PartialEdgeContactIsAFacet) {
  EXPECT_TRUE(facet_dim_check(box2(-1, 0, 0, 2), box2(0, 1, 1, 3)));
  const auto h = shared_facet(box2(-1, 0, 0, 2), box2(0, 1, 1, 3));
  ASSERT_TRUE(h.has_value());
  EXPECT_NEAR(h->normal[0], 1.0, 1e-12);
  EXPECT_NEAR(h->offset, 0.0, 1e-12);
}

TEST(Geom, SplitBoxByCuttingPlane) {
  const auto [lo, hi] = split_by(box2(-1, -1, 1, 1), Hyperplane{Eigen::Vector2d(1, 0), 0.0});
  ASSERT_TRUE(lo && hi);
  EXPECT_NEAR(oracle::area(*lo), 2.0, 1e-9);
  EXPECT_NEAR(oracle::area(*hi), 2.0, 1e-9);
}

TEST(Geom, SplitByMissingPlane) {
  const auto P = box2(-1, -1, 1, 1);
  const auto [lo, hi] = split_by(P, Hyperplane{Eigen::Vector2d(1, 0), 5.0});
  ASSERT_TRUE(lo.has_value());
  EXPECT_FALSE(hi.has_value());
  EXPECT_TRUE(oracle::same_vertex_set(oracle::vertices2d(*lo), oracle::vertices2d(P)));
}

TEST(Geom, SplitTriangleByOwnEdge) {
  const auto [lo, hi] = split_by(triangle(), Hyperplane{Eigen::Vector2d(1, 1), 1.0});
  EXPECT_TRUE(lo.has_value());
  EXPECT_FALSE(hi.has_value());
}

TEST(Geom, SplitConservesSamples) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  const auto P = triangle();
  const Hyperplane H{Eigen::Vector2d(1, -2), 0.1};
  const auto [lo, hi] = split_by(P, H);
  ASSERT_TRUE(lo && hi);
  int checked = 0;
  while (checked < 2000) {
    const Eigen::Vector2d x(u(rng), u(rng));
    if (!P.contains(x, 0.0)) continue;
    ++checked;
    const bool on_plane = std::abs(H.signed_distance(x)) <= tolerances().geo;
    const int in = (lo->violation(x) < 0 ? 1 : 0) + (hi->violation(x) < 0 ? 1 : 0);
    EXPECT_TRUE(in == 1 || on_plane);
  }
  EXPECT_NEAR(oracle::area(*lo) + oracle::area(*hi), oracle::area(P), 1e-9);
}

TEST(Geom, CanonicalHyperplanes) {
  const Hyperplane a{Eigen::Vector2d(-2, 2), -4};
  const Hyperplane c = a.canonical();
  EXPECT_NEAR(c.normal.norm(), 1.0, 1e-15);
  EXPECT_GT(c.normal[0], 0.0);
  EXPECT_TRUE(a.same_as(Hyperplane{Eigen::Vector2d(1, -1), 2}, 1e-12));
  EXPECT_FALSE(a.same_as(Hyperplane{Eigen::Vector2d(1, -1), 2.1}, 1e-7));
  // Leading zero component: sign decided by the next one.
  const Hyperplane v = Hyperplane{Eigen::Vector2d(0, -3), 3}.canonical();
  EXPECT_NEAR(v.normal[1], 1.0, 1e-15);
  EXPECT_NEAR(v.offset, -1.0, 1e-15);
}

TEST(Geom, SupportAndBoundingBox) {
  const auto T = triangle();
  EXPECT_NEAR(*T.support(Eigen::Vector2d(1, 2)), 2.0, 1e-9);
  const Box& b = T.bounding_box();
  EXPECT_NEAR(b.lo[0], 0.0, 1e-9);
  EXPECT_NEAR(b.hi[1], 1.0, 1e-9);
  const Polyhedron half((MatrixXd(1, 2) << 1, 0).finished(), VectorXd::Zero(1));
  EXPECT_TRUE(std::isinf(*half.support(Eigen::Vector2d(0, 1))));
}
