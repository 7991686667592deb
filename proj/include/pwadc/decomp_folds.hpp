#pragma once

// Decomposition by collecting convex folds: g is the sum of two-piece maxima
// over all convex folds, h = g - f on the overlay of both partitions.

#include "pwadc/arrangement.hpp"
#include "pwadc/decomposition.hpp"
#include "pwadc/pwa.hpp"

#include <cmath>
#include <sstream>
#include <vector>

namespace pwadc {

/// Separator {x | (a_i - a_j)'x = b_j - b_i} of a fold pair.
inline Hyperplane fold_separator(const PwaFunction& f, const IndexPair& p) {
  const AffinePiece d = f.pieces[p.first] - f.pieces[p.second];
  return Hyperplane{d.a, -d.b};
}

/// g(x) = sum over convex folds (i,j) of max(f_i(x), f_j(x)) as an explicit
/// PwaFunction on the arrangement of the distinct separators inside F.
inline PwaFunction build_g_folds(const PwaFunction& f, const FoldSets& folds) {
  PwaFunction g;
  g.n = f.n;
  g.domain = f.domain;
  if (folds.convex.empty()) {
    g.pieces.push_back({VectorXd::Zero(f.n), 0.0});
    g.regions.push_back(remove_redundant(f.domain));
    return g;
  }
  std::vector<Hyperplane> hps;
  hps.reserve(folds.convex.size());
  for (const auto& p : folds.convex) hps.push_back(fold_separator(f, p));
  g.regions = build_cells(f.domain, dedup_hyperplanes(hps, tolerances().geo));

  // Each term keeps its own branch even when separators coincide.
  g.pieces.reserve(g.regions.size());
  for (const auto& cell : g.regions) {
    const VectorXd& c = cell.center();
    AffinePiece sum{VectorXd::Zero(f.n), 0.0};
    for (const auto& [i, j] : folds.convex) {
      const auto& pi = f.pieces[i];
      const auto& pj = f.pieces[j];
      sum = sum + (pi(c) >= pj(c) ? pi : pj);
    }
    g.pieces.push_back(std::move(sum));
  }
  return g;
}

/// h = g - f on all full-dimensional intersections of g-cells and f-regions.
inline PwaFunction build_h_overlay(const PwaFunction& g, const PwaFunction& f) {
  if (g.n != f.n) throw std::invalid_argument("build_h_overlay: dimension mismatch");
  PwaFunction h;
  h.n = f.n;
  h.domain = f.domain;
  const double tol = tolerances().geo;
  for (std::size_t a = 0; a < g.size(); ++a) {
    const Box& ga = g.regions[a].bounding_box();
    for (std::size_t b = 0; b < f.size(); ++b) {
      if (!ga.overlaps(f.regions[b].bounding_box(), tol)) continue;
      const Polyhedron R = g.regions[a].with_rows(f.regions[b].V(), f.regions[b].w());
      if (!is_full_dim(R)) continue;
      const AffinePiece piece = g.pieces[a] - f.pieces[b];
      const VectorXd& c = R.center();
      const double expect = eval(g, c) - eval(f, c);
      if (std::abs(piece(c) - expect) > 1e-8 * (1.0 + std::abs(expect))) {
        std::ostringstream os;
        os << "build_h_overlay: overlay cell (" << a << "," << b << ") disagrees with g - f by "
           << std::abs(piece(c) - expect);
        throw InternalError(os.str());
      }
      h.regions.push_back(remove_redundant(R));
      h.pieces.push_back(piece);
    }
  }
  if (h.pieces.empty()) throw InternalError("build_h_overlay: empty overlay");
  return h;
}

inline Decomposition decompose_folds(const PwaFunction& f) {
  f.check_shape();
  detail::StatsScope scope;
  Decomposition d;
  d.method = Method::Folds;
  const FoldSets folds = classify_folds(f);
  d.g = build_g_folds(f, folds);
  d.h = build_h_overlay(d.g, f);
  d.stats.cells_g = d.g.size();
  d.stats.cells_h = d.h.size();
  scope.finish(d.stats);
  return d;
}

}  // namespace pwadc
