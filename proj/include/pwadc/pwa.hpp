#pragma once

// Continuous scalar piecewise-affine functions on polyhedral partitions.

#include "pwadc/geom.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pwadc {

class OutOfDomain : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AffinePiece {
  VectorXd a;
  double b = 0.0;

  double operator()(const VectorXd& x) const { return a.dot(x) + b; }
  AffinePiece operator-(const AffinePiece& o) const { return {a - o.a, b - o.b}; }
  AffinePiece operator+(const AffinePiece& o) const { return {a + o.a, b + o.b}; }
  AffinePiece operator-() const { return {-a, -b}; }
};

using IndexPair = std::pair<std::size_t, std::size_t>;

struct PwaFunction {
  Index n = 0;
  std::vector<AffinePiece> pieces;
  std::vector<Polyhedron> regions;
  Polyhedron domain;
  // Nonempty when the partition is known to be the arrangement of these
  // (canonical) hyperplanes inside the domain.
  std::vector<Hyperplane> arrangement;

  std::size_t size() const { return pieces.size(); }

  // Shape checks only; geometric validity is `validate`.
  void check_shape() const {
    if (pieces.empty()) throw std::invalid_argument("PwaFunction: needs at least one piece");
    if (pieces.size() != regions.size()) throw std::invalid_argument("PwaFunction: pieces/regions size mismatch");
    if (!domain.valid() || domain.dim() != n) throw std::invalid_argument("PwaFunction: domain dimension mismatch");
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      if (pieces[i].a.size() != n) throw std::invalid_argument("PwaFunction: piece dimension mismatch");
      if (!pieces[i].a.allFinite() || !std::isfinite(pieces[i].b))
        throw std::invalid_argument("PwaFunction: non-finite piece");
      if (regions[i].dim() != n) throw std::invalid_argument("PwaFunction: region dimension mismatch");
    }
  }

  /// Index of the first region containing x within `tol`, or -1.
  long locate(const VectorXd& x, double tol) const {
    for (std::size_t i = 0; i < regions.size(); ++i)
      if (regions[i].contains(x, tol)) return static_cast<long>(i);
    return -1;
  }

  PwaFunction negated() const {
    PwaFunction g = *this;
    for (auto& p : g.pieces) p = -p;
    return g;
  }
};

/// Value of the first region containing x. Throws OutOfDomain otherwise.
inline double eval(const PwaFunction& f, const VectorXd& x) {
  const long i = f.locate(x, tolerances().geo);
  if (i < 0) {
    std::ostringstream os;
    os << "point (" << x.transpose() << ") lies in no region";
    throw OutOfDomain(os.str());
  }
  return f.pieces[static_cast<std::size_t>(i)](x);
}

/// Max over all pieces; equals f on F when f is convex.
inline double max_of_pieces(const std::vector<AffinePiece>& pieces, const VectorXd& x) {
  double best = -lp::kInf;
  for (const auto& p : pieces) best = std::max(best, p(x));
  return best;
}

/// Uniform samples from a bounded polyhedron by rejection from its bounding box.
inline std::vector<VectorXd> sample_uniform(const Polyhedron& F, std::size_t count, std::uint64_t seed) {
  const Box& box = F.bounding_box();
  if (!box.lo.allFinite() || !box.hi.allFinite()) throw std::invalid_argument("sample_uniform: unbounded set");
  if (is_empty(F)) throw std::invalid_argument("sample_uniform: empty set");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<VectorXd> out;
  out.reserve(count);
  const Index n = F.dim();
  std::size_t attempts = 0;
  const std::size_t max_attempts = 1000 * count + 100000;
  while (out.size() < count) {
    if (++attempts > max_attempts) throw std::runtime_error("sample_uniform: acceptance rate too low");
    VectorXd x(n);
    for (Index i = 0; i < n; ++i) x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * unit(rng);
    if (F.contains(x, 0.0)) out.push_back(std::move(x));
  }
  return out;
}

namespace detail {

// Candidate pairs (i<j) whose bounding boxes overlap, via a sweep on axis 0.
inline std::vector<IndexPair> box_overlap_pairs(const std::vector<Polyhedron>& regions, double tol) {
  std::vector<std::size_t> order(regions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) {
    return regions[a].bounding_box().lo[0] < regions[b].bounding_box().lo[0];
  });
  std::vector<IndexPair> out;
  for (std::size_t p = 0; p < order.size(); ++p) {
    const Box& bp = regions[order[p]].bounding_box();
    for (std::size_t q = p + 1; q < order.size(); ++q) {
      const Box& bq = regions[order[q]].bounding_box();
      if (bq.lo[0] > bp.hi[0] + tol) break;
      if (!bp.overlaps(bq, tol)) continue;
      out.emplace_back(std::min(order[p], order[q]), std::max(order[p], order[q]));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// Pairs (i<j) of regions sharing an (n-1)-dimensional facet.
inline std::vector<IndexPair> neighbor_pairs(const PwaFunction& f) {
  std::vector<IndexPair> out;
  for (const auto& [i, j] : detail::box_overlap_pairs(f.regions, tolerances().geo))
    if (facet_dim_check(f.regions[i], f.regions[j])) out.emplace_back(i, j);
  return out;
}

struct FoldSets {
  std::vector<IndexPair> neighbors;  // I
  std::vector<IndexPair> convex;     // V
  std::vector<IndexPair> concave;    // A
};

/// Fold sign of each neighbor pair, decided at the Chebyshev center of X_i.
inline FoldSets classify_folds(const PwaFunction& f, const std::vector<IndexPair>& neighbors) {
  FoldSets out;
  out.neighbors = neighbors;
  for (const auto& [i, j] : neighbors) {
    const VectorXd& c = f.regions[i].center();
    const AffinePiece diff = f.pieces[i] - f.pieces[j];
    const double delta = diff(c);
    const double eps = 1e-9 * (1.0 + diff.a.norm() * c.norm());
    if (delta > eps)
      out.convex.emplace_back(i, j);
    else if (delta < -eps)
      out.concave.emplace_back(i, j);
  }
  return out;
}

inline FoldSets classify_folds(const PwaFunction& f) { return classify_folds(f, neighbor_pairs(f)); }

struct ValidationReport {
  std::vector<std::size_t> empty_interior;
  std::vector<IndexPair> overlapping;
  struct Gap {
    std::size_t i, j;
    double gap;
  };
  std::vector<Gap> discontinuous;
  std::size_t uncovered_samples = 0;
  std::size_t samples_checked = 0;

  bool ok() const {
    return empty_interior.empty() && overlapping.empty() && discontinuous.empty() && uncovered_samples == 0;
  }

  std::string summary() const {
    std::ostringstream os;
    os << "empty-interior regions: " << empty_interior.size() << ", overlapping pairs: " << overlapping.size()
       << ", discontinuities: " << discontinuous.size() << ", uncovered samples: " << uncovered_samples << "/"
       << samples_checked;
    return os.str();
  }
};

struct ValidateOptions {
  std::size_t coverage_samples = 10000;
  std::uint64_t seed = 42;
};

/// Checks the partition conditions (nonempty disjoint interiors, coverage of
/// the domain) and continuity across every touching pair of regions.
inline ValidationReport validate(const PwaFunction& f, const ValidateOptions& opt = {}) {
  f.check_shape();
  ValidationReport rep;
  const auto& tol = tolerances();
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!is_full_dim(f.regions[i])) rep.empty_interior.push_back(i);

  for (const auto& [i, j] : detail::box_overlap_pairs(f.regions, tol.geo)) {
    const Polyhedron R = f.regions[i].with_rows(f.regions[j].V(), f.regions[j].w());
    if (R.radius() >= tol.dim) {
      rep.overlapping.emplace_back(i, j);
      continue;
    }
    if (is_empty(R)) continue;
    // max |d'x| over X_i ∩ X_j via two LPs.
    const AffinePiece d = f.pieces[i] - f.pieces[j];
    const auto hi = R.support(d.a);
    const auto lo = R.support(-d.a);
    if (!hi || !lo) continue;
    const double gap = std::max(std::abs(*hi + d.b), std::abs(-*lo + d.b));
    if (gap > tol.cont) rep.discontinuous.push_back({i, j, gap});
  }

  if (opt.coverage_samples > 0) {
    const auto pts = sample_uniform(f.domain, opt.coverage_samples, opt.seed);
    rep.samples_checked = pts.size();
    for (const auto& x : pts)
      if (f.locate(x, tol.geo) < 0) ++rep.uncovered_samples;
  }
  return rep;
}

}  // namespace pwadc
