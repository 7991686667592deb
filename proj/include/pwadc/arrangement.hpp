#pragma once

// Hyperplane arrangements restricted to a bounded polyhedron, built by
// incremental splitting.

#include "pwadc/geom.hpp"
#include "pwadc/pwa.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace pwadc {

class LabelNotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CellExplosion : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Canonical forms with duplicates (within `tol`) removed; first occurrence wins.
inline std::vector<Hyperplane> dedup_hyperplanes(const std::vector<Hyperplane>& hps, double tol) {
  std::vector<Hyperplane> out;
  for (const auto& h : hps) {
    const Hyperplane c = h.canonical();
    const bool dup = std::any_of(out.begin(), out.end(), [&](const Hyperplane& o) {
      return std::abs(o.offset - c.offset) <= tol && (o.normal - c.normal).cwiseAbs().maxCoeff() <= tol;
    });
    if (!dup) out.push_back(c);
  }
  return out;
}

/// Index of the hyperplane in `hps` (canonical, deduplicated) matching h, or -1.
inline long find_hyperplane(const std::vector<Hyperplane>& hps, const Hyperplane& h, double tol) {
  const Hyperplane c = h.canonical();
  for (std::size_t k = 0; k < hps.size(); ++k)
    if (std::abs(hps[k].offset - c.offset) <= tol && (hps[k].normal - c.normal).cwiseAbs().maxCoeff() <= tol)
      return static_cast<long>(k);
  return -1;
}

/// Full-dimensional cells of the arrangement of `hps` inside F.
inline std::vector<Polyhedron> build_cells(const Polyhedron& F, const std::vector<Hyperplane>& hps,
                                           std::size_t cap = 0) {
  if (cap == 0) cap = tolerances().cell_cap;
  if (!is_full_dim(F)) throw std::invalid_argument("build_cells: domain is not full-dimensional");
  const Box& box = F.bounding_box();
  if (!box.lo.allFinite() || !box.hi.allFinite()) throw std::invalid_argument("build_cells: domain is unbounded");

  std::vector<Polyhedron> cells{remove_redundant(F)};
  std::vector<Polyhedron> next;
  for (const auto& h : hps) {
    next.clear();
    next.reserve(cells.size() + 16);
    for (const auto& c : cells) {
      auto [lo, hi] = split_by(c, h);
      if (lo) next.push_back(std::move(*lo));
      if (hi) next.push_back(std::move(*hi));
    }
    cells.swap(next);
    if (cells.size() > cap)
      throw CellExplosion("arrangement exceeds cell cap (" + std::to_string(cap) + ")");
  }
  return cells;
}

/// l_k for each cell: the lowest-index region whose interior contains the
/// cell's Chebyshev center, else the lowest region whose interior meets the
/// cell's interior.
inline std::vector<std::size_t> cell_labels(const PwaFunction& f, const std::vector<Polyhedron>& cells) {
  std::vector<std::size_t> labels;
  labels.reserve(cells.size());
  const double geo = tolerances().geo;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const VectorXd& c = cells[k].center();
    long label = -1;
    for (std::size_t i = 0; i < f.size() && label < 0; ++i)
      if (f.regions[i].violation(c) < -geo) label = static_cast<long>(i);
    for (std::size_t i = 0; i < f.size() && label < 0; ++i) {
      if (!f.regions[i].bounding_box().overlaps(cells[k].bounding_box(), geo)) continue;
      if (is_full_dim(f.regions[i].with_rows(cells[k].V(), cells[k].w()))) label = static_cast<long>(i);
    }
    if (label < 0)
      throw LabelNotFound("relabel: cell " + std::to_string(k) + " meets no region interior");
    labels.push_back(static_cast<std::size_t>(label));
  }
  return labels;
}

/// f re-expressed on `cells` with pieces chosen by `cell_labels`.
inline PwaFunction relabel(const PwaFunction& f, const std::vector<Polyhedron>& cells,
                           std::vector<std::size_t>* labels_out = nullptr) {
  PwaFunction out;
  out.n = f.n;
  out.domain = f.domain;
  out.regions = cells;
  auto labels = cell_labels(f, cells);
  out.pieces.reserve(cells.size());
  for (auto l : labels) out.pieces.push_back(f.pieces[l]);
  if (labels_out) *labels_out = std::move(labels);
  return out;
}

}  // namespace pwadc
