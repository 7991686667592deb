#pragma once

// Decomposition on the arrangement of all fold separators (convex and
// concave). That partition is regular, so the optimization-based scheme is
// always feasible on it, and g and h share one cell set.

#include "pwadc/arrangement.hpp"
#include "pwadc/decomp_folds.hpp"
#include "pwadc/decomp_opt.hpp"
#include "pwadc/decomposition.hpp"

#include <stdexcept>
#include <vector>

namespace pwadc {

class NovelInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FoldArrangement {
  std::vector<Hyperplane> hyperplanes;
  std::vector<Polyhedron> cells;
  std::vector<std::size_t> labels;  // l_k per cell
};

/// Canonical separators of all convex and concave folds, deduplicated.
inline std::vector<Hyperplane> fold_hyperplanes(const PwaFunction& f, const FoldSets& folds) {
  std::vector<Hyperplane> hps;
  hps.reserve(folds.convex.size() + folds.concave.size());
  for (const auto& p : folds.convex) hps.push_back(fold_separator(f, p));
  for (const auto& p : folds.concave) hps.push_back(fold_separator(f, p));
  return dedup_hyperplanes(hps, tolerances().geo);
}

/// f' on the fold arrangement; `arr` (if given) receives the cells and labels.
inline PwaFunction fold_relabel(const PwaFunction& f, FoldArrangement* arr = nullptr) {
  const FoldSets folds = classify_folds(f);
  auto hps = fold_hyperplanes(f, folds);
  std::vector<std::size_t> labels;
  PwaFunction fp = relabel(f, build_cells(f.domain, hps), &labels);
  fp.arrangement = hps;
  if (arr) {
    arr->hyperplanes = std::move(hps);
    arr->cells = fp.regions;
    arr->labels = std::move(labels);
  }
  return fp;
}

inline Decomposition decompose_novel(const PwaFunction& f, Objective obj = Objective::FeasibilityOnly,
                                     const OptimOptions& opt = {}) {
  f.check_shape();
  detail::StatsScope scope;
  const PwaFunction fp = fold_relabel(f);
  OptimOutcome out = solve_decomposition(assemble(fp), obj, opt);
  if (!out.decomposition)
    throw NovelInfeasible(std::string("decomposition on the fold arrangement is ") + lp::to_string(out.status));
  Decomposition d = std::move(*out.decomposition);
  d.method = Method::Novel;
  d.arrangement = ArrangementInfo{fp.arrangement.size(), fp.size()};
  scope.finish(d.stats);
  return d;
}

}  // namespace pwadc
