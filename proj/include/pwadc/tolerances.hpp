#pragma once

#include <cstddef>
#include <stdexcept>

namespace pwadc {

/// Numerical thresholds shared by all modules.
///
/// The process-wide instance returned by `tolerances()` is read everywhere and
/// may be overridden once at startup (the CLI does this from --config). It must
/// not be mutated while computations run on other threads.
struct Tolerances {
  double feas = 1e-8;  // LP primal feasibility
  double geo = 1e-7;   // geometric comparisons, implicit equalities, dedup
  double dim = 1e-7;   // minimum Chebyshev radius for "full-dimensional"
  double cont = 1e-6;  // continuity across shared facets
  std::size_t cell_cap = 100000;
  std::size_t region_cap = 100000;

  void check() const {
    if (!(feas > 0 && geo > 0 && dim > 0 && cont > 0))
      throw std::invalid_argument("tolerances must be positive");
    if (cell_cap < 1 || region_cap < 1) throw std::invalid_argument("caps must be >= 1");
  }
};

inline Tolerances& tolerances() {
  static Tolerances t;
  return t;
}

}  // namespace pwadc
