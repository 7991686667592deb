#pragma once

// Sample-based checks of a decomposition: f = g - h, convexity of g and h as
// max-of-pieces, and cover/disjointness of a partition.

#include "pwadc/decomposition.hpp"
#include "pwadc/pwa.hpp"

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

namespace pwadc {

struct CheckResult {
  std::string name;
  bool passed = true;
  double worst = 0.0;  // largest relative residual seen
  VectorXd worst_at;
  std::size_t failures = 0;
  std::string detail;

  std::string line() const {
    std::ostringstream os;
    os << (passed ? "PASS " : "FAIL ") << name << "  worst=" << worst;
    if (worst_at.size() > 0) os << " at (" << worst_at.transpose() << ")";
    if (!detail.empty()) os << "  " << detail;
    return os.str();
  }
};

namespace detail {

inline void record(CheckResult& r, double residual, const VectorXd& x, double tol) {
  if (std::isnan(residual)) residual = lp::kInf;
  if (residual > r.worst) {
    r.worst = residual;
    r.worst_at = x;
  }
  if (!(residual <= tol)) {
    r.passed = false;
    ++r.failures;
  }
}

// eval, with NaN for points outside every region (recorded as failures).
inline double eval_or_nan(const PwaFunction& f, const VectorXd& x) {
  const long i = f.locate(x, tolerances().geo);
  return i < 0 ? std::nan("") : f.pieces[static_cast<std::size_t>(i)](x);
}

}  // namespace detail

/// |f - (g - h)| <= tol (1 + |f|) at every sample.
inline CheckResult check_identity(const PwaFunction& f, const PwaFunction& g, const PwaFunction& h,
                                  const std::vector<VectorXd>& pts, double tol = 1e-6) {
  CheckResult r;
  r.name = "identity f = g - h";
  for (const auto& x : pts) {
    const double fx = detail::eval_or_nan(f, x);
    const double gh = detail::eval_or_nan(g, x) - detail::eval_or_nan(h, x);
    detail::record(r, std::abs(fx - gh) / (1.0 + std::abs(fx)), x, tol);
  }
  return r;
}

/// f(x) = max over f's pieces at every sample (convexity on a convex domain).
inline CheckResult check_max_form(const PwaFunction& f, const std::vector<VectorXd>& pts, const std::string& label,
                                  double tol = 1e-6) {
  CheckResult r;
  r.name = "convexity of " + label;
  for (const auto& x : pts) {
    const double fx = detail::eval_or_nan(f, x);
    detail::record(r, std::abs(fx - max_of_pieces(f.pieces, x)) / (1.0 + std::abs(fx)), x, tol);
  }
  return r;
}

/// Every sample lies in some region, and no two regions overlap in a
/// full-dimensional set (Chebyshev radius of the intersection).
inline CheckResult check_partition(const PwaFunction& f, const std::vector<VectorXd>& pts, const std::string& label) {
  CheckResult r;
  r.name = "partition of " + label;
  std::size_t uncovered = 0;
  for (const auto& x : pts)
    if (f.locate(x, tolerances().geo) < 0) {
      ++uncovered;
      if (r.worst_at.size() == 0) r.worst_at = x;
    }
  std::size_t overlaps = 0;
  for (const auto& [i, j] : detail::box_overlap_pairs(f.regions, tolerances().geo)) {
    const Polyhedron R = f.regions[i].with_rows(f.regions[j].V(), f.regions[j].w());
    if (R.radius() >= tolerances().dim) {
      ++overlaps;
      r.worst = std::max(r.worst, R.radius());
    }
  }
  r.failures = uncovered + overlaps;
  r.passed = r.failures == 0;
  std::ostringstream os;
  os << "uncovered=" << uncovered << "/" << pts.size() << " overlapping_pairs=" << overlaps;
  r.detail = os.str();
  return r;
}

struct VerifyOptions {
  std::size_t samples = 10000;
  std::uint64_t seed = 42;
  double tol = 1e-6;
};

/// The full property suite for (f, d).
inline std::vector<CheckResult> verify_decomposition(const PwaFunction& f, const Decomposition& d,
                                                     const VerifyOptions& opt = {}) {
  if (d.g.n != f.n || d.h.n != f.n) throw std::invalid_argument("verify: dimension mismatch");
  const auto pts = sample_uniform(f.domain, opt.samples, opt.seed);
  std::vector<CheckResult> out;
  out.push_back(check_identity(f, d.g, d.h, pts, opt.tol));
  out.push_back(check_max_form(d.g, pts, "g", opt.tol));
  out.push_back(check_max_form(d.h, pts, "h", opt.tol));
  out.push_back(check_partition(d.g, pts, "g"));
  out.push_back(check_partition(d.h, pts, "h"));
  return out;
}

}  // namespace pwadc
