#pragma once

// Evaluation of f as max(g pieces) - max(h pieces), and a timing harness
// against linear-scan point location.

#include "pwadc/decomposition.hpp"
#include "pwadc/pwa.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace pwadc {

class NonConvexDomain : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DcForm {
  Index n = 0;
  std::vector<AffinePiece> g_pieces;
  std::vector<AffinePiece> h_pieces;
};

namespace detail {

inline std::vector<AffinePiece> dedup_pieces(const std::vector<AffinePiece>& in, double tol) {
  std::vector<AffinePiece> out;
  for (const auto& p : in) {
    const bool dup = std::any_of(out.begin(), out.end(), [&](const AffinePiece& q) {
      return std::abs(p.b - q.b) <= tol && (p.a - q.a).cwiseAbs().maxCoeff() <= tol;
    });
    if (!dup) out.push_back(p);
  }
  return out;
}

// Row-major [a | b] blocks for tight evaluation loops.
inline std::vector<double> pack(const std::vector<AffinePiece>& pieces, Index n) {
  std::vector<double> out;
  out.reserve(pieces.size() * static_cast<std::size_t>(n + 1));
  for (const auto& p : pieces) {
    for (Index q = 0; q < n; ++q) out.push_back(p.a[q]);
    out.push_back(p.b);
  }
  return out;
}

inline double packed_max(const std::vector<double>& P, const double* x, Index n) {
  double best = -lp::kInf;
  const std::size_t stride = static_cast<std::size_t>(n + 1);
  for (std::size_t o = 0; o < P.size(); o += stride) {
    double v = P[o + static_cast<std::size_t>(n)];
    for (Index q = 0; q < n; ++q) v += P[o + static_cast<std::size_t>(q)] * x[q];
    best = std::max(best, v);
  }
  return best;
}

// Linear-scan point location over packed regions: rows [V_r | w_r] scaled by
// 1/|V_r|, so the membership test matches PwaFunction::locate.
struct PackedLocator {
  Index n = 0;
  std::vector<double> rows;
  std::vector<std::size_t> row_end;  // per region
  std::vector<double> pieces;

  explicit PackedLocator(const PwaFunction& f) : n(f.n), pieces(pack(f.pieces, f.n)) {
    for (const auto& R : f.regions) {
      for (Index r = 0; r < R.rows(); ++r) {
        const double s = R.row_norms()[r] > 0.0 ? 1.0 / R.row_norms()[r] : 1.0;
        for (Index q = 0; q < n; ++q) rows.push_back(R.V()(r, q) * s);
        rows.push_back(R.w()[r] * s);
      }
      row_end.push_back(rows.size());
    }
  }

  double operator()(const double* x, double tol) const {
    const std::size_t stride = static_cast<std::size_t>(n + 1);
    std::size_t o = 0;
    for (std::size_t i = 0; i < row_end.size(); ++i) {
      bool in = true;
      for (; o < row_end[i]; o += stride) {
        double v = -rows[o + static_cast<std::size_t>(n)];
        for (Index q = 0; q < n; ++q) v += rows[o + static_cast<std::size_t>(q)] * x[q];
        if (v > tol) {
          in = false;
          break;
        }
      }
      if (in) {
        const double* p = &pieces[i * stride];
        double v = p[n];
        for (Index q = 0; q < n; ++q) v += p[q] * x[q];
        return v;
      }
      o = row_end[i];
    }
    return 0.0;
  }
};

}  // namespace detail

/// Pieces of g and h without regions. Only valid on a convex domain, where a
/// convex PWA function equals the max of its pieces.
inline DcForm to_dc(const Decomposition& d) {
  if (!d.convex_domain) throw NonConvexDomain("to_dc: decomposition domain is not known to be convex");
  DcForm dc;
  dc.n = d.g.n;
  dc.g_pieces = detail::dedup_pieces(d.g.pieces, 1e-9);
  dc.h_pieces = detail::dedup_pieces(d.h.pieces, 1e-9);
  if (dc.g_pieces.empty() || dc.h_pieces.empty()) throw std::invalid_argument("to_dc: empty decomposition");
  return dc;
}

/// No domain check; the max form extrapolates outside F.
inline double eval_dc(const DcForm& dc, const VectorXd& x) {
  return max_of_pieces(dc.g_pieces, x) - max_of_pieces(dc.h_pieces, x);
}

struct BenchEntry {
  double mean_ns = 0.0;
  double p99_ns = 0.0;
  std::size_t floats_stored = 0;
};

struct BenchReport {
  BenchEntry point_location;
  BenchEntry dc;
  std::size_t samples = 0;
  double speedup = 0.0;        // point_location.mean_ns / dc.mean_ns
  double storage_ratio = 0.0;  // point_location.floats_stored / dc.floats_stored
  double checksum = 0.0;       // keeps the timed loops observable
};

inline std::size_t floats_stored(const PwaFunction& f) {
  std::size_t total = f.size() * static_cast<std::size_t>(f.n + 1);
  for (const auto& R : f.regions) total += static_cast<std::size_t>(R.rows() * (f.n + 1));
  return total;
}

inline std::size_t floats_stored(const DcForm& dc) {
  return (dc.g_pieces.size() + dc.h_pieces.size()) * static_cast<std::size_t>(dc.n + 1);
}

inline constexpr std::size_t kMinBenchSamples = 1000;

/// Warmup, then 5 timed passes over the same samples. mean_ns is the median
/// pass mean; p99_ns comes from per-call timings taken in a separate pass.
inline BenchReport bench(const PwaFunction& f, const DcForm& dc, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < kMinBenchSamples)
    throw std::invalid_argument("bench: at least " + std::to_string(kMinBenchSamples) + " samples required");
  if (dc.n != f.n) throw std::invalid_argument("bench: dimension mismatch");
  const auto pts = sample_uniform(f.domain, n_samples, seed);
  using clock = std::chrono::steady_clock;
  BenchReport rep;
  rep.samples = n_samples;
  const double geo = tolerances().geo;

  auto run = [&](auto&& fn, BenchEntry& e) {
    volatile double sink = 0.0;
    for (const auto& x : pts) sink = sink + fn(x);  // warmup
    std::vector<double> pass_means;
    for (int r = 0; r < 5; ++r) {
      double acc = 0.0;
      const auto t0 = clock::now();
      for (const auto& x : pts) acc += fn(x);
      const auto t1 = clock::now();
      sink = sink + acc;
      pass_means.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count() / static_cast<double>(pts.size()));
    }
    std::nth_element(pass_means.begin(), pass_means.begin() + 2, pass_means.end());
    e.mean_ns = pass_means[2];
    std::vector<double> per_call;
    per_call.reserve(pts.size());
    for (const auto& x : pts) {
      const auto t0 = clock::now();
      sink = sink + fn(x);
      per_call.push_back(std::chrono::duration<double, std::nano>(clock::now() - t0).count());
    }
    const std::size_t k = std::min(per_call.size() - 1, per_call.size() * 99 / 100);
    std::nth_element(per_call.begin(), per_call.begin() + static_cast<std::ptrdiff_t>(k), per_call.end());
    e.p99_ns = per_call[k];
    rep.checksum += sink;
  };

  // Both sides use the same packed layout so the comparison is algorithmic.
  const detail::PackedLocator locate(f);
  const auto gp = detail::pack(dc.g_pieces, dc.n);
  const auto hp = detail::pack(dc.h_pieces, dc.n);
  run([&](const VectorXd& x) { return locate(x.data(), geo); }, rep.point_location);
  run([&](const VectorXd& x) { return detail::packed_max(gp, x.data(), dc.n) - detail::packed_max(hp, x.data(), dc.n); },
      rep.dc);

  rep.point_location.floats_stored = floats_stored(f);
  rep.dc.floats_stored = floats_stored(dc);
  rep.speedup = rep.point_location.mean_ns / rep.dc.mean_ns;
  rep.storage_ratio = static_cast<double>(rep.point_location.floats_stored) / static_cast<double>(rep.dc.floats_stored);
  return rep;
}

}  // namespace pwadc
