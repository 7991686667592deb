#pragma once

// Optimization-based decomposition on a fixed partition. g and h are affine on
// every region of f; convexity and continuity are imposed with Farkas
// multipliers for every neighboring pair. Partitions that admit no such pair
// (non-regular ones) make the program infeasible; refining the partition by
// the arrangement of all facet hyperplanes restores feasibility.

#include "pwadc/arrangement.hpp"
#include "pwadc/decomposition.hpp"
#include "pwadc/lp.hpp"
#include "pwadc/pwa.hpp"

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pwadc {

enum class Objective { FeasibilityOnly, L1Coefficients };

inline const char* to_string(Objective o) {
  return o == Objective::FeasibilityOnly ? "feasibility" : "l1";
}

/// Shared facet of a neighboring pair (i, j): X_i lies on the side
/// normal'x <= offset and f_i - f_j = fold * (offset - normal'x).
struct FacetCoupling {
  IndexPair pair;
  Hyperplane facet;  // unit normal
  double fold = 0.0;
  double mismatch = 0.0;  // deviation of f_i - f_j from a multiple of the facet
};

/// Convexity and continuity conditions of g and h over every neighbor pair.
///
/// Two equivalent encodings are available. `literal_program()` carries one
/// nonnegative multiplier per region row for each of the four implications
/// g_i >= g_j on X_i, g_j >= g_i on X_j (and the same for h). Since a pair
/// shares an (n-1)-facet, g_i - g_j must vanish on it and is therefore a
/// nonnegative multiple t of the facet's slack; `facet_program()` keeps only
/// that scalar per pair, with h's fold t - fold >= 0 folded into t's lower
/// bound. The latter is what `solve_decomposition` runs.
struct FarkasSystem {
  PwaFunction f;
  std::vector<IndexPair> pairs;
  std::vector<FacetCoupling> couplings;

  Index n() const { return f.n; }
  Index s() const { return static_cast<Index>(f.size()); }

  // Literal layout: per region [k (n), c, l (n), d], then multipliers.
  Index coef_block() const { return 2 * (n() + 1); }
  Index k_col(std::size_t i) const { return static_cast<Index>(i) * coef_block(); }
  Index c_col(std::size_t i) const { return k_col(i) + n(); }
  Index l_col(std::size_t i) const { return c_col(i) + 1; }
  Index d_col(std::size_t i) const { return l_col(i) + n(); }

  bool consistent(double tol) const {
    for (const auto& c : couplings)
      if (c.mismatch > tol) return false;
    return true;
  }

  /// Eq.-for-eq. Farkas encoding. With L1Coefficients the objective is
  /// sum |k|+|c|+|l|+|d| through explicit absolute-value rows.
  lp::LinearProgram literal_program(Objective obj) const {
    const Index nn = n(), ss = s();
    std::vector<Index> mult_col;  // first multiplier column per pair block (4 per pair)
    Index col = ss * coef_block();
    for (const auto& [i, j] : pairs) {
      const Index mi = f.regions[i].rows(), mj = f.regions[j].rows();
      mult_col.push_back(col);
      col += mi;
      mult_col.push_back(col);
      col += mi;
      mult_col.push_back(col);
      col += mj;
      mult_col.push_back(col);
      col += mj;
    }
    const Index n_mult_end = col;
    const Index n_abs = obj == Objective::L1Coefficients ? ss * coef_block() : 0;
    const Index nv = n_mult_end + n_abs;

    const auto np = static_cast<Index>(pairs.size());
    const Index n_eq = ss * (nn + 1) + np * 4 * nn;
    const Index n_ub = np * 4 + 2 * n_abs;

    lp::LinearProgram prog;
    prog.cost = VectorXd::Zero(nv);
    prog.A_eq = MatrixXd::Zero(n_eq, nv);
    prog.b_eq = VectorXd::Zero(n_eq);
    prog.A_ub = MatrixXd::Zero(n_ub, nv);
    prog.b_ub = VectorXd::Zero(n_ub);
    prog.lower = VectorXd::Constant(nv, -lp::kInf);
    prog.upper = VectorXd::Constant(nv, lp::kInf);
    for (Index c = ss * coef_block(); c < nv; ++c) prog.lower[c] = 0.0;

    Index re = 0;
    // a_i = k_i - l_i, b_i = c_i - d_i
    for (std::size_t i = 0; i < f.size(); ++i) {
      for (Index q = 0; q < nn; ++q, ++re) {
        prog.A_eq(re, k_col(i) + q) = 1.0;
        prog.A_eq(re, l_col(i) + q) = -1.0;
        prog.b_eq[re] = f.pieces[i].a[q];
      }
      prog.A_eq(re, c_col(i)) = 1.0;
      prog.A_eq(re, d_col(i)) = -1.0;
      prog.b_eq[re] = f.pieces[i].b;
      ++re;
    }

    Index ru = 0;
    // Block: V_r' mult = slope(to) - slope(from), w_r' mult <= off(from) - off(to)
    auto block = [&](Index m0, const Polyhedron& X, Index slope_from, Index slope_to, Index off_from,
                     Index off_to) {
      for (Index q = 0; q < nn; ++q, ++re) {
        for (Index r = 0; r < X.rows(); ++r) prog.A_eq(re, m0 + r) = X.V()(r, q);
        prog.A_eq(re, slope_to + q) -= 1.0;
        prog.A_eq(re, slope_from + q) += 1.0;
      }
      for (Index r = 0; r < X.rows(); ++r) prog.A_ub(ru, m0 + r) = X.w()[r];
      prog.A_ub(ru, off_from) -= 1.0;
      prog.A_ub(ru, off_to) += 1.0;
      ++ru;
    };
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto [i, j] = pairs[p];
      block(mult_col[4 * p + 0], f.regions[i], k_col(i), k_col(j), c_col(i), c_col(j));  // lambda_ij
      block(mult_col[4 * p + 1], f.regions[i], l_col(i), l_col(j), d_col(i), d_col(j));  // mu_ij
      block(mult_col[4 * p + 2], f.regions[j], k_col(j), k_col(i), c_col(j), c_col(i));  // lambda_ji
      block(mult_col[4 * p + 3], f.regions[j], l_col(j), l_col(i), d_col(j), d_col(i));  // mu_ji
    }

    if (n_abs > 0) {
      // z - p <= 0 and -z - p <= 0 for every coefficient z.
      for (Index z = 0; z < n_abs; ++z) {
        const Index p = n_mult_end + z;
        prog.cost[p] = 1.0;
        prog.A_ub(ru, z) = 1.0;
        prog.A_ub(ru, p) = -1.0;
        ++ru;
        prog.A_ub(ru, z) = -1.0;
        prog.A_ub(ru, p) = -1.0;
        ++ru;
      }
    }
    return prog;
  }

  /// Mapping of a coefficient (region i, component q in [0, n]) of g onto
  /// facet-program columns.
  struct FacetLayout {
    Objective objective = Objective::FeasibilityOnly;
    Index n_coef = 0;   // s * (n + 1)
    Index t0 = 0;       // first fold-multiplier column
    double cost_constant = 0.0;
  };

  FacetLayout facet_layout(Objective obj) const {
    FacetLayout L;
    L.objective = obj;
    L.n_coef = s() * (n() + 1);
    L.t0 = obj == Objective::L1Coefficients ? 3 * L.n_coef : L.n_coef;
    return L;
  }

  Index facet_program_rows() const { return static_cast<Index>(pairs.size()) * (n() + 1); }
  Index facet_program_cols(Objective obj) const {
    return facet_layout(obj).t0 + static_cast<Index>(pairs.size());
  }

  // Coefficient q of f's piece i (q == n is the offset).
  double f_coef(std::size_t i, Index q) const { return q < n() ? f.pieces[i].a[q] : f.pieces[i].b; }

  /// Reduced program over g's coefficients (k_i, c_i) and one fold multiplier
  /// per pair. With L1Coefficients each coefficient z of g is written as
  /// lo + y + r - v with y in [0, hi - lo], r, v >= 0 and cost 2 (r + v), where
  /// [lo, hi] spans 0 and the matching f coefficient; this equals
  /// |z| + |z - a| = |g coef| + |h coef| up to the constant hi - lo.
  lp::LinearProgram facet_program(Objective obj, FacetLayout* layout_out = nullptr) const {
    const FacetLayout L = facet_layout(obj);
    const Index nn = n(), rows = facet_program_rows(), cols = facet_program_cols(obj);
    lp::LinearProgram prog;
    prog.cost = VectorXd::Zero(cols);
    prog.A_eq = MatrixXd::Zero(rows, cols);
    prog.b_eq = VectorXd::Zero(rows);
    prog.lower = VectorXd::Constant(cols, -lp::kInf);
    prog.upper = VectorXd::Constant(cols, lp::kInf);

    FacetLayout Lc = L;
    std::vector<double> lo(static_cast<std::size_t>(L.n_coef), 0.0);
    if (obj == Objective::L1Coefficients) {
      for (std::size_t i = 0; i < f.size(); ++i)
        for (Index q = 0; q <= nn; ++q) {
          const Index z = static_cast<Index>(i) * (nn + 1) + q;
          const double a = f_coef(i, q);
          lo[static_cast<std::size_t>(z)] = std::min(0.0, a);
          const double span = std::abs(a);
          Lc.cost_constant += span;
          prog.lower[z] = 0.0;
          prog.upper[z] = span;  // y
          prog.lower[L.n_coef + z] = 0.0;
          prog.cost[L.n_coef + z] = 2.0;  // r
          prog.lower[2 * L.n_coef + z] = 0.0;
          prog.cost[2 * L.n_coef + z] = 2.0;  // v
        }
    }

    auto add_coef = [&](Index row, std::size_t region, Index q, double sign) {
      const Index z = static_cast<Index>(region) * (nn + 1) + q;
      if (obj == Objective::L1Coefficients) {
        prog.A_eq(row, z) += sign;
        prog.A_eq(row, L.n_coef + z) += sign;
        prog.A_eq(row, 2 * L.n_coef + z) -= sign;
        prog.b_eq[row] -= sign * lo[static_cast<std::size_t>(z)];
      } else {
        prog.A_eq(row, z) += sign;
      }
    };

    // (k_i - k_j) + t normal = 0,   (c_i - c_j) - t offset = 0
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto& cp = couplings[p];
      const auto [i, j] = cp.pair;
      const Index t = L.t0 + static_cast<Index>(p);
      prog.lower[t] = std::max(0.0, cp.fold);
      for (Index q = 0; q <= nn; ++q) {
        const Index row = static_cast<Index>(p) * (nn + 1) + q;
        add_coef(row, i, q, 1.0);
        add_coef(row, j, q, -1.0);
        prog.A_eq(row, t) = q < nn ? cp.facet.normal[q] : -cp.facet.offset;
      }
    }
    if (layout_out) *layout_out = Lc;
    return prog;
  }

  /// Largest violation of the facet conditions by given g pieces.
  double residual(const std::vector<AffinePiece>& g) const {
    double worst = 0.0;
    for (const auto& cp : couplings) {
      const auto [i, j] = cp.pair;
      const AffinePiece d = g[i] - g[j];
      const double t = -d.a.dot(cp.facet.normal);
      worst = std::max(worst, (d.a + t * cp.facet.normal).cwiseAbs().maxCoeff());
      worst = std::max(worst, std::abs(d.b - t * cp.facet.offset));
      worst = std::max(worst, std::max(0.0, -t));
      worst = std::max(worst, std::max(0.0, cp.fold - t));
    }
    return worst;
  }
};

/// Builds the Farkas system of f over the given neighbor pairs.
inline FarkasSystem assemble(const PwaFunction& f, const std::vector<IndexPair>& pairs) {
  f.check_shape();
  FarkasSystem sys;
  sys.f = f;
  sys.pairs = pairs;
  sys.couplings.reserve(pairs.size());
  for (const auto& p : pairs) {
    const auto facet = shared_facet(f.regions[p.first], f.regions[p.second]);
    if (!facet) {
      std::ostringstream os;
      os << "assemble: regions " << p.first << " and " << p.second << " share no facet";
      throw std::invalid_argument(os.str());
    }
    FacetCoupling cp{p, *facet, 0.0, 0.0};
    const AffinePiece d = f.pieces[p.first] - f.pieces[p.second];
    cp.fold = -d.a.dot(facet->normal);
    cp.mismatch = std::max((d.a + cp.fold * facet->normal).cwiseAbs().maxCoeff(),
                           std::abs(d.b - cp.fold * facet->offset));
    sys.couplings.push_back(cp);
  }
  return sys;
}

inline FarkasSystem assemble(const PwaFunction& f) { return assemble(f, neighbor_pairs(f)); }

struct OptimOutcome {
  lp::Status status = lp::Status::Infeasible;
  std::optional<Decomposition> decomposition;  // present iff feasible
  std::string route;                           // "lp" or "arrangement"
  double residual = 0.0;
  long lp_iterations = 0;

  bool feasible() const { return decomposition.has_value(); }
};

struct OptimOptions {
  // Dense tableau entries above which the LP route is not attempted.
  double dense_entry_cap = 4e7;
};

namespace detail {

inline Decomposition make_decomposition(const PwaFunction& f, std::vector<AffinePiece> g_pieces, Method m) {
  Decomposition d;
  d.method = m;
  d.g.n = d.h.n = f.n;
  d.g.domain = d.h.domain = f.domain;
  d.g.regions = d.h.regions = f.regions;
  d.g.arrangement = d.h.arrangement = f.arrangement;
  d.h.pieces.reserve(g_pieces.size());
  for (std::size_t i = 0; i < g_pieces.size(); ++i) d.h.pieces.push_back(g_pieces[i] - f.pieces[i]);
  d.g.pieces = std::move(g_pieces);
  d.stats.cells_g = d.g.size();
  d.stats.cells_h = d.h.size();
  return d;
}

// g = sum_H tau_H |normal_H'x - offset_H| with tau_H = max(0, max fold on H)/2.
// Feasible for any continuous f whose partition is the arrangement of
// f.arrangement; nullopt if some facet is not on a listed hyperplane.
inline std::optional<std::vector<AffinePiece>> arrangement_point(const FarkasSystem& sys) {
  const auto& hps = sys.f.arrangement;
  if (hps.empty()) return std::nullopt;
  std::vector<double> tau(hps.size(), 0.0);
  const double tol = std::max(tolerances().geo, 1e-6);
  for (const auto& cp : sys.couplings) {
    const long k = find_hyperplane(hps, cp.facet, tol);
    if (k < 0) return std::nullopt;
    tau[static_cast<std::size_t>(k)] = std::max(tau[static_cast<std::size_t>(k)], 0.5 * std::max(0.0, cp.fold));
  }
  std::vector<AffinePiece> g;
  g.reserve(sys.f.size());
  for (const auto& cell : sys.f.regions) {
    const VectorXd& c = cell.center();
    AffinePiece p{VectorXd::Zero(sys.n()), 0.0};
    for (std::size_t k = 0; k < hps.size(); ++k) {
      if (tau[k] == 0.0) continue;
      const double side = hps[k].normal.dot(c) - hps[k].offset >= 0.0 ? 1.0 : -1.0;
      p.a += side * tau[k] * hps[k].normal;
      p.b -= side * tau[k] * hps[k].offset;
    }
    g.push_back(std::move(p));
  }
  return g;
}

}  // namespace detail

/// Solves the system. Infeasibility is a result, not an error.
inline OptimOutcome solve_decomposition(const FarkasSystem& sys, Objective obj, const OptimOptions& opt = {}) {
  detail::StatsScope scope;
  OptimOutcome out;
  if (!sys.consistent(tolerances().cont)) {
    // f itself is discontinuous across some facet: no g, h can exist.
    out.status = lp::Status::Infeasible;
    out.route = "consistency";
    return out;
  }

  const double rows = static_cast<double>(sys.facet_program_rows());
  const double entries = rows * (static_cast<double>(sys.facet_program_cols(obj)) + rows);
  std::vector<AffinePiece> g;
  if (entries <= opt.dense_entry_cap) {
    FarkasSystem::FacetLayout L;
    const auto prog = sys.facet_program(obj, &L);
    const auto res = lp::solve(prog);
    out.lp_iterations = res.iterations;
    out.route = "lp";
    if (!res.optimal()) {
      out.status = res.status;
      return out;
    }
    const Index nn = sys.n();
    g.reserve(sys.f.size());
    for (std::size_t i = 0; i < sys.f.size(); ++i) {
      AffinePiece p{VectorXd::Zero(nn), 0.0};
      for (Index q = 0; q <= nn; ++q) {
        const Index z = static_cast<Index>(i) * (nn + 1) + q;
        double v = res.x[z];
        if (obj == Objective::L1Coefficients)
          v = std::min(0.0, sys.f_coef(i, q)) + res.x[z] + res.x[L.n_coef + z] - res.x[2 * L.n_coef + z];
        (q < nn ? p.a[q] : p.b) = v;
      }
      g.push_back(std::move(p));
    }
  } else if (auto pt = detail::arrangement_point(sys)) {
    out.route = "arrangement";
    g = std::move(*pt);
  } else {
    throw lp::NumericalFailure("solve_decomposition: system too large for the dense LP (" +
                               std::to_string(static_cast<long long>(entries)) + " tableau entries)");
  }

  out.residual = sys.residual(g);
  if (out.residual > 1e-6)
    throw lp::NumericalFailure("solve_decomposition: solution violates facet conditions by " +
                               std::to_string(out.residual));
  out.status = lp::Status::Optimal;
  Decomposition d = detail::make_decomposition(sys.f, std::move(g), Method::Optim);
  d.objective = to_string(obj);
  scope.finish(d.stats);
  out.decomposition = std::move(d);
  return out;
}

/// Refines f's partition by the arrangement of every facet hyperplane of
/// every region, restricted to the domain.
inline PwaFunction regularize_arrangement(const PwaFunction& f, std::size_t cap = 0) {
  f.check_shape();
  std::vector<Hyperplane> hps;
  for (const auto& R : f.regions)
    for (Index r = 0; r < R.rows(); ++r)
      if (R.row_norms()[r] > 0.0) hps.push_back(Hyperplane{R.V().row(r).transpose(), R.w()[r]});
  auto distinct = dedup_hyperplanes(hps, tolerances().geo);
  PwaFunction out = relabel(f, build_cells(f.domain, distinct, cap));
  out.arrangement = std::move(distinct);
  return out;
}

/// Optimization-based decomposition; when `regularize` is set and the raw
/// partition is infeasible, retries on the regularized partition.
inline OptimOutcome decompose_optim(const PwaFunction& f, Objective obj, bool regularize,
                                    const OptimOptions& opt = {}) {
  detail::StatsScope scope;
  OptimOutcome out = solve_decomposition(assemble(f), obj, opt);
  if (!out.feasible() && regularize) {
    out = solve_decomposition(assemble(regularize_arrangement(f)), obj, opt);
    if (out.decomposition) out.decomposition->regularized = true;
  }
  if (out.decomposition) scope.finish(out.decomposition->stats);
  return out;
}

}  // namespace pwadc
