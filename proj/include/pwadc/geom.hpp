#pragma once

// Polyhedral predicates on H-representations {x | V x <= w}. Everything here
// is LP-based; no vertex enumeration.

#include "pwadc/lp.hpp"
#include "pwadc/tolerances.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace pwadc {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

class EmptyInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Box {
  VectorXd lo, hi;

  bool overlaps(const Box& o, double tol) const {
    for (Index i = 0; i < lo.size(); ++i)
      if (lo[i] > o.hi[i] + tol || o.lo[i] > hi[i] + tol) return false;
    return true;
  }
  // Range of normal'x over the box.
  std::pair<double, double> range(const VectorXd& normal) const {
    double a = 0.0, b = 0.0;
    for (Index i = 0; i < normal.size(); ++i) {
      const double p = normal[i] * lo[i], q = normal[i] * hi[i];
      a += std::min(p, q);
      b += std::max(p, q);
    }
    return {a, b};
  }
};

/// Immutable polyhedron {x | V x <= w}. The Chebyshev ball and bounding box are
/// computed lazily under std::call_once, so concurrent readers are safe;
/// copies share the cache.
class Polyhedron {
 public:
  Polyhedron() = default;

  Polyhedron(MatrixXd V, VectorXd w) : V_(std::move(V)), w_(std::move(w)) {
    if (V_.rows() < 1) throw std::invalid_argument("Polyhedron: need at least one row");
    if (V_.rows() != w_.size()) throw std::invalid_argument("Polyhedron: V rows != w size");
    if (!V_.allFinite() || !w_.allFinite()) throw std::invalid_argument("Polyhedron: non-finite entry");
    norms_ = V_.rowwise().norm();
    cache_ = std::make_shared<Cache>();
  }

  /// Axis-aligned box lo <= x <= hi.
  static Polyhedron box(const VectorXd& lo, const VectorXd& hi) {
    const Index n = lo.size();
    MatrixXd V(2 * n, n);
    VectorXd w(2 * n);
    V.setZero();
    for (Index i = 0; i < n; ++i) {
      V(2 * i, i) = 1.0;
      w[2 * i] = hi[i];
      V(2 * i + 1, i) = -1.0;
      w[2 * i + 1] = -lo[i];
    }
    return {std::move(V), std::move(w)};
  }

  const MatrixXd& V() const { return V_; }
  const VectorXd& w() const { return w_; }
  const VectorXd& row_norms() const { return norms_; }
  Index dim() const { return V_.cols(); }
  Index rows() const { return V_.rows(); }
  bool valid() const { return cache_ != nullptr; }

  const lp::Ball& chebyshev() const {
    std::call_once(cache_->ball_once, [this] { cache_->ball = lp::chebyshev(V_, w_); });
    return cache_->ball;
  }
  const VectorXd& center() const { return chebyshev().center; }
  double radius() const { return chebyshev().radius; }

  /// LP-computed bounding box (2n LPs). Infinite entries if unbounded.
  const Box& bounding_box() const {
    std::call_once(cache_->box_once, [this] { cache_->box = compute_box(); });
    return cache_->box;
  }

  /// Largest normalized violation max_i (V_i x - w_i) / |V_i|.
  double violation(const VectorXd& x) const {
    double worst = -lp::kInf;
    for (Index i = 0; i < V_.rows(); ++i) {
      if (norms_[i] <= 0.0) {
        if (w_[i] < 0.0) return lp::kInf;
        continue;
      }
      worst = std::max(worst, (V_.row(i).dot(x) - w_[i]) / norms_[i]);
    }
    return worst;
  }

  bool contains(const VectorXd& x, double tol) const {
    for (Index i = 0; i < V_.rows(); ++i) {
      if (norms_[i] <= 0.0) {
        if (w_[i] < 0.0) return false;
      } else if (V_.row(i).dot(x) - w_[i] > tol * norms_[i]) {
        return false;
      }
    }
    return true;
  }

  /// Rows concatenated with `extra`.
  Polyhedron with_rows(const MatrixXd& V2, const VectorXd& w2) const {
    MatrixXd V(V_.rows() + V2.rows(), V_.cols());
    VectorXd w(w_.size() + w2.size());
    V << V_, V2;
    w << w_, w2;
    return {std::move(V), std::move(w)};
  }

  /// Maximizes c'x over the set. nullopt if empty; +inf if unbounded.
  std::optional<double> support(const VectorXd& c) const {
    lp::LinearProgram prog;
    prog.cost = -c;
    prog.A_ub = V_;
    prog.b_ub = w_;
    const auto r = lp::solve(prog);
    if (r.status == lp::Status::Infeasible) return std::nullopt;
    if (r.status == lp::Status::Unbounded) return lp::kInf;
    return -r.objective;
  }

 private:
  struct Cache {
    std::once_flag ball_once;
    lp::Ball ball;
    std::once_flag box_once;
    Box box;
  };

  Box compute_box() const {
    const Index n = dim();
    Box b{VectorXd::Constant(n, -lp::kInf), VectorXd::Constant(n, lp::kInf)};
    for (Index i = 0; i < n; ++i) {
      VectorXd e = VectorXd::Unit(n, i);
      if (auto hi = support(e)) b.hi[i] = *hi;
      if (auto lo = support(-e)) b.lo[i] = -*lo;
    }
    return b;
  }

  MatrixXd V_;
  VectorXd w_;
  VectorXd norms_;
  std::shared_ptr<Cache> cache_;
};

/// Oriented hyperplane {x | normal'x = offset}.
struct Hyperplane {
  VectorXd normal;
  double offset = 0.0;

  /// Unit normal whose first significant component is positive.
  Hyperplane canonical() const {
    const double nrm = normal.norm();
    if (nrm <= 0.0) throw std::invalid_argument("Hyperplane: zero normal");
    Hyperplane h{normal / nrm, offset / nrm};
    const double eps = tolerances().geo;
    for (Index i = 0; i < h.normal.size(); ++i) {
      if (std::abs(h.normal[i]) > eps) {
        if (h.normal[i] < 0.0) {
          h.normal = -h.normal;
          h.offset = -h.offset;
        }
        break;
      }
    }
    return h;
  }

  /// Componentwise comparison of canonical forms.
  bool same_as(const Hyperplane& o, double tol) const {
    const Hyperplane a = canonical(), b = o.canonical();
    if (std::abs(a.offset - b.offset) > tol) return false;
    return (a.normal - b.normal).cwiseAbs().maxCoeff() <= tol;
  }

  double signed_distance(const VectorXd& x) const { return (normal.dot(x) - offset) / normal.norm(); }
};

inline bool is_empty(const Polyhedron& P) { return P.radius() < -tolerances().feas; }

/// True iff the Chebyshev radius is at least the full-dimensionality threshold.
inline bool is_full_dim(const Polyhedron& P) { return P.radius() >= tolerances().dim; }

/// Drops rows that do not change the set. Throws EmptyInput on an empty set.
inline Polyhedron remove_redundant(const Polyhedron& P) {
  if (is_empty(P)) throw EmptyInput("remove_redundant: polyhedron is empty");
  const Index m = P.rows(), n = P.dim();
  const double eps = tolerances().geo;

  // Normalized copy; zero rows (0 <= w, w >= 0 since nonempty) are dropped.
  MatrixXd U(m, n);
  VectorXd u(m);
  std::vector<Index> alive;
  for (Index i = 0; i < m; ++i) {
    const double nrm = P.row_norms()[i];
    if (nrm <= 0.0) continue;
    U.row(i) = P.V().row(i) / nrm;
    u[i] = P.w()[i] / nrm;
    alive.push_back(i);
  }

  // Parallel rows with the same normal: only the tightest can matter.
  std::vector<bool> keep(static_cast<std::size_t>(m), false);
  for (auto i : alive) keep[static_cast<std::size_t>(i)] = true;
  for (std::size_t a = 0; a < alive.size(); ++a) {
    const auto i = alive[a];
    if (!keep[static_cast<std::size_t>(i)]) continue;
    for (std::size_t b = a + 1; b < alive.size(); ++b) {
      const auto j = alive[b];
      if (!keep[static_cast<std::size_t>(j)]) continue;
      if ((U.row(i) - U.row(j)).cwiseAbs().maxCoeff() > 1e-12) continue;
      if (u[j] >= u[i])
        keep[static_cast<std::size_t>(j)] = false;
      else {
        keep[static_cast<std::size_t>(i)] = false;
        break;
      }
    }
  }

  std::vector<Index> cur;
  for (auto i : alive)
    if (keep[static_cast<std::size_t>(i)]) cur.push_back(i);

  // LP certificate per row: maximize row i over the remaining rows.
  for (std::size_t k = 0; k < cur.size();) {
    if (cur.size() == 1) break;
    const Index i = cur[k];
    lp::LinearProgram prog;
    prog.cost = -U.row(i).transpose();
    const auto mm = static_cast<Index>(cur.size());
    prog.A_ub.resize(mm, n);
    prog.b_ub.resize(mm);
    for (Index r = 0; r < mm; ++r) {
      const Index j = cur[static_cast<std::size_t>(r)];
      prog.A_ub.row(r) = U.row(j);
      prog.b_ub[r] = j == i ? u[i] + 1.0 : u[j];
    }
    const auto res = lp::solve(prog);
    const bool redundant = res.optimal() && -res.objective <= u[i] + eps;
    if (redundant)
      cur.erase(cur.begin() + static_cast<std::ptrdiff_t>(k));
    else
      ++k;
  }

  MatrixXd V(static_cast<Index>(cur.size()), n);
  VectorXd w(static_cast<Index>(cur.size()));
  for (std::size_t r = 0; r < cur.size(); ++r) {
    V.row(static_cast<Index>(r)) = U.row(cur[r]);
    w[static_cast<Index>(r)] = u[cur[r]];
  }
  if (V.rows() == 0) {
    // Whole space; keep a harmless row to satisfy m >= 1.
    V = MatrixXd::Zero(1, n);
    V(0, 0) = 0.0;
    w = VectorXd::Zero(1);
  }
  return {std::move(V), std::move(w)};
}

/// Row concatenation followed by redundancy removal (skipped when empty).
inline Polyhedron intersect(const Polyhedron& P, const Polyhedron& Q) {
  if (P.dim() != Q.dim()) throw std::invalid_argument("intersect: dimension mismatch");
  Polyhedron R = P.with_rows(Q.V(), Q.w());
  if (is_empty(R)) return R;
  return remove_redundant(R);
}

namespace detail {

// Any H-representation of a full-dimensional polyhedron contains a row for
// each facet hyperplane, so two polyhedra sharing an (n-1)-face must carry a
// pair of opposite rows on the same hyperplane.
inline bool has_opposite_rows(const Polyhedron& P, const Polyhedron& Q, double tol) {
  for (Index i = 0; i < P.rows(); ++i) {
    const double ni = P.row_norms()[i];
    if (ni <= 0.0) continue;
    for (Index j = 0; j < Q.rows(); ++j) {
      const double nj = Q.row_norms()[j];
      if (nj <= 0.0) continue;
      if (std::abs(P.w()[i] / ni + Q.w()[j] / nj) > tol) continue;
      if ((P.V().row(i) / ni + Q.V().row(j) / nj).cwiseAbs().maxCoeff() <= tol) return true;
    }
  }
  return false;
}

}  // namespace detail

/// Dimension of the affine hull of P ∩ Q, or -1 when empty.
inline int intersection_dim(const Polyhedron& P, const Polyhedron& Q) {
  const Index n = P.dim();
  const Polyhedron R = P.with_rows(Q.V(), Q.w());
  if (is_empty(R)) return -1;
  const double eps = tolerances().geo;
  const Index m = R.rows();

  // Implicit equalities: rows whose slack cannot exceed eps over R.
  std::vector<Index> eq, ineq;
  for (Index i = 0; i < m; ++i) {
    const double nrm = R.row_norms()[i];
    if (nrm <= 0.0) continue;
    const auto best = R.support(-R.V().row(i).transpose() / nrm);
    // slack = w_i/nrm - V_i x/nrm; max slack = w_i/nrm + max(-V_i x / nrm)
    const double max_slack = best ? R.w()[i] / nrm + *best : -lp::kInf;
    (max_slack <= eps ? eq : ineq).push_back(i);
  }
  if (eq.empty()) return R.radius() >= tolerances().dim ? static_cast<int>(n) : static_cast<int>(n) - 1;

  MatrixXd E(static_cast<Index>(eq.size()), n);
  VectorXd e(static_cast<Index>(eq.size()));
  for (std::size_t k = 0; k < eq.size(); ++k) {
    E.row(static_cast<Index>(k)) = R.V().row(eq[k]) / R.row_norms()[eq[k]];
    e[static_cast<Index>(k)] = R.w()[eq[k]] / R.row_norms()[eq[k]];
  }
  Eigen::JacobiSVD<MatrixXd> svd(E, Eigen::ComputeThinU | Eigen::ComputeFullV);
  Index rank = 0;
  for (Index k = 0; k < svd.singularValues().size(); ++k)
    if (svd.singularValues()[k] > 1e-9) ++rank;
  const Index sub = n - rank;
  if (sub == 0) return 0;

  // Chebyshev ball of the remaining rows inside the equality subspace.
  const VectorXd x0 = svd.solve(e);
  const MatrixXd Z = svd.matrixV().rightCols(sub);
  std::vector<Index> live;
  for (auto i : ineq)
    if ((R.V().row(i) * Z).norm() > 1e-12 * R.row_norms()[i]) live.push_back(i);
  if (live.empty()) return static_cast<int>(sub);
  MatrixXd W(static_cast<Index>(live.size()), sub);
  VectorXd c(static_cast<Index>(live.size()));
  for (std::size_t k = 0; k < live.size(); ++k) {
    const Index i = live[k];
    W.row(static_cast<Index>(k)) = R.V().row(i) * Z;
    c[static_cast<Index>(k)] = R.w()[i] - R.V().row(i).dot(x0);
  }
  const auto ball = lp::chebyshev(W, c);
  return ball.radius >= tolerances().dim ? static_cast<int>(sub) : static_cast<int>(sub) - 1;
}

/// True iff P ∩ Q is (n-1)-dimensional, i.e. P and Q share a facet.
inline bool facet_dim_check(const Polyhedron& P, const Polyhedron& Q) {
  if (P.dim() != Q.dim()) throw std::invalid_argument("facet_dim_check: dimension mismatch");
  if (!detail::has_opposite_rows(P, Q, 1e-6)) return false;
  return intersection_dim(P, Q) == static_cast<int>(P.dim()) - 1;
}

/// Hyperplane carrying the common facet of P and Q, oriented so that
/// P ⊆ {normal'x <= offset}. nullopt when they share no facet.
inline std::optional<Hyperplane> shared_facet(const Polyhedron& P, const Polyhedron& Q) {
  const Index n = P.dim();
  const double tol = 1e-6;
  for (Index i = 0; i < P.rows(); ++i) {
    const double ni = P.row_norms()[i];
    if (ni <= 0.0) continue;
    const VectorXd a = P.V().row(i).transpose() / ni;
    const double b = P.w()[i] / ni;
    for (Index j = 0; j < Q.rows(); ++j) {
      const double nj = Q.row_norms()[j];
      if (nj <= 0.0 || std::abs(b + Q.w()[j] / nj) > tol) continue;
      if ((a + Q.V().row(j).transpose() / nj).cwiseAbs().maxCoeff() > tol) continue;
      // Chebyshev ball of P ∩ Q inside the candidate hyperplane.
      const VectorXd x0 = a * b;
      if (n == 1) {
        if (P.contains(x0, tolerances().geo) && Q.contains(x0, tolerances().geo)) return Hyperplane{a, b};
        continue;
      }
      Eigen::JacobiSVD<MatrixXd> svd(a.transpose(), Eigen::ComputeFullV);
      const MatrixXd Z = svd.matrixV().rightCols(n - 1);
      const Polyhedron R = P.with_rows(Q.V(), Q.w());
      std::vector<Index> live;
      bool infeasible = false;
      for (Index r = 0; r < R.rows(); ++r) {
        if ((R.V().row(r) * Z).norm() > 1e-9 * R.row_norms()[r])
          live.push_back(r);
        else if (R.V().row(r).dot(x0) > R.w()[r] + tolerances().geo * std::max(1.0, R.row_norms()[r]))
          infeasible = true;
      }
      if (infeasible) continue;
      if (live.empty()) return Hyperplane{a, b};
      MatrixXd W(static_cast<Index>(live.size()), n - 1);
      VectorXd c(static_cast<Index>(live.size()));
      for (std::size_t k = 0; k < live.size(); ++k) {
        W.row(static_cast<Index>(k)) = R.V().row(live[k]) * Z;
        c[static_cast<Index>(k)] = R.w()[live[k]] - R.V().row(live[k]).dot(x0);
      }
      if (lp::chebyshev(W, c).radius >= tolerances().dim) return Hyperplane{a, b};
    }
  }
  return std::nullopt;
}

/// Both closed sides of P cut by H: (normal'x <= offset, normal'x >= offset).
/// A side is present iff full-dimensional; if H misses int(P) the present
/// side is P itself.
inline std::pair<std::optional<Polyhedron>, std::optional<Polyhedron>> split_by(const Polyhedron& P,
                                                                                const Hyperplane& H) {
  const double nrm = H.normal.norm();
  const VectorXd a = H.normal / nrm;
  const double o = H.offset / nrm;
  const double dim_eps = tolerances().dim;

  const Box& box = P.bounding_box();
  if (box.lo.allFinite() && box.hi.allFinite()) {
    const auto [lo, hi] = box.range(a);
    if (hi <= o + dim_eps) return {P, std::nullopt};
    if (lo >= o - dim_eps) return {std::nullopt, P};
  }

  const Polyhedron below = P.with_rows(a.transpose(), VectorXd::Constant(1, o));
  const Polyhedron above = P.with_rows(-a.transpose(), VectorXd::Constant(1, -o));
  const bool has_below = below.radius() >= dim_eps;
  const bool has_above = above.radius() >= dim_eps;
  if (has_below && has_above) return {remove_redundant(below), remove_redundant(above)};
  if (has_below) return {P, std::nullopt};
  if (has_above) return {std::nullopt, P};
  return {std::nullopt, std::nullopt};
}

}  // namespace pwadc
