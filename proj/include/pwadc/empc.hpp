#pragma once

// Explicit MPC for linear systems with polyhedral constraints: terminal
// ingredients (DARE, maximal LQR-admissible set), condensing into an mpQP in
// the initial state, and critical-region exploration yielding the PWA law of
// the first input.

#include "pwadc/geom.hpp"
#include "pwadc/pwa.hpp"
#include "pwadc/qp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <deque>
#include <iostream>
#include <map>
#include <optional>
#include <cstdint>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace pwadc::empc {

class NoConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ExplosionCap : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ValidationFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Solution of the discrete-time algebraic Riccati equation by fixed-point
/// iteration of the Riccati recursion, starting from Q.
inline MatrixXd dare(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R,
                     int max_iter = 10000, double tol = 1e-12) {
  MatrixXd P = Q;
  for (int it = 0; it < max_iter; ++it) {
    const MatrixXd BtP = B.transpose() * P;
    const MatrixXd S = R + BtP * B;
    MatrixXd next = A.transpose() * P * A - (BtP * A).transpose() * S.ldlt().solve(BtP * A) + Q;
    next = 0.5 * (next + next.transpose());
    const double diff = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    if (diff <= tol) return P;
  }
  throw NoConvergence("dare: Riccati iteration did not converge");
}

/// LQR gain for u = K x.
inline MatrixXd lqr_gain(const MatrixXd& A, const MatrixXd& B, const MatrixXd& R, const MatrixXd& P) {
  const MatrixXd S = R + B.transpose() * P * B;
  return -S.ldlt().solve(B.transpose() * P * A);
}

/// Maximal constraint-admissible invariant set of x+ = (A + B K) x subject to
/// x ∈ X and K x ∈ U.
inline Polyhedron lqr_invariant_set(const MatrixXd& A, const MatrixXd& B, const MatrixXd& K, const Polyhedron& X,
                                    const Polyhedron& U, int max_iter = 500) {
  const MatrixXd Acl = A + B * K;
  // Stage constraints C x <= c.
  MatrixXd C(X.rows() + U.rows(), A.cols());
  VectorXd c(X.rows() + U.rows());
  C << X.V(), U.V() * K;
  c << X.w(), U.w();

  Polyhedron cur = remove_redundant(Polyhedron(C, c));
  MatrixXd Ck = C;
  for (int k = 1; k <= max_iter; ++k) {
    Ck = Ck * Acl;
    // Stop when every propagated row is implied by the current set.
    bool all_redundant = true;
    for (Index i = 0; i < Ck.rows(); ++i) {
      const auto s = cur.support(Ck.row(i).transpose());
      if (!s || *s > c[i] + tolerances().geo * std::max(1.0, Ck.row(i).norm())) {
        all_redundant = false;
        break;
      }
    }
    if (all_redundant) return cur;
    cur = remove_redundant(cur.with_rows(Ck, c));
  }
  throw NoConvergence("lqr_invariant_set: iteration cap reached");
}

struct MpcSpec {
  MatrixXd A, B, Q, R, P;
  int N = 1;
  Polyhedron X, U, T;

  /// The double-integrator case study: |x1| <= 25, |x2| <= 5, |u| <= 1,
  /// Q = I, R = 1, P from the DARE, T the maximal LQR-admissible set.
  static MpcSpec double_integrator(int horizon) {
    MpcSpec s;
    s.A.resize(2, 2);
    s.A << 1, 1, 0, 1;
    s.B.resize(2, 1);
    s.B << 0.5, 1;
    s.Q = MatrixXd::Identity(2, 2);
    s.R = MatrixXd::Identity(1, 1);
    s.N = horizon;
    s.X = Polyhedron::box(Eigen::Vector2d(-25, -5), Eigen::Vector2d(25, 5));
    s.U = Polyhedron::box(VectorXd::Constant(1, -1.0), VectorXd::Constant(1, 1.0));
    s.complete_terminal();
    return s;
  }

  /// Fills P (DARE) and T (LQR-admissible set) from A, B, Q, R, X, U.
  void complete_terminal() {
    P = dare(A, B, Q, R);
    T = lqr_invariant_set(A, B, lqr_gain(A, B, R, P), X, U);
  }

  void check() const {
    if (N < 1) throw std::invalid_argument("MpcSpec: horizon must be >= 1");
    const Index n = A.rows(), m = B.cols();
    if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != m || R.cols() != m ||
        P.rows() != n || P.cols() != n)
      throw std::invalid_argument("MpcSpec: matrix dimensions inconsistent");
    if (X.dim() != n || T.dim() != n || U.dim() != m) throw std::invalid_argument("MpcSpec: constraint dimensions");
    if (R.llt().info() != Eigen::Success) throw std::invalid_argument("MpcSpec: R must be positive definite");
  }
};

/// mpQP   min_u 1/2 u'Hu + x'F'u   s.t.  G u <= w + S x,   x ∈ X.
/// (The objective is half the MPC cost with the x-only terms dropped.)
struct CondensedQp {
  MatrixXd H;  // (N m) x (N m)
  MatrixXd F;  // (N m) x n
  MatrixXd G;
  VectorXd w;
  MatrixXd S;
  Polyhedron X;  // parameter set (state constraint at time 0)
  Index n = 0, m = 0;

  Index num_inputs() const { return H.rows(); }

  MatrixXd G_rows(const std::vector<int>& idx) const {
    MatrixXd out(static_cast<Index>(idx.size()), G.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Index>(k)) = G.row(idx[k]);
    return out;
  }

  std::optional<qp::QpSolution> solve_at(const VectorXd& x) const { return qp::solve(H, F * x, G, w + S * x); }
};

inline CondensedQp condense(const MpcSpec& spec) {
  spec.check();
  const Index n = spec.A.rows(), m = spec.B.cols(), N = spec.N, nu = N * m;

  // x_k = Apow[k] x + Gam[k] u
  std::vector<MatrixXd> Apow(static_cast<std::size_t>(N + 1)), Gam(static_cast<std::size_t>(N + 1));
  Apow[0] = MatrixXd::Identity(n, n);
  Gam[0] = MatrixXd::Zero(n, nu);
  for (Index k = 1; k <= N; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    Apow[ku] = spec.A * Apow[ku - 1];
    Gam[ku] = spec.A * Gam[ku - 1];
    Gam[ku].block(0, (k - 1) * m, n, m) += spec.B;
  }

  CondensedQp qp;
  qp.n = n;
  qp.m = m;
  qp.H = MatrixXd::Zero(nu, nu);
  qp.F = MatrixXd::Zero(nu, n);
  for (Index k = 0; k < N; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    qp.H += Gam[ku].transpose() * spec.Q * Gam[ku];
    qp.F += Gam[ku].transpose() * spec.Q * Apow[ku];
    qp.H.block(k * m, k * m, m, m) += spec.R;
  }
  const auto Nu = static_cast<std::size_t>(N);
  qp.H += Gam[Nu].transpose() * spec.P * Gam[Nu];
  qp.F += Gam[Nu].transpose() * spec.P * Apow[Nu];
  qp.H = 0.5 * (qp.H + qp.H.transpose());

  // Constraint blocks: inputs, states at k = 1..N-1, terminal state.
  const Index rows = N * spec.U.rows() + (N - 1) * spec.X.rows() + spec.T.rows();
  qp.G.resize(rows, nu);
  qp.w.resize(rows);
  qp.S.resize(rows, n);
  Index r = 0;
  for (Index k = 0; k < N; ++k) {
    const Index mu = spec.U.rows();
    qp.G.middleRows(r, mu).setZero();
    qp.G.block(r, k * m, mu, m) = spec.U.V();
    qp.w.segment(r, mu) = spec.U.w();
    qp.S.middleRows(r, mu).setZero();
    r += mu;
  }
  auto state_rows = [&](const Polyhedron& set, Index k) {
    const Index mx = set.rows();
    const auto ku = static_cast<std::size_t>(k);
    qp.G.middleRows(r, mx) = set.V() * Gam[ku];
    qp.w.segment(r, mx) = set.w();
    qp.S.middleRows(r, mx) = -set.V() * Apow[ku];
    r += mx;
  };
  for (Index k = 1; k < N; ++k) state_rows(spec.X, k);
  state_rows(spec.T, N);
  qp.X = spec.X;
  return qp;
}

struct CriticalRegion {
  std::vector<int> active_set;
  Polyhedron region;
  AffinePiece u0_law;
  MatrixXd Ku;  // full input sequence u = Ku x + ku
  VectorXd ku;
};

namespace detail {

// Affine optimizer and region rows for a given active set. nullopt when the
// active rows are linearly dependent.
inline std::optional<CriticalRegion> region_for(const CondensedQp& qp, const std::vector<int>& act) {
  const Index nu = qp.num_inputs(), n = qp.n;
  const Eigen::LDLT<MatrixXd> Hf(qp.H);
  const MatrixXd HiF = Hf.solve(qp.F);
  MatrixXd Ku = -HiF;
  VectorXd ku = VectorXd::Zero(nu);
  MatrixXd Lam;
  VectorXd lam0;
  const auto na = static_cast<Index>(act.size());
  if (na > 0) {
    MatrixXd GA(na, nu), SA(na, n);
    VectorXd wA(na);
    for (Index k = 0; k < na; ++k) {
      GA.row(k) = qp.G.row(act[static_cast<std::size_t>(k)]);
      SA.row(k) = qp.S.row(act[static_cast<std::size_t>(k)]);
      wA[k] = qp.w[act[static_cast<std::size_t>(k)]];
    }
    const MatrixXd HiGt = Hf.solve(GA.transpose());
    const MatrixXd M = GA * HiGt;
    Eigen::FullPivLU<MatrixXd> lu(M);
    if (lu.rank() < na || std::abs(lu.rcond()) < 1e-12) return std::nullopt;
    // lambda = -M^{-1} (w + S x + G H^{-1} F x)
    Lam = -lu.solve(SA + GA * HiF);
    lam0 = -lu.solve(wA);
    Ku = -HiF - HiGt * Lam;
    ku = -HiGt * lam0;
  }

  // Rows: lambda(x) >= 0, inactive primal feasibility, parameter set.
  std::vector<bool> is_act(static_cast<std::size_t>(qp.G.rows()), false);
  for (int a : act) is_act[static_cast<std::size_t>(a)] = true;
  const Index n_inact = qp.G.rows() - na;
  MatrixXd V(na + n_inact + qp.X.rows(), n);
  VectorXd w(V.rows());
  Index r = 0;
  for (Index k = 0; k < na; ++k, ++r) {
    V.row(r) = -Lam.row(k);
    w[r] = lam0[k];
  }
  for (Index i = 0; i < qp.G.rows(); ++i) {
    if (is_act[static_cast<std::size_t>(i)]) continue;
    // G_i (Ku x + ku) <= w_i + S_i x
    V.row(r) = qp.G.row(i) * Ku - qp.S.row(i);
    w[r] = qp.w[i] - qp.G.row(i).dot(ku);
    ++r;
  }
  V.bottomRows(qp.X.rows()) = qp.X.V();
  w.tail(qp.X.rows()) = qp.X.w();

  // Drop numerically void rows (e.g. constraints independent of x and u).
  std::vector<Index> keep;
  for (Index i = 0; i < V.rows(); ++i) {
    if (V.row(i).norm() > 1e-10) keep.push_back(i);
    else if (w[i] < -1e-10) return std::nullopt;  // infeasible constant row
  }
  MatrixXd Vk(static_cast<Index>(keep.size()), n);
  VectorXd wk(static_cast<Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    Vk.row(static_cast<Index>(k)) = V.row(keep[k]);
    wk[static_cast<Index>(k)] = w[keep[k]];
  }
  CriticalRegion cr;
  cr.active_set = act;
  cr.region = Polyhedron(std::move(Vk), std::move(wk));
  cr.Ku = Ku;
  cr.ku = ku;
  cr.u0_law = AffinePiece{Ku.topRows(qp.m).row(0).transpose(), ku[0]};
  return cr;
}

// Relative-interior point of the facet of P defined by `row` (Chebyshev
// center inside the facet hyperplane).
inline std::optional<VectorXd> facet_point(const Polyhedron& P, Index row) {
  const Index n = P.dim();
  const VectorXd a = P.V().row(row).transpose() / P.row_norms()[row];
  const double b = P.w()[row] / P.row_norms()[row];
  const VectorXd x0 = a * b;
  Eigen::JacobiSVD<MatrixXd> svd(a.transpose(), Eigen::ComputeFullV);
  const MatrixXd Z = svd.matrixV().rightCols(n - 1);
  std::vector<Index> live;
  for (Index i = 0; i < P.rows(); ++i) {
    if (i == row) continue;
    if ((P.V().row(i) * Z).norm() > 1e-12 * P.row_norms()[i]) live.push_back(i);
    else if (P.V().row(i).dot(x0) > P.w()[i] + 1e-9) return std::nullopt;
  }
  if (live.empty() || n == 1) return x0;
  MatrixXd W(static_cast<Index>(live.size()), n - 1);
  VectorXd c(static_cast<Index>(live.size()));
  for (std::size_t k = 0; k < live.size(); ++k) {
    W.row(static_cast<Index>(k)) = P.V().row(live[k]) * Z;
    c[static_cast<Index>(k)] = P.w()[live[k]] - P.V().row(live[k]).dot(x0);
  }
  const auto ball = lp::chebyshev(W, c);
  if (!(ball.radius > 0.0) || !std::isfinite(ball.radius)) return std::nullopt;
  return VectorXd(x0 + Z * ball.center);
}

}  // namespace detail

struct ExploreOptions {
  double step = 1e-6;
  int jitter_retries = 10;
  double jitter = 1e-8;
  std::uint64_t seed = 7;
  bool verbose = false;
};

struct ExploreResult {
  std::vector<CriticalRegion> regions;
  std::size_t skipped_degenerate = 0;
};

/// Critical-region exploration by facet crossing. Regions are deduplicated by
/// active set; lower-dimensional regions are dropped.
inline ExploreResult explore(const CondensedQp& qp, const ExploreOptions& opt = {}) {
  const Index n = qp.n, nu = qp.num_inputs();
  const auto& tol = tolerances();
  ExploreResult out;
  std::set<std::vector<int>> seen;
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Seed: Chebyshev center of the lifted feasible set {(x,u)} projected to x.
  {
    MatrixXd V(qp.G.rows() + qp.X.rows(), n + nu);
    VectorXd w(V.rows());
    V << -qp.S, qp.G, qp.X.V(), MatrixXd::Zero(qp.X.rows(), nu);
    w << qp.w, qp.X.w();
    const auto ball = lp::chebyshev(V, w);
    if (!(ball.radius > 0.0)) throw std::runtime_error("explore: feasible parameter set has empty interior");
    const VectorXd x0 = ball.center.head(n);
    auto sol = qp.solve_at(x0);
    if (!sol) throw std::runtime_error("explore: seed infeasible");
    std::deque<VectorXd> frontier;
    frontier.push_back(x0);

    while (!frontier.empty()) {
      const VectorXd x = frontier.front();
      frontier.pop_front();

      std::optional<CriticalRegion> cr;
      bool known = false;
      for (int attempt = 0; attempt <= opt.jitter_retries; ++attempt) {
        VectorXd xt = x;
        if (attempt > 0)
          for (Index i = 0; i < n; ++i) xt[i] += opt.jitter * gauss(rng);
        if (!qp.X.contains(xt, 0.0)) continue;
        const auto s = qp.solve_at(xt);
        if (!s) break;  // outside the feasible set
        if (seen.count(s->active)) {
          known = true;
          break;
        }
        auto cand = detail::region_for(qp, s->active);
        if (cand && is_full_dim(cand->region)) {
          cr = std::move(cand);
          break;
        }
      }
      if (known) continue;
      if (!cr) {
        ++out.skipped_degenerate;
        if (opt.verbose) std::cerr << "explore: degenerate crossing at (" << x.transpose() << ") skipped\n";
        continue;
      }
      seen.insert(cr->active_set);
      cr->region = remove_redundant(cr->region);
      const Polyhedron& R = cr->region;
      for (Index row = 0; row < R.rows(); ++row) {
        const auto fp = detail::facet_point(R, row);
        if (!fp) continue;
        const VectorXd normal = R.V().row(row).transpose() / R.row_norms()[row];
        VectorXd next = *fp + opt.step * normal;
        if (!qp.X.contains(next, 0.0)) continue;
        frontier.push_back(std::move(next));
      }
      out.regions.push_back(std::move(*cr));
      if (out.regions.size() > tol.region_cap) throw ExplosionCap("explore: region cap exceeded");
    }
  }
  return out;
}

/// Feasible set F as the intersection of region facets that border no other
/// region. Valid because F is convex.
inline Polyhedron feasible_set(const std::vector<Polyhedron>& regions, double step = 1e-6) {
  std::vector<VectorXd> rows;
  std::vector<double> rhs;
  for (const auto& R : regions) {
    for (Index row = 0; row < R.rows(); ++row) {
      const auto fp = detail::facet_point(R, row);
      if (!fp) continue;
      const VectorXd normal = R.V().row(row).transpose() / R.row_norms()[row];
      const VectorXd probe = *fp + step * normal;
      bool inside = false;
      for (const auto& Q : regions)
        if (Q.contains(probe, 0.0)) {
          inside = true;
          break;
        }
      if (inside) continue;
      rows.push_back(normal);
      rhs.push_back(R.w()[row] / R.row_norms()[row]);
    }
  }
  if (rows.empty()) throw std::runtime_error("feasible_set: no boundary facets found");
  MatrixXd V(static_cast<Index>(rows.size()), regions.front().dim());
  VectorXd w(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    V.row(static_cast<Index>(k)) = rows[k].transpose();
    w[static_cast<Index>(k)] = rhs[k];
  }
  return remove_redundant(Polyhedron(std::move(V), std::move(w)));
}

/// Assembles the explicit first-input law as a PwaFunction and validates it.
inline PwaFunction make_pwa(const std::vector<CriticalRegion>& regions, bool validate_result = true,
                            const ValidateOptions& vopt = {}) {
  if (regions.empty()) throw std::invalid_argument("make_pwa: no regions");
  PwaFunction f;
  f.n = regions.front().region.dim();
  for (const auto& cr : regions) {
    f.pieces.push_back(cr.u0_law);
    f.regions.push_back(cr.region);
  }
  f.domain = feasible_set(f.regions);
  if (validate_result) {
    const auto rep = validate(f, vopt);
    if (!rep.ok()) throw ValidationFailed("make_pwa: " + rep.summary());
  }
  return f;
}

/// Convenience pipeline for the double-integrator case study.
inline PwaFunction double_integrator_law(int horizon, bool validate_result = true) {
  const auto spec = MpcSpec::double_integrator(horizon);
  const auto qp = condense(spec);
  return make_pwa(explore(qp).regions, validate_result);
}

}  // namespace pwadc::empc
