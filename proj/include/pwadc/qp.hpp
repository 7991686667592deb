#pragma once

// Primal active-set method for small strictly convex QPs
//
//   min 1/2 u'Hu + q'u   s.t.  G u <= h
//
// A feasible start comes from an LP; the working set is kept linearly
// independent so the KKT blocks stay nonsingular.

#include "pwadc/lp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace pwadc::qp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct QpSolution {
  VectorXd u;
  VectorXd lambda;          // multipliers for all rows of G (zero when inactive)
  std::vector<int> active;  // sorted working set at the optimum
  int iterations = 0;
};

namespace detail {

inline bool independent_of(const MatrixXd& G, const std::vector<int>& W, int row) {
  if (W.empty()) return G.row(row).norm() > 1e-12;
  MatrixXd M(static_cast<Index>(W.size()) + 1, G.cols());
  for (std::size_t k = 0; k < W.size(); ++k) M.row(static_cast<Index>(k)) = G.row(W[k]);
  M.row(static_cast<Index>(W.size())) = G.row(row);
  if (M.rows() > M.cols()) return false;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(M.transpose());
  qr.setThreshold(1e-10);
  return qr.rank() == M.rows();
}

}  // namespace detail

/// Returns nullopt when the feasible set is empty.
inline std::optional<QpSolution> solve(const MatrixXd& H, const VectorXd& q, const MatrixXd& G, const VectorXd& h,
                                       int max_iter = 1000) {
  const Index nu = H.rows();
  const Index m = G.rows();
  const double tol = 1e-9;

  VectorXd u = VectorXd::Zero(nu);
  if (m > 0 && (G * u - h).maxCoeff() > 0.0) {
    lp::LinearProgram prog;
    prog.cost = VectorXd::Zero(nu);
    prog.A_ub = G;
    prog.b_ub = h;
    const auto r = lp::solve(prog);
    if (!r.optimal()) return std::nullopt;
    u = r.x;
  }

  std::vector<int> W;
  for (Index i = 0; i < m; ++i) {
    const double s = h[i] - G.row(i).dot(u);
    if (std::abs(s) <= 1e-9 * (1.0 + std::abs(h[i])) && detail::independent_of(G, W, static_cast<int>(i)))
      W.push_back(static_cast<int>(i));
  }

  QpSolution sol;
  for (int it = 0; it < max_iter; ++it) {
    const auto nw = static_cast<Index>(W.size());
    MatrixXd K = MatrixXd::Zero(nu + nw, nu + nw);
    K.topLeftCorner(nu, nu) = H;
    for (Index k = 0; k < nw; ++k) {
      K.block(nu + k, 0, 1, nu) = G.row(W[static_cast<std::size_t>(k)]);
      K.block(0, nu + k, nu, 1) = G.row(W[static_cast<std::size_t>(k)]).transpose();
    }
    VectorXd rhs = VectorXd::Zero(nu + nw);
    rhs.head(nu) = -(H * u + q);
    const VectorXd z = K.partialPivLu().solve(rhs);
    const VectorXd p = z.head(nu);
    const VectorXd lam = z.tail(nw);

    if (p.norm() <= 1e-10 * (1.0 + u.norm())) {
      Index worst = -1;
      double most_negative = -tol;
      for (Index k = 0; k < nw; ++k)
        if (lam[k] < most_negative) {
          most_negative = lam[k];
          worst = k;
        }
      if (worst < 0) {
        sol.u = u;
        sol.lambda = VectorXd::Zero(m);
        for (Index k = 0; k < nw; ++k) sol.lambda[W[static_cast<std::size_t>(k)]] = lam[k];
        sol.active = W;
        std::sort(sol.active.begin(), sol.active.end());
        sol.iterations = it;
        return sol;
      }
      W.erase(W.begin() + worst);
      continue;
    }

    double alpha = 1.0;
    int blocking = -1;
    for (Index i = 0; i < m; ++i) {
      if (std::find(W.begin(), W.end(), static_cast<int>(i)) != W.end()) continue;
      const double gp = G.row(i).dot(p);
      if (gp <= 1e-12) continue;
      const double step = std::max(0.0, (h[i] - G.row(i).dot(u)) / gp);
      if (step < alpha) {
        alpha = step;
        blocking = static_cast<int>(i);
      }
    }
    u += alpha * p;
    if (blocking >= 0) W.push_back(blocking);
  }
  throw lp::NumericalFailure("qp: active-set iteration cap reached");
}

}  // namespace pwadc::qp
