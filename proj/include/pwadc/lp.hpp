#pragma once

// Dense bounded-variable primal simplex.
//
// Problems are stated as
//
//   min  cost' x
//   s.t. A_ub x <= b_ub
//        A_eq x  = b_eq
//        lower <= x <= upper
//
// Empty `lower`/`upper` vectors mean the variables are free. The solver runs a
// two-phase tableau method (artificial variables in phase 1) with Dantzig
// pricing and a switch to Bland's rule after a run of degenerate pivots. The
// basis is re-inverted from the original data at the end of each phase so that
// the reported primal point does not carry accumulated pivoting error.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace pwadc::lp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Absolute primal feasibility tolerance for reported solutions.
inline constexpr double kFeasTol = 1e-8;

class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LinearProgram {
  VectorXd cost;
  MatrixXd A_ub;
  VectorXd b_ub;
  MatrixXd A_eq;
  VectorXd b_eq;
  VectorXd lower;  // empty => -inf
  VectorXd upper;  // empty => +inf

  Eigen::Index num_vars() const { return cost.size(); }

  // Throws std::invalid_argument when shapes disagree or data contains NaN.
  void check() const {
    const auto nv = num_vars();
    auto bad = [](const std::string& what) {
      throw std::invalid_argument("LinearProgram: " + what);
    };
    if (A_ub.rows() != b_ub.size()) bad("A_ub rows != b_ub size");
    if (A_ub.rows() > 0 && A_ub.cols() != nv) bad("A_ub cols != num_vars");
    if (A_eq.rows() != b_eq.size()) bad("A_eq rows != b_eq size");
    if (A_eq.rows() > 0 && A_eq.cols() != nv) bad("A_eq cols != num_vars");
    if (lower.size() != 0 && lower.size() != nv) bad("lower size");
    if (upper.size() != 0 && upper.size() != nv) bad("upper size");
    auto has_nan = [](const auto& m) { return m.size() > 0 && m.hasNaN(); };
    if (has_nan(cost) || has_nan(A_ub) || has_nan(b_ub) || has_nan(A_eq) ||
        has_nan(b_eq) || has_nan(lower) || has_nan(upper))
      bad("NaN entry");
    for (Eigen::Index j = 0; j < nv; ++j)
      if (lower_bound(j) > upper_bound(j)) bad("lower > upper");
  }

  double lower_bound(Eigen::Index j) const { return lower.size() ? lower[j] : -kInf; }
  double upper_bound(Eigen::Index j) const { return upper.size() ? upper[j] : kInf; }
};

enum class Status { Optimal, Infeasible, Unbounded };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
  }
  return "unknown";
}

struct LpResult {
  Status status = Status::Infeasible;
  VectorXd x;  // populated iff Optimal
  double objective = 0.0;
  long iterations = 0;

  bool optimal() const { return status == Status::Optimal; }
};

struct SolverOptions {
  long max_iterations = -1;  // <= 0 => 50 * (m + nv)
  double pivot_tol = 1e-9;
  double optimality_tol = 1e-9;
  double feasibility_tol = 1e-9;
  int degenerate_switch = 50;  // consecutive degenerate pivots before Bland
};

namespace detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Tableau {
 public:
  Tableau(const LinearProgram& lp, const SolverOptions& opt) : opt_(opt) {
    nv_ = lp.num_vars();
    m_ub_ = lp.A_ub.rows();
    m_eq_ = lp.A_eq.rows();
    m_ = m_ub_ + m_eq_;
    n_art_ = m_;
    ncol_ = nv_ + m_ub_ + n_art_;

    // Original constraint columns, [A | I_ub | artificial signs filled later].
    A_.setZero(m_, ncol_);
    b_.resize(m_);
    if (m_ub_ > 0) {
      A_.block(0, 0, m_ub_, nv_) = lp.A_ub;
      b_.head(m_ub_) = lp.b_ub;
    }
    if (m_eq_ > 0) {
      A_.block(m_ub_, 0, m_eq_, nv_) = lp.A_eq;
      b_.tail(m_eq_) = lp.b_eq;
    }
    for (Eigen::Index r = 0; r < m_ub_; ++r) A_(r, nv_ + r) = 1.0;

    lo_.resize(ncol_);
    hi_.resize(ncol_);
    cost_.setZero(ncol_);
    for (Eigen::Index j = 0; j < nv_; ++j) {
      lo_[j] = lp.lower_bound(j);
      hi_[j] = lp.upper_bound(j);
      cost_[j] = lp.cost[j];
    }
    for (Eigen::Index j = nv_; j < ncol_; ++j) {
      lo_[j] = 0.0;
      hi_[j] = kInf;
    }

    x_.setZero(ncol_);
    for (Eigen::Index j = 0; j < nv_; ++j) {
      if (std::isfinite(lo_[j]))
        x_[j] = lo_[j];
      else if (std::isfinite(hi_[j]))
        x_[j] = hi_[j];
    }

    // Residual with structural variables at their starting values.
    VectorXd resid = b_;
    if (nv_ > 0) resid.noalias() -= A_.leftCols(nv_) * x_.head(nv_);

    basis_.resize(m_);
    is_basic_.assign(ncol_, -1);
    for (Eigen::Index r = 0; r < m_; ++r) {
      const Eigen::Index art = nv_ + m_ub_ + r;
      if (r < m_ub_ && resid[r] >= 0.0) {
        // Slack absorbs the row; artificial stays nonbasic at zero.
        basis_[r] = nv_ + r;
        A_(r, art) = 1.0;
        hi_[art] = 0.0;
      } else {
        basis_[r] = art;
        A_(r, art) = resid[r] >= 0.0 ? 1.0 : -1.0;
      }
      is_basic_[basis_[r]] = static_cast<int>(r);
    }
    reinvert();
  }

  // Returns false on unboundedness. Throws NumericalFailure on iteration cap.
  bool run(const VectorXd& phase_cost, long& iter, long max_iter) {
    phase_cost_ = phase_cost;
    compute_reduced_costs();
    int degenerate_run = 0;
    int reinversions = 0;
    for (;;) {
      if (iter >= max_iter)
        throw NumericalFailure("simplex iteration cap reached (" + std::to_string(max_iter) + ")");
      const bool bland = degenerate_run >= opt_.degenerate_switch;
      Eigen::Index enter = -1;
      double best = 0.0;
      int dir = 0;
      for (Eigen::Index j = 0; j < ncol_; ++j) {
        if (is_basic_[j] >= 0) continue;
        if (hi_[j] - lo_[j] <= 0.0) continue;  // fixed
        const double dj = d_[j];
        int dj_dir = 0;
        if (dj < -opt_.optimality_tol && x_[j] < hi_[j]) dj_dir = +1;
        else if (dj > opt_.optimality_tol && x_[j] > lo_[j]) dj_dir = -1;
        if (dj_dir == 0) continue;
        if (bland) {
          enter = j;
          dir = dj_dir;
          break;
        }
        if (std::abs(dj) > best) {
          best = std::abs(dj);
          enter = j;
          dir = dj_dir;
        }
      }
      if (enter < 0) {
        // Candidate optimum: re-invert once to confirm on clean data.
        if (reinversions++ < 2 && iter > 0) {
          reinvert();
          compute_reduced_costs();
          if (!has_candidate()) return true;
          continue;
        }
        return true;
      }

      // Ratio test. Basic variable i changes by -dir * alpha_i * theta.
      // Harris two-pass: bound the step with relaxed bounds, then take the
      // largest pivot among rows blocking within that bound.
      double theta = hi_[enter] - lo_[enter];  // bound flip
      Eigen::Index leave = -1;
      double leave_alpha = 0.0;
      const double relax = opt_.feasibility_tol;
      auto slack = [&](Eigen::Index i, double alpha, double pad) {
        const Eigen::Index bj = basis_[i];
        if (alpha > 0.0) return std::isfinite(lo_[bj]) ? (xb_[i] - lo_[bj] + pad) / alpha : kInf;
        return std::isfinite(hi_[bj]) ? (hi_[bj] - xb_[i] + pad) / -alpha : kInf;
      };
      double bound = kInf;
      for (Eigen::Index i = 0; i < m_; ++i) {
        const double alpha = dir * T_(i, enter);
        if (std::abs(alpha) <= opt_.pivot_tol) continue;
        bound = std::min(bound, slack(i, alpha, relax));
      }
      if (bound < theta) {
        double best_alpha = 0.0;
        double best_ratio = kInf;
        for (Eigen::Index i = 0; i < m_; ++i) {
          const double alpha = dir * T_(i, enter);
          if (std::abs(alpha) <= opt_.pivot_tol) continue;
          const double ti = slack(i, alpha, 0.0);
          if (ti > bound) continue;
          const bool take = leave < 0 || std::abs(alpha) > std::abs(best_alpha) ||
                            (bland && std::abs(alpha) == std::abs(best_alpha) && basis_[i] < basis_[leave]);
          if (take) {
            leave = i;
            best_alpha = alpha;
            best_ratio = ti;
          }
        }
        theta = std::max(0.0, best_ratio);
        leave_alpha = best_alpha;
      }
      if (!std::isfinite(theta)) return false;

      ++iter;
      degenerate_run = theta <= 1e-12 ? degenerate_run + 1 : 0;

      // Move entering variable and basics.
      x_[enter] += dir * theta;
      if (theta != 0.0) xb_.noalias() -= (dir * theta) * T_.col(enter);

      if (leave < 0) {
        // Bound flip: entering reaches its opposite bound.
        x_[enter] = dir > 0 ? hi_[enter] : lo_[enter];
        continue;
      }
      const Eigen::Index out = basis_[leave];
      const double alpha = T_(leave, enter);
      x_[out] = leave_alpha > 0.0 ? lo_[out] : hi_[out];
      pivot(leave, enter, alpha);
      xb_[leave] = x_[enter];
      is_basic_[out] = -1;
      is_basic_[enter] = static_cast<int>(leave);
      basis_[leave] = enter;
    }
  }

  double phase_objective() const {
    double v = 0.0;
    for (Eigen::Index j = 0; j < ncol_; ++j) v += phase_cost_[j] * value(j);
    return v;
  }

  double value(Eigen::Index j) const {
    return is_basic_[j] >= 0 ? xb_[is_basic_[j]] : x_[j];
  }

  // After phase 1: pin artificials to zero and pivot basic ones out.
  void retire_artificials() {
    for (Eigen::Index j = nv_ + m_ub_; j < ncol_; ++j) {
      lo_[j] = 0.0;
      hi_[j] = 0.0;
      if (is_basic_[j] < 0) x_[j] = 0.0;
    }
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[i] < nv_ + m_ub_) continue;
      Eigen::Index best = -1;
      double best_abs = 1e-7;
      for (Eigen::Index j = 0; j < nv_ + m_ub_; ++j) {
        if (is_basic_[j] >= 0) continue;
        if (std::abs(T_(i, j)) > best_abs) {
          best_abs = std::abs(T_(i, j));
          best = j;
        }
      }
      if (best < 0) continue;  // redundant row; artificial stays basic at 0
      const Eigen::Index out = basis_[i];
      // Degenerate pivot: artificial value is ~0, nothing else moves.
      const double delta = (xb_[i] - 0.0) / T_(i, best);
      x_[best] += delta;
      xb_.noalias() -= delta * T_.col(best);
      pivot(i, best, T_(i, best));
      xb_[i] = x_[best];
      x_[out] = 0.0;
      is_basic_[out] = -1;
      is_basic_[best] = static_cast<int>(i);
      basis_[i] = best;
    }
  }

  VectorXd structural() const {
    VectorXd out(nv_);
    for (Eigen::Index j = 0; j < nv_; ++j) out[j] = value(j);
    return out;
  }

  Eigen::Index cols() const { return ncol_; }
  Eigen::Index first_artificial() const { return nv_ + m_ub_; }
  Eigen::Index num_structural() const { return nv_; }
  Eigen::Index rows() const { return m_; }

 private:
  bool has_candidate() const {
    for (Eigen::Index j = 0; j < ncol_; ++j) {
      if (is_basic_[j] >= 0 || hi_[j] - lo_[j] <= 0.0) continue;
      if (d_[j] < -opt_.optimality_tol && x_[j] < hi_[j]) return true;
      if (d_[j] > opt_.optimality_tol && x_[j] > lo_[j]) return true;
    }
    return false;
  }

  void pivot(Eigen::Index r, Eigen::Index c, double alpha) {
    T_.row(r) /= alpha;
    const Eigen::RowVectorXd prow = T_.row(r);
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = T_(i, c);
      if (f != 0.0) T_.row(i).noalias() -= f * prow;
    }
    const double dc = d_[c];
    if (dc != 0.0) d_.noalias() -= dc * prow.transpose();
  }

  // Rebuild B^{-1}A and basic values from the original data.
  void reinvert() {
    if (m_ == 0) {
      T_.resize(0, ncol_);
      xb_.resize(0);
      return;
    }
    MatrixXd Bm(m_, m_);
    for (Eigen::Index i = 0; i < m_; ++i) Bm.col(i) = A_.col(basis_[i]);
    Eigen::PartialPivLU<MatrixXd> lu(Bm);
    T_ = lu.solve(A_);
    VectorXd rhs = b_;
    for (Eigen::Index j = 0; j < ncol_; ++j)
      if (is_basic_[j] < 0 && x_[j] != 0.0) rhs.noalias() -= x_[j] * A_.col(j);
    xb_ = lu.solve(rhs);
  }

  void compute_reduced_costs() {
    VectorXd cb(m_);
    for (Eigen::Index i = 0; i < m_; ++i) cb[i] = phase_cost_[basis_[i]];
    d_ = phase_cost_;
    if (m_ > 0) d_.noalias() -= T_.transpose() * cb;
  }

  SolverOptions opt_;
  Eigen::Index nv_ = 0, m_ub_ = 0, m_eq_ = 0, m_ = 0, n_art_ = 0, ncol_ = 0;
  MatrixXd A_;
  VectorXd b_;
  RowMatrix T_;
  VectorXd xb_;
  VectorXd x_;  // nonbasic values (basic entries stale)
  VectorXd lo_, hi_, cost_, phase_cost_, d_;
  std::vector<Eigen::Index> basis_;
  std::vector<int> is_basic_;

 public:
  const VectorXd& full_cost() const { return cost_; }
};

}  // namespace detail

/// Number of LP solves since process start (statistics only).
inline std::atomic<long>& call_counter() {
  static std::atomic<long> calls{0};
  return calls;
}

/// Solves `lp`. Throws NumericalFailure when the iteration cap is hit and
/// std::invalid_argument on malformed input.
inline LpResult solve(const LinearProgram& lp, const SolverOptions& opt = {}) {
  lp.check();
  call_counter().fetch_add(1, std::memory_order_relaxed);
  const auto m = lp.A_ub.rows() + lp.A_eq.rows();
  const long cap = opt.max_iterations > 0 ? opt.max_iterations : 50 * static_cast<long>(m + lp.num_vars());

  detail::Tableau tab(lp, opt);
  LpResult res;
  long iter = 0;

  VectorXd phase1 = VectorXd::Zero(tab.cols());
  phase1.tail(tab.cols() - tab.first_artificial()).setOnes();
  tab.run(phase1, iter, cap);  // phase 1 is bounded below by zero
  const double scale = 1.0 + (lp.b_ub.size() ? lp.b_ub.cwiseAbs().maxCoeff() : 0.0) +
                       (lp.b_eq.size() ? lp.b_eq.cwiseAbs().maxCoeff() : 0.0);
  if (tab.phase_objective() > opt.feasibility_tol * scale * std::max<double>(1.0, static_cast<double>(m))) {
    res.status = Status::Infeasible;
    res.iterations = iter;
    return res;
  }
  tab.retire_artificials();

  if (!tab.run(tab.full_cost(), iter, cap)) {
    res.status = Status::Unbounded;
    res.iterations = iter;
    return res;
  }
  res.status = Status::Optimal;
  res.x = tab.structural();
  // Guard against silent drift: the reported point must satisfy the input.
  double viol = 0.0;
  if (lp.A_eq.rows() > 0) viol = (lp.A_eq * res.x - lp.b_eq).cwiseAbs().maxCoeff();
  if (lp.A_ub.rows() > 0) viol = std::max(viol, (lp.A_ub * res.x - lp.b_ub).maxCoeff());
  for (Eigen::Index j = 0; j < res.x.size(); ++j)
    viol = std::max({viol, lp.lower_bound(j) - res.x[j], res.x[j] - lp.upper_bound(j)});
  if (viol > 1e-6 * scale)
    throw NumericalFailure("simplex returned a point violating its constraints by " + std::to_string(viol));
  res.objective = lp.cost.dot(res.x);
  res.iterations = iter;
  return res;
}

/// Largest inscribed ball of {x | V x <= w}. The radius is negative when the
/// set is empty and +inf when the ball is unbounded.
struct Ball {
  VectorXd center;
  double radius = 0.0;
};

inline Ball chebyshev(const MatrixXd& V, const VectorXd& w) {
  if (V.rows() < 1) throw std::invalid_argument("chebyshev: need at least one row");
  const auto n = V.cols();
  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(V.rows()));
  for (Eigen::Index i = 0; i < V.rows(); ++i) {
    const double nrm = V.row(i).norm();
    if (nrm > 0.0) {
      keep.push_back(i);
    } else if (w[i] < 0.0) {
      return {VectorXd::Zero(n), -kInf};  // 0 <= w < 0
    }
  }
  if (keep.empty()) return {VectorXd::Zero(n), kInf};

  LinearProgram lp;
  const auto m = static_cast<Eigen::Index>(keep.size());
  lp.cost = VectorXd::Zero(n + 1);
  lp.cost[n] = -1.0;
  lp.A_ub.resize(m, n + 1);
  lp.b_ub.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto i = keep[static_cast<std::size_t>(k)];
    const double nrm = V.row(i).norm();
    lp.A_ub.row(k).head(n) = V.row(i) / nrm;
    lp.A_ub(k, n) = 1.0;
    lp.b_ub[k] = w[i] / nrm;
  }
  const auto r = solve(lp);
  if (r.status == Status::Unbounded) {
    // Unbounded ball: report the bounded directions' feasible point.
    return {VectorXd::Zero(n), kInf};
  }
  if (!r.optimal()) return {VectorXd::Zero(n), -kInf};
  return {r.x.head(n), r.x[n]};
}

}  // namespace pwadc::lp
