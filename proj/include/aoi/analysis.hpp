#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "aoi/errors.hpp"
#include "aoi/scheduling.hpp"

namespace aoi {

// Neumaier compensated summation.
template <typename Real>
class CompensatedSum {
 public:
  void add(Real x) {
    const Real t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  Real value() const { return sum_ + comp_; }

 private:
  Real sum_ = Real(0);
  Real comp_ = Real(0);
};

template <typename Derived>
typename Derived::Scalar compensated_sum(const Eigen::DenseBase<Derived>& v) {
  CompensatedSum<typename Derived::Scalar> acc;
  for (Eigen::Index k = 0; k < v.size(); ++k) acc.add(v(k));
  return acc.value();
}

// probs[k] is the probability of state k+1; mass beyond the last stored
// state is at most tail_mass_bound.
struct SteadyStateDist {
  Eigen::VectorXd probs;
  Index truncation = 0;
  double tail_mass_bound = 0.0;

  double mean_state() const;
};

// Stationary joint law of (AoI j, interval i), row j-1 and column i-1.
struct JointStateTable {
  Eigen::MatrixXd table;
};

struct Alg1Result {
  double aaoi = 0.0;
  JointStateTable table;
  Index horizon = 0;       // rows actually evaluated
  double tail_mass = 0.0;  // probability mass beyond the horizon
};

// 1/(eps*rho). Returns +infinity when eps*rho == 0; throws DomainError when
// the product leaves [0, 1].
double baseline_aaoi(double eps, double rho);

// Geometric law p_u (1-p_u)^(n-1), truncated once the tail drops below tail_tol.
SteadyStateDist baseline_steady_state(double p_u, double tail_tol = 1e-12);

// Closed-form stationary law of the interval chain over states 1..force_thr:
// flat through sleep_thr+1, then geometric with ratio 1-base_prob.
SteadyStateDist threshold_steady_state(const ThresholdPolicy& pol);

// Long-run activation probability of the policy, the mass on interval 1.
double effective_activation(const ThresholdPolicy& pol);

// base_prob in (0, 1) giving the pair an effective activation within tol of
// target_eps, by bisection; nullopt if none exists.
std::optional<double> solve_base_prob(Index sleep_thr, Index force_thr, double target_eps, double tol = 1e-9);

/// Enumerates policies with force_thr <= theta_max whose effective
/// activation is within tol of target_eps. sleep_thr is swept over integers
/// and base_prob bisected in (0, 1); pairs with sleep_thr = force_thr - 1
/// do not depend on base_prob and are reported with base_prob = target_eps.
/// Output is ordered by (force_thr, sleep_thr).
std::vector<ThresholdPolicy> solve_threshold_pairs(double target_eps, Index theta_max, double tol = 1e-9);

/// AAoI of a user under a threshold policy whose attempts succeed
/// independently with probability rho, from the stationary law of the joint
/// (AoI, interval) chain.
///
/// Row 1 holds only (1,1) = sum_i pi_i p_i rho. Row j draws on row j-1:
/// column 1 collects failed attempts, column i > 1 the idle users shifted by
/// one interval. Rows are generated until the remaining mass falls below
/// tail_tol; any force_thr consecutive slots hold at least one attempt, so
/// force_thr * ceil(log(tail_tol)/log(1-rho)) rows always suffice and serve
/// as the cap (bounded by hard_cap).
///
/// Throws TruncationError if the cap is reached with more than tail_tol left.
Alg1Result algorithm1_aaoi(const ThresholdPolicy& pol, double rho, double tail_tol = 1e-10,
                           Index hard_cap = 1'000'000);

// AoI chain p_u -> state 1, else n -> n+1, with the last state absorbing its own overflow.
Eigen::MatrixXd baseline_transition_matrix(double p_u, Index states);

// Interval chain over states 1..force_thr.
Eigen::MatrixXd threshold_transition_matrix(const ThresholdPolicy& pol);

// Joint (AoI, interval) chain with AoI capped at aoi_cap; state (j, i) maps
// to index (j-1)*force_thr + (i-1).
Eigen::MatrixXd joint_transition_matrix(const ThresholdPolicy& pol, double rho, Index aoi_cap);

/// Stationary distribution by power iteration on a doubling schedule: the
/// iterate is pushed through P, P^2, P^4, ... so slowly mixing chains
/// converge in a logarithmic number of products. Starts from the uniform
/// law and stops once successive iterates differ by less than tol
/// (max-norm); the fixed point is then checked against P itself.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> brute_force_steady_state(
    const Eigen::MatrixBase<Derived>& transition, typename Derived::Scalar tol, int max_squarings = 64) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  if (transition.rows() != transition.cols() || transition.rows() == 0)
    throw DomainError("brute_force_steady_state: transition matrix must be square and nonempty");
  if ((transition.array() < Scalar(0)).any())
    throw DomainError("brute_force_steady_state: negative transition probability");
  const auto row_sums = transition.rowwise().sum();
  const Scalar row_tol = std::max(Scalar(1e-12), Scalar(64) * std::numeric_limits<Scalar>::epsilon());
  if (((row_sums.array() - Scalar(1)).abs() > row_tol).any())
    throw DomainError("brute_force_steady_state: rows must sum to 1");

  const Eigen::Index n = transition.rows();
  Matrix power = transition;
  RowVector pi = RowVector::Constant(n, Scalar(1) / Scalar(n));
  Scalar diff = std::numeric_limits<Scalar>::infinity();
  for (int k = 0; k < max_squarings; ++k) {
    RowVector next = pi * power;
    next /= next.sum();
    diff = (next - pi).cwiseAbs().maxCoeff();
    pi.swap(next);
    if (diff < tol) {
      const Scalar residual = (pi * transition - pi).cwiseAbs().maxCoeff();
      if (residual > Scalar(10) * tol)
        throw ConvergenceError(static_cast<double>(residual),
                               "brute_force_steady_state: stalled on a periodic component");
      return pi.transpose();
    }
    power = (power * power).eval();
  }
  throw ConvergenceError(static_cast<double>(diff), "brute_force_steady_state: no convergence");
}

}  // namespace aoi
