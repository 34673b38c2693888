#include "aoi/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aoi {

double SteadyStateDist::mean_state() const {
  CompensatedSum<double> acc;
  for (Index k = 0; k < probs.size(); ++k) acc.add(static_cast<double>(k + 1) * probs(k));
  return acc.value();
}

double baseline_aaoi(double eps, double rho) {
  const double p_u = eps * rho;
  if (!(eps >= 0.0 && rho >= 0.0) || !(p_u <= 1.0))
    throw DomainError("baseline_aaoi: eps*rho must lie in [0, 1]");
  if (p_u == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / p_u;
}

SteadyStateDist baseline_steady_state(double p_u, double tail_tol) {
  if (!(p_u > 0.0 && p_u <= 1.0)) throw DomainError("baseline_steady_state: p_u must lie in (0, 1]");
  if (!(tail_tol > 0.0 && tail_tol < 1.0)) throw DomainError("baseline_steady_state: tail_tol must lie in (0, 1)");
  const double p_e = 1.0 - p_u;
  Index states = 1;
  if (p_e > 0.0) states = static_cast<Index>(std::ceil(std::log(tail_tol) / std::log(p_e)));
  states = std::max<Index>(states, 1);

  SteadyStateDist dist;
  dist.probs.resize(states);
  double term = p_u;
  for (Index n = 0; n < states; ++n) {
    dist.probs(n) = term;
    term *= p_e;
  }
  dist.truncation = states;
  dist.tail_mass_bound = std::pow(p_e, static_cast<double>(states));
  return dist;
}

SteadyStateDist threshold_steady_state(const ThresholdPolicy& pol) {
  pol.validate();
  const double keep = 1.0 - pol.base_prob;

  // 1 + sleep_thr + sum_{i=1}^{force-sleep-1} keep^i
  CompensatedSum<double> denom;
  denom.add(1.0 + static_cast<double>(pol.sleep_thr));
  double term = 1.0;
  for (Index i = 1; i <= pol.force_thr - pol.sleep_thr - 1; ++i) {
    term *= keep;
    denom.add(term);
  }

  SteadyStateDist dist;
  dist.probs.resize(pol.force_thr);
  dist.probs(0) = 1.0 / denom.value();
  for (Index n = 2; n <= pol.force_thr; ++n) {
    const double ratio = n <= pol.sleep_thr + 1 ? 1.0 : keep;
    dist.probs(n - 1) = ratio * dist.probs(n - 2);
  }
  dist.truncation = pol.force_thr;
  dist.tail_mass_bound = 0.0;
  return dist;
}

double effective_activation(const ThresholdPolicy& pol) { return threshold_steady_state(pol).probs(0); }

std::optional<double> solve_base_prob(Index sleep_thr, Index force_thr, double target_eps, double tol) {
  ThresholdPolicy pol{sleep_thr, force_thr, 0.5};
  pol.validate();
  if (sleep_thr == force_thr - 1) {
    if (std::abs(1.0 / static_cast<double>(force_thr) - target_eps) <= tol) return target_eps;
    return std::nullopt;
  }
  // Activation increases in base_prob from 1/force (p -> 0) to 1/(1+sleep) (p -> 1).
  const double lo_act = 1.0 / static_cast<double>(force_thr);
  const double hi_act = 1.0 / static_cast<double>(1 + sleep_thr);
  // At either end the policy degenerates to a deterministic period already
  // covered by the sleep_thr = force_thr - 1 pair.
  if (target_eps <= lo_act + tol || target_eps >= hi_act - tol) return std::nullopt;

  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    pol.base_prob = 0.5 * (lo + hi);
    if (pol.base_prob <= 0.0 || pol.base_prob >= 1.0) break;
    const double act = effective_activation(pol);
    if (std::abs(act - target_eps) <= tol) return pol.base_prob;
    (act < target_eps ? lo : hi) = pol.base_prob;
  }
  return std::nullopt;
}

std::vector<ThresholdPolicy> solve_threshold_pairs(double target_eps, Index theta_max, double tol) {
  if (!(target_eps > 0.0 && target_eps < 1.0))
    throw DomainError("solve_threshold_pairs: target_eps must lie in (0, 1)");
  if (!(tol > 0.0)) throw DomainError("solve_threshold_pairs: tol must be > 0");

  std::vector<ThresholdPolicy> pairs;
  for (Index force = 1; force <= theta_max; ++force) {
    for (Index sleep = 0; sleep < force; ++sleep) {
      if (const auto base = solve_base_prob(sleep, force, target_eps, tol))
        pairs.push_back(ThresholdPolicy{sleep, force, *base});
    }
  }
  return pairs;
}

Alg1Result algorithm1_aaoi(const ThresholdPolicy& pol, double rho, double tail_tol, Index hard_cap) {
  pol.validate();
  if (!(rho > 0.0 && rho <= 1.0)) throw DomainError("algorithm1_aaoi: rho must lie in (0, 1]");
  if (!(tail_tol > 0.0 && tail_tol < 1.0)) throw DomainError("algorithm1_aaoi: tail_tol must lie in (0, 1)");

  const Index force = pol.force_thr;
  const Eigen::VectorXd stationary = threshold_steady_state(pol).probs;
  Eigen::VectorXd p(force);
  for (Index i = 1; i <= force; ++i) p(i - 1) = activity_prob_at(i, pol);

  double blocks = 1.0;
  if (rho < 1.0) blocks = std::max(1.0, std::ceil(std::log(tail_tol) / std::log1p(-rho)));
  const double cap_d = std::min(static_cast<double>(force) * blocks, static_cast<double>(hard_cap));
  const Index cap = std::max<Index>(1, static_cast<Index>(cap_d));

  std::vector<double> rows;
  rows.reserve(static_cast<std::size_t>(std::min<Index>(cap, 4096) * force));

  Eigen::VectorXd prev = Eigen::VectorXd::Zero(force);
  Eigen::VectorXd row(force);
  {
    CompensatedSum<double> first;
    for (Index i = 0; i < force; ++i) first.add(stationary(i) * p(i) * rho);
    prev(0) = first.value();
  }

  CompensatedSum<double> mass;
  CompensatedSum<double> moment;
  Index j = 1;
  double remaining = 1.0;
  for (;;) {
    rows.insert(rows.end(), prev.data(), prev.data() + force);
    const double row_mass = compensated_sum(prev);
    mass.add(row_mass);
    moment.add(static_cast<double>(j) * row_mass);
    remaining = 1.0 - mass.value();
    if (remaining <= tail_tol || j >= cap) break;

    CompensatedSum<double> failed;
    for (Index n = pol.sleep_thr; n < force; ++n) failed.add(p(n) * (1.0 - rho) * prev(n));
    row(0) = failed.value();
    for (Index i = 1; i < force; ++i) row(i) = (1.0 - p(i - 1)) * prev(i - 1);
    prev.swap(row);
    ++j;
  }

  if (remaining > tail_tol)
    throw TruncationError(remaining, "algorithm1_aaoi: horizon cap reached before the tail fell below tail_tol");

  Alg1Result out;
  out.aaoi = moment.value();
  out.horizon = j;
  out.tail_mass = std::max(0.0, remaining);
  out.table.table = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      rows.data(), j, force);
  return out;
}

Eigen::MatrixXd baseline_transition_matrix(double p_u, Index states) {
  if (states < 1) throw DomainError("baseline_transition_matrix: need at least one state");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(states, states);
  for (Index n = 0; n < states; ++n) {
    m(n, 0) += p_u;
    m(n, std::min(n + 1, states - 1)) += 1.0 - p_u;
  }
  return m;
}

Eigen::MatrixXd threshold_transition_matrix(const ThresholdPolicy& pol) {
  pol.validate();
  const Index force = pol.force_thr;
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(force, force);
  for (Index i = 1; i <= force; ++i) {
    const double a = activity_prob_at(i, pol);
    q(i - 1, 0) += a;
    if (i < force) q(i - 1, i) += 1.0 - a;
  }
  return q;
}

Eigen::MatrixXd joint_transition_matrix(const ThresholdPolicy& pol, double rho, Index aoi_cap) {
  pol.validate();
  if (aoi_cap < 1) throw DomainError("joint_transition_matrix: aoi_cap must be >= 1");
  const Index force = pol.force_thr;
  const Index size = aoi_cap * force;
  auto idx = [force](Index j, Index i) { return (j - 1) * force + (i - 1); };
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size, size);
  for (Index j = 1; j <= aoi_cap; ++j) {
    const Index next_j = std::min(j + 1, aoi_cap);
    for (Index i = 1; i <= force; ++i) {
      const double a = activity_prob_at(i, pol);
      const Index from = idx(j, i);
      m(from, idx(1, 1)) += a * rho;
      m(from, idx(next_j, 1)) += a * (1.0 - rho);
      if (i < force) m(from, idx(next_j, i + 1)) += 1.0 - a;
    }
  }
  return m;
}

}  // namespace aoi
