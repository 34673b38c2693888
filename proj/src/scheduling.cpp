#include "aoi/scheduling.hpp"

#include <algorithm>

#include "aoi/analysis.hpp"
#include "aoi/errors.hpp"

namespace aoi {

void ThresholdPolicy::validate() const {
  if (sleep_thr < 0) throw ConfigError("sleep_thr must be >= 0");
  if (force_thr < 1) throw ConfigError("force_thr must be >= 1");
  if (sleep_thr >= force_thr) throw ConfigError("sleep_thr must be < force_thr");
  if (!(base_prob > 0.0 && base_prob < 1.0)) throw ConfigError("base_prob must lie in (0, 1)");
}

double activity_prob_at(Index interval, const ThresholdPolicy& pol) {
  if (interval < 1 || interval > pol.force_thr)
    throw DomainError("activity_prob_at: interval outside [1, force_thr]");
  if (interval == pol.force_thr) return 1.0;
  if (interval <= pol.sleep_thr) return 0.0;
  return pol.base_prob;
}

IntervalState cold_start_intervals(Index n_users) {
  IntervalState s;
  s.intervals.setOnes(n_users);
  return s;
}

IntervalState stationary_intervals(Index n_users, const ThresholdPolicy& pol, CounterRng& rng) {
  const SteadyStateDist dist = threshold_steady_state(pol);
  std::vector<double> cdf(static_cast<std::size_t>(dist.probs.size()));
  double acc = 0.0;
  for (Index k = 0; k < dist.probs.size(); ++k) cdf[static_cast<std::size_t>(k)] = acc += dist.probs(k);
  cdf.back() = 1.0;

  IntervalState s;
  s.intervals.resize(n_users);
  for (Index n = 0; n < n_users; ++n) {
    const double u = uniform01(rng);
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    s.intervals(n) = static_cast<Index>(it - cdf.begin()) + 1;
  }
  return s;
}

ActivityVector advance(IntervalState& state, const ThresholdPolicy& pol, CounterRng& rng) {
  ActivityVector act(state.intervals.size());
  for (Index n = 0; n < state.intervals.size(); ++n) {
    Index& t = state.intervals(n);
    const bool on = uniform01(rng) < activity_prob_at(t, pol);
    act(n) = on;
    t = on ? 1 : t + 1;
  }
  return act;
}

std::pair<IntervalState, ActivityVector> policy_step(const IntervalState& state, const ThresholdPolicy& pol,
                                                     CounterRng& rng) {
  IntervalState next = state;
  ActivityVector act = advance(next, pol, rng);
  return {std::move(next), std::move(act)};
}

}  // namespace aoi
