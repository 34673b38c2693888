#pragma once

#include <utility>

#include "aoi/model.hpp"

namespace aoi {

// Sleep/forced-active policy on the slots elapsed since a user's last
// activation. Intervals <= sleep_thr never transmit, force_thr always does,
// anything in between transmits with base_prob.
struct ThresholdPolicy {
  Index sleep_thr = 0;
  Index force_thr = 1;
  double base_prob = 0.5;

  void validate() const;
};

// Plain memoryless activation with SystemConfig::activity_prob.
struct BernoulliPolicy {};

// Per-user interval T, always within [1, force_thr].
struct IntervalState {
  Eigen::Array<Index, Eigen::Dynamic, 1> intervals;
};

double activity_prob_at(Index interval, const ThresholdPolicy& pol);

IntervalState cold_start_intervals(Index n_users);

// Independent draws from the stationary interval law of the policy.
IntervalState stationary_intervals(Index n_users, const ThresholdPolicy& pol, CounterRng& rng);

// In-place slot update: one uniform per user decides activation; active
// users reset to 1, the rest increment.
ActivityVector advance(IntervalState& state, const ThresholdPolicy& pol, CounterRng& rng);

std::pair<IntervalState, ActivityVector> policy_step(const IntervalState& state, const ThresholdPolicy& pol,
                                                     CounterRng& rng);

}  // namespace aoi
