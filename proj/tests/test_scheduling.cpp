#include <doctest.h>

#include <cmath>

#include "aoi/analysis.hpp"
#include "aoi/errors.hpp"
#include "aoi/scheduling.hpp"

using namespace aoi;

TEST_CASE("activation probability by interval") {
  const ThresholdPolicy pol{2, 5, 0.3};
  CHECK(activity_prob_at(1, pol) == 0.0);
  CHECK(activity_prob_at(2, pol) == 0.0);
  CHECK(activity_prob_at(3, pol) == 0.3);
  CHECK(activity_prob_at(4, pol) == 0.3);
  CHECK(activity_prob_at(5, pol) == 1.0);
  CHECK_THROWS_AS(activity_prob_at(0, pol), DomainError);
  CHECK_THROWS_AS(activity_prob_at(6, pol), DomainError);
}

TEST_CASE("policy validation") {
  CHECK_THROWS_AS((ThresholdPolicy{3, 3, 0.5}.validate()), ConfigError);
  CHECK_THROWS_AS((ThresholdPolicy{-1, 3, 0.5}.validate()), ConfigError);
  CHECK_THROWS_AS((ThresholdPolicy{0, 3, 0.0}.validate()), ConfigError);
  CHECK_THROWS_AS((ThresholdPolicy{0, 3, 1.0}.validate()), ConfigError);
  CHECK_NOTHROW((ThresholdPolicy{0, 1, 0.5}.validate()));
}

TEST_CASE("policy step at the thresholds") {
  const ThresholdPolicy pol{2, 5, 0.3};
  CounterRng rng(4);

  IntervalState forced;
  forced.intervals.setConstant(50, 5);
  auto [next, act] = policy_step(forced, pol, rng);
  CHECK(act.all());
  CHECK((next.intervals == 1).all());
  CHECK((forced.intervals == 5).all());  // input untouched

  IntervalState asleep;
  asleep.intervals.setConstant(50, 2);
  auto [next2, act2] = policy_step(asleep, pol, rng);
  CHECK(!act2.any());
  CHECK((next2.intervals == 3).all());
}

TEST_CASE("deterministic period has the target activation") {
  const ThresholdPolicy pol{19, 20, 0.05};
  const Index n = 1000;
  const Index slots = 100000;
  auto init = substream(1, Stream::init, 0);
  IntervalState st = stationary_intervals(n, pol, init);
  double active = 0.0;
  for (Index t = 0; t < slots; ++t) {
    auto rng = substream(1, Stream::activity, t);
    active += static_cast<double>(count_active(advance(st, pol, rng)));
  }
  CHECK(std::abs(active / (static_cast<double>(n) * slots) - 0.05) <= 0.002);
}

TEST_CASE("intervals never pass force_thr") {
  CounterRng prng(99);
  for (int k = 0; k < 20; ++k) {
    const Index force = 1 + static_cast<Index>(uniform01(prng) * 30);
    const Index sleep = static_cast<Index>(uniform01(prng) * force);
    const ThresholdPolicy pol{sleep, force, 0.05 + 0.9 * uniform01(prng)};
    IntervalState st = cold_start_intervals(200);
    for (Index t = 0; t < 300; ++t) {
      auto rng = substream(2 + k, Stream::activity, t);
      advance(st, pol, rng);
      REQUIRE(st.intervals.maxCoeff() <= force);
      REQUIRE(st.intervals.minCoeff() >= 1);
    }
  }
}

TEST_CASE("long-run activation matches the stationary law") {
  for (const ThresholdPolicy pol : {ThresholdPolicy{2, 5, 0.3}, ThresholdPolicy{0, 40, 0.04},
                                    ThresholdPolicy{10, 30, 0.2}}) {
    const double target = effective_activation(pol);
    const Index n = 500;
    const Index slots = 20000;
    auto init = substream(5, Stream::init, 0);
    IntervalState st = stationary_intervals(n, pol, init);
    double active = 0.0;
    for (Index t = 0; t < slots; ++t) {
      auto rng = substream(5, Stream::activity, t);
      active += static_cast<double>(count_active(advance(st, pol, rng)));
    }
    const double rate = active / (static_cast<double>(n) * slots);
    // Users are independent; per-user activations are positively spaced so the
    // binomial sd is conservative.
    const double sd = std::sqrt(target * (1 - target) / (static_cast<double>(n) * slots));
    CHECK(std::abs(rate - target) < 3.0 * sd);
  }
}

TEST_CASE("degenerate thresholds recover memoryless activation") {
  const ThresholdPolicy pol{0, 361, 0.05};
  CHECK(effective_activation(pol) == doctest::Approx(0.05).epsilon(1e-6));

  const Index n = 400;
  const Index slots = 20000;
  auto init = substream(6, Stream::init, 0);
  IntervalState st = stationary_intervals(n, pol, init);
  double active = 0.0;
  // Intervals observed right before activation follow Geometric(0.05).
  double gap_sum = 0.0;
  double gap_count = 0.0;
  for (Index t = 0; t < slots; ++t) {
    auto rng = substream(6, Stream::activity, t);
    const Eigen::Array<Index, Eigen::Dynamic, 1> before = st.intervals;
    const auto act = advance(st, pol, rng);
    active += static_cast<double>(count_active(act));
    for (Index u = 0; u < n; ++u) {
      if (act(u)) {
        gap_sum += static_cast<double>(before(u));
        gap_count += 1.0;
      }
    }
  }
  CHECK(std::abs(active / (static_cast<double>(n) * slots) - 0.05) < 4.0 * std::sqrt(0.05 * 0.95 / (n * slots)));
  CHECK(gap_sum / gap_count == doctest::Approx(20.0).epsilon(0.02));
}

TEST_CASE("stationary draws follow the closed form") {
  const ThresholdPolicy pol{2, 6, 0.4};
  const auto dist = threshold_steady_state(pol);
  auto rng = substream(7, Stream::init, 0);
  const Index n = 200000;
  const IntervalState st = stationary_intervals(n, pol, rng);
  for (Index k = 1; k <= 6; ++k) {
    const double freq = (st.intervals == k).cast<double>().sum() / static_cast<double>(n);
    const double p = dist.probs(k - 1);
    CHECK(std::abs(freq - p) < 4.0 * std::sqrt(p * (1 - p) / n));
  }
}

TEST_CASE("cold start") {
  const auto st = cold_start_intervals(7);
  CHECK(st.intervals.size() == 7);
  CHECK((st.intervals == 1).all());
}
