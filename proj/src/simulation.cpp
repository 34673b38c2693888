#include "aoi/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>

#include "aoi/amp.hpp"
#include "aoi/analysis.hpp"
#include "aoi/errors.hpp"

namespace aoi {

namespace {

// Slots reserved for the grant-free pilot run, far from any real slot index.
constexpr std::uint64_t kPilotRunOffset = std::uint64_t{1} << 62;
constexpr Index kPilotRunSlots = 16;

template <typename Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
  if (workers == 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        fn(k);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  if (error) std::rethrow_exception(error);
}

double activation_of(const SystemConfig& cfg, const PolicySpec& policy) {
  if (const auto* pol = std::get_if<ThresholdPolicy>(&policy)) return effective_activation(*pol);
  return cfg.activity_prob;
}

void validate_policy(const PolicySpec& policy) {
  if (const auto* pol = std::get_if<ThresholdPolicy>(&policy)) pol->validate();
}

}  // namespace

ProtocolTag protocol_tag(const ProtocolSpec& protocol) {
  if (std::holds_alternative<GrantBased>(protocol)) return ProtocolTag::grant_based;
  if (std::holds_alternative<GrantFree>(protocol)) return ProtocolTag::grant_free;
  return ProtocolTag::fixed_rho;
}

AoiLedger AoiLedger::fresh(Index n_users) {
  AoiLedger ledger;
  ledger.aoi.setOnes(n_users);
  return ledger;
}

void AoiLedger::reset_accumulators() {
  sum_aoi = 0.0;
  slots_counted = 0;
}

Index step_aoi(AoiLedger& ledger, const SlotOutcome& outcome) {
  ledger.aoi += 1;
  for (const Index n : outcome.succeeded) {
    if (n < 0 || n >= ledger.aoi.size()) throw ConfigError("step_aoi: user index out of range");
    ledger.aoi(n) = 1;
  }
  const Index total = ledger.aoi.sum();
  ledger.sum_aoi += static_cast<double>(total);
  ++ledger.slots_counted;
  return total;
}

SimReport merge(const SimReport& a, const SimReport& b) {
  if (a.n_users != b.n_users) throw ConfigError("merge: reports cover different populations");
  SimReport out = a;
  out.slots = a.slots + b.slots;
  if (out.slots == 0) return out;
  const double wa = static_cast<double>(a.slots) / static_cast<double>(out.slots);
  const double wb = static_cast<double>(b.slots) / static_cast<double>(out.slots);
  out.aaoi_estimate = wa * a.aaoi_estimate + wb * b.aaoi_estimate;
  out.ci95 = std::hypot(wa * a.ci95, wb * b.ci95);
  out.attempts = a.attempts + b.attempts;
  out.successes = a.successes + b.successes;
  out.empirical_rho = out.attempts > 0 ? static_cast<double>(out.successes) / static_cast<double>(out.attempts) : 0.0;
  out.empirical_activation =
      static_cast<double>(out.attempts) / (static_cast<double>(out.n_users) * static_cast<double>(out.slots));
  return out;
}

double student_t95(Index dof) {
  if (dof < 1) return std::numeric_limits<double>::infinity();
  // Cornish-Fisher expansion around the normal quantile.
  const double z = 1.959963984540054;
  const double v = static_cast<double>(dof);
  const double z3 = z * z * z;
  const double z5 = z3 * z * z;
  const double z7 = z5 * z * z;
  return z + (z3 + z) / (4.0 * v) + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * v * v) +
         (3.0 * z7 + 19.0 * z5 + 17.0 * z3 - 15.0 * z) / (384.0 * v * v * v);
}

double predicted_aaoi(const SystemConfig& cfg, const ProtocolSpec& protocol, const PolicySpec& policy) {
  cfg.validate();
  validate_policy(policy);
  const double eps = activation_of(cfg, policy);

  double rho = 1.0;
  if (const auto* fixed = std::get_if<FixedRho>(&protocol)) {
    rho = fixed->rho;
  } else if (std::holds_alternative<GrantBased>(protocol)) {
    rho = grant_based_rho(cfg.n_users, cfg.pilot_len, eps);
  } else {
    auto pilot_rng = substream(cfg.seed, Stream::pilots, 0);
    const ComplexMatrix pilots = sample_pilots(cfg.pilot_len, cfg.n_users, pilot_rng);
    std::int64_t attempts = 0;
    std::int64_t successes = 0;
    for (Index k = 0; k < kPilotRunSlots; ++k) {
      const auto slot = kPilotRunOffset + static_cast<std::uint64_t>(k);
      auto act_rng = substream(cfg.seed, Stream::activity, slot);
      auto phy_rng = substream(cfg.seed, Stream::channel, slot);
      const auto act = sample_activity(cfg.n_users, eps, act_rng);
      const auto out = grant_free_round(cfg, pilots, act, phy_rng);
      attempts += static_cast<std::int64_t>(out.active.size());
      successes += static_cast<std::int64_t>(out.succeeded.size());
    }
    rho = attempts > 0 ? static_cast<double>(successes) / static_cast<double>(attempts) : 1.0;
  }
  if (rho <= 0.0) return std::numeric_limits<double>::infinity();

  if (const auto* pol = std::get_if<ThresholdPolicy>(&policy)) return algorithm1_aaoi(*pol, rho, 1e-6).aaoi;
  return baseline_aaoi(eps, rho);
}

SimReport run_simulation(const SystemConfig& cfg, const ProtocolSpec& protocol, const PolicySpec& policy,
                         Index slots, const SimOptions& options) {
  cfg.validate();
  validate_policy(policy);
  if (const auto* fixed = std::get_if<FixedRho>(&protocol); fixed && !(fixed->rho >= 0.0 && fixed->rho <= 1.0))
    throw ConfigError("fixed_rho: rho must lie in [0, 1]");
  if (slots < 1) throw ConfigError("run_simulation: slots must be >= 1");

  Index burn_in = 0;
  if (options.burn_in) {
    burn_in = *options.burn_in;
  } else {
    const double predicted = predicted_aaoi(cfg, protocol, policy);
    const Index half = slots / 2;
    burn_in = std::isfinite(predicted) ? std::min<Index>(half, static_cast<Index>(std::ceil(10.0 * predicted))) : half;
  }
  if (burn_in < 0 || burn_in >= slots) throw ConfigError("run_simulation: need slots > burn_in >= 0");

  const Index n_users = cfg.n_users;
  const std::uint64_t seed = cfg.seed;
  const auto* threshold = std::get_if<ThresholdPolicy>(&policy);
  const bool grant_free = std::holds_alternative<GrantFree>(protocol);

  IntervalState intervals;
  if (threshold) {
    auto init_rng = substream(seed, Stream::init, 0);
    intervals = options.cold_start ? cold_start_intervals(n_users)
                                   : stationary_intervals(n_users, *threshold, init_rng);
  }
  ComplexMatrix pilots;
  if (grant_free) {
    auto pilot_rng = substream(seed, Stream::pilots, 0);
    pilots = sample_pilots(cfg.pilot_len, n_users, pilot_rng);
  }

  auto activity_for = [&](Index slot) {
    auto rng = substream(seed, Stream::activity, static_cast<std::uint64_t>(slot));
    return threshold ? advance(intervals, *threshold, rng) : sample_activity(cfg, rng);
  };

  auto outcome_for = [&](Index slot, const ActivityVector& act, std::string* amp_log) {
    const auto s = static_cast<std::uint64_t>(slot);
    if (const auto* fixed = std::get_if<FixedRho>(&protocol)) {
      auto rng = substream(seed, Stream::fixed_rho, s);
      return fixed_rho_round(fixed->rho, act, rng);
    }
    if (!grant_free) {
      auto rng = substream(seed, Stream::contention, s);
      return grant_based_round(cfg.pilot_len, act, rng);
    }
    auto rng = substream(seed, Stream::channel, s);
    AmpTraceSink sink;
    std::ostringstream log;
    if (amp_log) {
      sink = [&log, slot](Index it, double tau_sq, double err) {
        log << slot << ',' << it << ',' << tau_sq << ',' << err << '\n';
      };
    }
    auto out = grant_free_round(cfg, pilots, act, rng, true, sink);
    if (amp_log) *amp_log = log.str();
    return out;
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = grant_free ? (options.threads ? options.threads : hw) : 1u;
  const Index chunk = grant_free ? static_cast<Index>(4 * workers) : 1;

  AoiLedger ledger = AoiLedger::fresh(n_users);
  std::vector<double> slot_means;
  slot_means.reserve(static_cast<std::size_t>(slots - burn_in));
  std::int64_t attempts = 0;
  std::int64_t successes = 0;

  std::vector<ActivityVector> acts(static_cast<std::size_t>(chunk));
  std::vector<SlotOutcome> outs(static_cast<std::size_t>(chunk));
  std::vector<std::string> amp_logs(static_cast<std::size_t>(chunk));
  const bool log_amp = grant_free && options.amp_trace != nullptr;

  for (Index start = 0; start < slots; start += chunk) {
    const Index m = std::min(chunk, slots - start);
    for (Index k = 0; k < m; ++k) acts[static_cast<std::size_t>(k)] = activity_for(start + k);
    parallel_for(static_cast<std::size_t>(m), workers, [&](std::size_t k) {
      outs[k] = outcome_for(start + static_cast<Index>(k), acts[k], log_amp ? &amp_logs[k] : nullptr);
    });
    for (Index k = 0; k < m; ++k) {
      const Index slot = start + k;
      const auto& out = outs[static_cast<std::size_t>(k)];
      if (slot == burn_in) ledger.reset_accumulators();
      const Index total = step_aoi(ledger, out);
      if (slot >= burn_in) {
        attempts += static_cast<std::int64_t>(out.active.size());
        successes += static_cast<std::int64_t>(out.succeeded.size());
        slot_means.push_back(static_cast<double>(total) / static_cast<double>(n_users));
      }
      if (options.slot_trace) {
        *options.slot_trace << slot << ',' << out.active.size() << ',' << out.succeeded.size() << ','
                             << static_cast<double>(total) / static_cast<double>(n_users) << '\n';
      }
      if (log_amp) *options.amp_trace << amp_logs[static_cast<std::size_t>(k)];
    }
  }

  SimReport report;
  report.seed = seed;
  report.burn_in = burn_in;
  report.n_users = n_users;
  report.slots = ledger.slots_counted;
  report.attempts = attempts;
  report.successes = successes;
  report.aaoi_estimate = ledger.sum_aoi / (static_cast<double>(n_users) * static_cast<double>(report.slots));
  report.empirical_rho = attempts > 0 ? static_cast<double>(successes) / static_cast<double>(attempts) : 0.0;
  report.empirical_activation =
      static_cast<double>(attempts) / (static_cast<double>(n_users) * static_cast<double>(report.slots));

  // Batch means: slot averages are autocorrelated over roughly one AAoI.
  const auto counted = static_cast<Index>(slot_means.size());
  const Index batches = std::min(counted, std::clamp<Index>(counted / 1000, 10, 100));
  if (batches >= 2) {
    const Index len = counted / batches;
    Eigen::VectorXd means(batches);
    for (Index b = 0; b < batches; ++b) {
      CompensatedSum<double> acc;
      for (Index k = 0; k < len; ++k) acc.add(slot_means[static_cast<std::size_t>(b * len + k)]);
      means(b) = acc.value() / static_cast<double>(len);
    }
    const double centre = means.mean();
    const double var = (means.array() - centre).square().sum() / static_cast<double>(batches - 1);
    report.ci95 = student_t95(batches - 1) * std::sqrt(var / static_cast<double>(batches));
  }
  return report;
}

}  // namespace aoi
