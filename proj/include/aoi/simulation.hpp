#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <variant>
#include <vector>

#include "aoi/access.hpp"
#include "aoi/scheduling.hpp"

namespace aoi {

struct GrantBased {};
struct GrantFree {};
// Every attempt succeeds independently with probability rho; decouples the
// AoI dynamics from the physical layer.
struct FixedRho {
  double rho = 1.0;
};

using ProtocolSpec = std::variant<GrantBased, GrantFree, FixedRho>;
using PolicySpec = std::variant<BernoulliPolicy, ThresholdPolicy>;

ProtocolTag protocol_tag(const ProtocolSpec& protocol);

// Per-user AoI after each slot's update. sum_aoi totals aoi over counted
// slots and users.
struct AoiLedger {
  Eigen::Array<Index, Eigen::Dynamic, 1> aoi;
  double sum_aoi = 0.0;
  Index slots_counted = 0;

  // Every user starts as if it had just updated.
  static AoiLedger fresh(Index n_users);
  void reset_accumulators();
};

// Successful users drop to 1, all others age by one slot. Returns the slot's AoI total.
Index step_aoi(AoiLedger& ledger, const SlotOutcome& outcome);

struct SimReport {
  double aaoi_estimate = 0.0;
  double ci95 = 0.0;  // half-width, batch means over counted slots
  double empirical_rho = 0.0;
  double empirical_activation = 0.0;
  Index slots = 0;    // counted slots
  std::uint64_t seed = 0;
  Index burn_in = 0;
  Index n_users = 0;
  std::int64_t attempts = 0;
  std::int64_t successes = 0;
};

// Slot-weighted pooling of replicas with the same n_users.
SimReport merge(const SimReport& a, const SimReport& b);

struct SimOptions {
  std::optional<Index> burn_in;  // default: 10 x predicted AAoI, at most slots/2
  bool cold_start = false;       // threshold policy: all intervals 1 instead of stationary draws
  unsigned threads = 0;          // grant-free slot workers; 0 = hardware concurrency
  std::ostream* slot_trace = nullptr;  // rows: slot,active_count,success_count,mean_aoi
  std::ostream* amp_trace = nullptr;   // rows: slot,iteration,tau_sq,mse
};

// AAoI predicted from closed forms (or a short pilot run for grant-free).
double predicted_aaoi(const SystemConfig& cfg, const ProtocolSpec& protocol, const PolicySpec& policy);

// Runs `slots` slots in total: the first burn_in only evolve state, the rest
// are averaged. Reproducible from cfg.seed; per-slot random substreams make
// the result independent of the thread count.
SimReport run_simulation(const SystemConfig& cfg, const ProtocolSpec& protocol, const PolicySpec& policy,
                         Index slots, const SimOptions& options = {});

// Two-sided 95% Student-t quantile.
double student_t95(Index dof);

}  // namespace aoi
