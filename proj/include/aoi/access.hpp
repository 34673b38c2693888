#pragma once

#include <vector>

#include "aoi/model.hpp"

namespace aoi {

enum class ProtocolTag { grant_based, grant_free, fixed_rho };

const char* to_string(ProtocolTag tag);

// Result of one access slot. Both index lists are sorted ascending and
// succeeded is always a subset of active.
struct SlotOutcome {
  std::vector<Index> active;
  std::vector<Index> succeeded;
  ProtocolTag protocol_tag = ProtocolTag::grant_based;
};

std::vector<Index> active_indices(const ActivityVector& act);

// Slotted ALOHA contention: each active user picks one of pilot_len
// orthogonal sequences; a sequence chosen by exactly one user succeeds and
// any collision destroys every transmission on that sequence.
SlotOutcome grant_based_round(Index pilot_len, const ActivityVector& act, CounterRng& rng);

// Probability that a tagged active user is not collided with:
// (1 - eps/L)^(N-1). Throws DomainError when eps/L > 1 or arguments are invalid.
double grant_based_rho(Index n_users, Index pilot_len, double eps);

// Each active user succeeds independently with probability rho.
SlotOutcome fixed_rho_round(double rho, const ActivityVector& act, CounterRng& rng);

}  // namespace aoi
