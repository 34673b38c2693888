#include "aoi/access.hpp"

#include <cmath>
#include <random>

#include "aoi/errors.hpp"

namespace aoi {

const char* to_string(ProtocolTag tag) {
  switch (tag) {
    case ProtocolTag::grant_based: return "grant_based";
    case ProtocolTag::grant_free: return "grant_free";
    case ProtocolTag::fixed_rho: return "fixed_rho";
  }
  return "unknown";
}

std::vector<Index> active_indices(const ActivityVector& act) {
  std::vector<Index> idx;
  for (Index n = 0; n < act.size(); ++n) {
    if (act(n)) idx.push_back(n);
  }
  return idx;
}

SlotOutcome grant_based_round(Index pilot_len, const ActivityVector& act, CounterRng& rng) {
  if (pilot_len < 1) throw ConfigError("grant_based_round: pilot_len must be >= 1");
  SlotOutcome out;
  out.protocol_tag = ProtocolTag::grant_based;
  out.active = active_indices(act);

  std::uniform_int_distribution<Index> pick(0, pilot_len - 1);
  std::vector<Index> choice(out.active.size());
  std::vector<int> load(static_cast<std::size_t>(pilot_len), 0);
  for (std::size_t k = 0; k < out.active.size(); ++k) {
    choice[k] = pick(rng);
    ++load[static_cast<std::size_t>(choice[k])];
  }
  for (std::size_t k = 0; k < out.active.size(); ++k) {
    if (load[static_cast<std::size_t>(choice[k])] == 1) out.succeeded.push_back(out.active[k]);
  }
  return out;
}

double grant_based_rho(Index n_users, Index pilot_len, double eps) {
  if (n_users < 1 || pilot_len < 1) throw DomainError("grant_based_rho: n_users and pilot_len must be >= 1");
  if (!(eps >= 0.0)) throw DomainError("grant_based_rho: eps must be >= 0");
  const double q = eps / static_cast<double>(pilot_len);
  if (q > 1.0) throw DomainError("grant_based_rho: eps/pilot_len exceeds 1");
  return std::pow(1.0 - q, static_cast<double>(n_users - 1));
}

SlotOutcome fixed_rho_round(double rho, const ActivityVector& act, CounterRng& rng) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("fixed_rho_round: rho must lie in [0, 1]");
  SlotOutcome out;
  out.protocol_tag = ProtocolTag::fixed_rho;
  out.active = active_indices(act);
  for (const Index n : out.active) {
    if (uniform01(rng) < rho) out.succeeded.push_back(n);
  }
  return out;
}

}  // namespace aoi
