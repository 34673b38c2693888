#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "aoi/rng.hpp"

namespace aoi {

using Index = Eigen::Index;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

struct SystemConfig {
  Index n_users = 2000;
  double activity_prob = 0.05;
  Index pilot_len = 200;
  double per_user_snr_db = 20.0;
  Index amp_iters = 25;
  std::uint64_t seed = 1;

  // Throws ConfigError when an invariant is violated.
  void validate() const;
};

// Pilot energy scale xi. The SNR is per pilot symbol: a unit-norm pilot
// spread over L symbols carries xi/L per symbol against unit noise variance,
// so xi = L * 10^(snr_db/10).
double snr_to_xi(double snr_db, Index pilot_len);

// a_n per user; length n_users.
using ActivityVector = Eigen::Array<bool, Eigen::Dynamic, 1>;

struct ChannelRealization {
  ComplexVector gains;         // h_n, length N
  ComplexMatrix pilot_matrix;  // A, L x N with unit-norm columns
};

ActivityVector sample_activity(const SystemConfig& cfg, CounterRng& rng);

// Activity with an explicit per-user probability; same draw order as above.
ActivityVector sample_activity(Index n_users, double prob, CounterRng& rng);

// Entries CN(0, 1/L), then every column rescaled to unit norm.
ComplexMatrix sample_pilots(Index pilot_len, Index n_users, CounterRng& rng);

// h_n ~ CN(0, 1): unit-variance Rayleigh fading, path loss fixed to 1.
ComplexVector sample_gains(Index n_users, CounterRng& rng);

ChannelRealization sample_channels(const SystemConfig& cfg, CounterRng& rng);

inline Index count_active(const ActivityVector& act) { return act.cast<Index>().sum(); }

/// Flat "key = value" text. Blank lines and lines starting with '#' are
/// skipped; surrounding whitespace is trimmed. Duplicate keys: last wins.
using KeyValues = std::map<std::string, std::string, std::less<>>;
KeyValues parse_key_values(std::string_view text);
KeyValues load_key_values(const std::filesystem::path& path);

// Applies the SystemConfig keys (n_users, activity_prob, pilot_len,
// per_user_snr_db, amp_iters, seed) found in kv; other keys are ignored.
void apply_key_values(const KeyValues& kv, SystemConfig& cfg);

}  // namespace aoi
