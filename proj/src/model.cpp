#include "aoi/model.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "aoi/errors.hpp"

namespace aoi {

void SystemConfig::validate() const {
  if (n_users < 1) throw ConfigError("n_users must be >= 1");
  if (!(activity_prob > 0.0 && activity_prob <= 1.0))
    throw ConfigError("activity_prob must lie in (0, 1]");
  if (pilot_len < 1) throw ConfigError("pilot_len must be >= 1");
  if (amp_iters < 1) throw ConfigError("amp_iters must be >= 1");
  if (!std::isfinite(per_user_snr_db)) throw ConfigError("per_user_snr_db must be finite");
}

double snr_to_xi(double snr_db, Index pilot_len) {
  return static_cast<double>(pilot_len) * std::pow(10.0, snr_db / 10.0);
}

ActivityVector sample_activity(Index n_users, double prob, CounterRng& rng) {
  ActivityVector act(n_users);
  for (Index n = 0; n < n_users; ++n) act(n) = uniform01(rng) < prob;
  return act;
}

ActivityVector sample_activity(const SystemConfig& cfg, CounterRng& rng) {
  return sample_activity(cfg.n_users, cfg.activity_prob, rng);
}

ComplexMatrix sample_pilots(Index pilot_len, Index n_users, CounterRng& rng) {
  ComplexMatrix a(pilot_len, n_users);
  const double var = 1.0 / static_cast<double>(pilot_len);
  for (Index n = 0; n < n_users; ++n) {
    for (Index l = 0; l < pilot_len; ++l) a(l, n) = complex_normal(rng, var);
    const double norm = a.col(n).norm();
    if (norm > 0.0) {
      a.col(n) /= norm;
    } else {
      a(0, n) = 1.0;
    }
  }
  return a;
}

ComplexVector sample_gains(Index n_users, CounterRng& rng) {
  ComplexVector h(n_users);
  for (Index n = 0; n < n_users; ++n) h(n) = complex_normal(rng, 1.0);
  return h;
}

ChannelRealization sample_channels(const SystemConfig& cfg, CounterRng& rng) {
  cfg.validate();
  ChannelRealization chan;
  chan.gains = sample_gains(cfg.n_users, rng);
  chan.pilot_matrix = sample_pilots(cfg.pilot_len, cfg.n_users, rng);
  return chan;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("bad value for '" + std::string(key) + "': '" + std::string(text) + "'");
  return value;
}

}  // namespace

KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    kv[std::string(key)] = std::string(trim(line.substr(eq + 1)));
  }
  return kv;
}

KeyValues load_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_key_values(buf.str());
}

void apply_key_values(const KeyValues& kv, SystemConfig& cfg) {
  auto get = [&](std::string_view key) -> const std::string* {
    const auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (const auto* v = get("n_users")) cfg.n_users = parse_number<Index>("n_users", *v);
  if (const auto* v = get("activity_prob")) cfg.activity_prob = parse_number<double>("activity_prob", *v);
  if (const auto* v = get("pilot_len")) cfg.pilot_len = parse_number<Index>("pilot_len", *v);
  if (const auto* v = get("per_user_snr_db"))
    cfg.per_user_snr_db = parse_number<double>("per_user_snr_db", *v);
  if (const auto* v = get("amp_iters")) cfg.amp_iters = parse_number<Index>("amp_iters", *v);
  if (const auto* v = get("seed")) cfg.seed = parse_number<std::uint64_t>("seed", *v);
}

}  // namespace aoi
