#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "aoi/simulation.hpp"

namespace aoi::cli {

enum class SweepVariable { pilot_len, activity_prob, n_users, threshold_pair };

SweepVariable parse_sweep_variable(const std::string& name);
const char* to_string(SweepVariable v);

struct SweepSpec {
  SweepVariable variable = SweepVariable::pilot_len;
  std::vector<double> values;           // pilot_len / activity_prob / n_users
  std::vector<ThresholdPolicy> pairs;   // threshold_pair; a no-threshold baseline point is prepended
  SystemConfig base_config;
  std::vector<ProtocolSpec> protocols;
  PolicySpec policy = BernoulliPolicy{};  // numeric sweeps only
  bool analysis_overlay = false;
  Index slots = 0;  // 0 skips simulation rows
  std::optional<Index> burn_in;
  unsigned workers = 0;  // 0 = hardware concurrency

  void validate() const;
};

// One sweep/simulate output row; columns follow csv_header().
struct CsvRow {
  std::string variable;
  std::string value;
  std::string protocol;
  std::string policy;
  std::string source;  // "simulation" or "analysis"
  double aaoi = 0.0;
  double ci95 = 0.0;
  double rho = 0.0;
  double activation = 0.0;
  Index slots = 0;
  std::uint64_t seed = 0;
  std::string error;
};

std::string csv_header();
std::string format_row(const CsvRow& row);
std::string format_double(double x);

std::string protocol_label(const ProtocolSpec& protocol);
std::string policy_label(const PolicySpec& policy);

// Rows in sweep order: for each point, for each protocol, the simulation row
// then the analysis row. Point failures become rows with `error` set.
std::vector<CsvRow> run_sweep(const SweepSpec& spec);

// "a,b,c" or "start:stop:step" (inclusive of stop within half a step).
std::vector<double> parse_values(const std::string& text);

// "sleep:force[:base]" items separated by commas.
std::vector<ThresholdPolicy> parse_pairs(const std::string& text, double target_eps);

// Command-line entry point; returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace aoi::cli
