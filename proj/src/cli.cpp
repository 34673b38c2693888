#include "aoi/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "aoi/analysis.hpp"
#include "aoi/errors.hpp"

namespace aoi::cli {

SweepVariable parse_sweep_variable(const std::string& name) {
  if (name == "pilot_len") return SweepVariable::pilot_len;
  if (name == "activity_prob") return SweepVariable::activity_prob;
  if (name == "n_users") return SweepVariable::n_users;
  if (name == "threshold_pair") return SweepVariable::threshold_pair;
  throw ConfigError("unknown sweep variable '" + name + "'");
}

const char* to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::pilot_len: return "pilot_len";
    case SweepVariable::activity_prob: return "activity_prob";
    case SweepVariable::n_users: return "n_users";
    case SweepVariable::threshold_pair: return "threshold_pair";
  }
  return "unknown";
}

void SweepSpec::validate() const {
  base_config.validate();
  if (protocols.empty()) throw ConfigError("sweep: no protocols selected");
  if (slots < 0) throw ConfigError("sweep: slots must be >= 0");
  if (variable == SweepVariable::threshold_pair) {
    if (pairs.empty()) throw ConfigError("sweep: no threshold pairs");
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      pairs[k].validate();
      if (k > 0) {
        const auto& a = pairs[k - 1];
        const auto& b = pairs[k];
        if (std::pair(a.force_thr, a.sleep_thr) >= std::pair(b.force_thr, b.sleep_thr))
          throw ConfigError("sweep: threshold pairs must be strictly ordered by (force, sleep)");
      }
    }
    return;
  }
  if (values.empty()) throw ConfigError("sweep: no values");
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (!(values[k - 1] < values[k])) throw ConfigError("sweep: values must be strictly increasing");
  }
  if (variable != SweepVariable::activity_prob) {
    for (const double v : values) {
      if (v != std::floor(v) || v < 1.0) throw ConfigError("sweep: values must be positive integers");
    }
  }
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string csv_header() {
  return "variable,value,protocol,policy,source,aaoi,ci95,rho,activation,slots,seed,error";
}

namespace {

std::string sanitize(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

std::string format_row(const CsvRow& r) {
  std::ostringstream os;
  os << r.variable << ',' << r.value << ',' << r.protocol << ',' << r.policy << ',' << r.source << ',';
  if (r.error.empty()) {
    os << format_double(r.aaoi) << ',' << format_double(r.ci95) << ',' << format_double(r.rho) << ','
       << format_double(r.activation) << ',' << r.slots << ',';
  } else {
    os << ",,,," << r.slots << ',';
  }
  os << r.seed << ',' << sanitize(r.error);
  return os.str();
}

std::string protocol_label(const ProtocolSpec& protocol) {
  if (const auto* f = std::get_if<FixedRho>(&protocol)) return "fixed_rho:" + format_double(f->rho);
  return to_string(protocol_tag(protocol));
}

std::string policy_label(const PolicySpec& policy) {
  if (const auto* t = std::get_if<ThresholdPolicy>(&policy)) {
    return "threshold:" + std::to_string(t->sleep_thr) + ':' + std::to_string(t->force_thr) + ':' +
           format_double(t->base_prob);
  }
  return "bernoulli";
}

std::vector<double> parse_values(const std::string& text) {
  auto number = [](std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw ConfigError("bad number '" + std::string(s) + "'");
    return v;
  };
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::string_view rest = text;
    while (true) {
      const auto c = rest.find(':');
      parts.push_back(number(rest.substr(0, c)));
      if (c == std::string_view::npos) break;
      rest = rest.substr(c + 1);
    }
    if (parts.size() != 3 || !(parts[2] > 0.0)) throw ConfigError("range must be start:stop:step with step > 0");
    if (parts[1] < parts[0]) throw ConfigError("range stop is below start");
    const auto count = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 0.5));
    for (long k = 0; k <= count; ++k) {
      // Round to 12 significant digits so 0.02:0.2:0.01 lands on exact decimals.
      const double v = parts[0] + static_cast<double>(k) * parts[2];
      out.push_back(std::stod(format_double(std::round(v * 1e12) / 1e12)));
    }
    return out;
  }
  std::string_view rest = text;
  while (!rest.empty()) {
    const auto c = rest.find(',');
    out.push_back(number(rest.substr(0, c)));
    if (c == std::string_view::npos) break;
    rest = rest.substr(c + 1);
  }
  return out;
}

std::vector<ThresholdPolicy> parse_pairs(const std::string& text, double target_eps) {
  std::vector<ThresholdPolicy> out;
  std::stringstream items(text);
  std::string item;
  while (std::getline(items, item, ',')) {
    std::vector<std::string> fields;
    std::stringstream parts(item);
    std::string f;
    while (std::getline(parts, f, ':')) fields.push_back(f);
    if (fields.size() < 2 || fields.size() > 3) throw ConfigError("pair must be sleep:force[:base], got '" + item + "'");
    ThresholdPolicy pol;
    pol.sleep_thr = std::stol(fields[0]);
    pol.force_thr = std::stol(fields[1]);
    if (fields.size() == 3) {
      pol.base_prob = std::stod(fields[2]);
    } else {
      const auto base = solve_base_prob(pol.sleep_thr, pol.force_thr, target_eps);
      if (!base) throw ConfigError("pair " + item + " cannot reach the target activation");
      pol.base_prob = *base;
    }
    pol.validate();
    out.push_back(pol);
  }
  return out;
}

namespace {

struct Point {
  std::string value;
  SystemConfig cfg;
  PolicySpec policy;
};

std::vector<Point> sweep_points(const SweepSpec& spec) {
  std::vector<Point> points;
  if (spec.variable == SweepVariable::threshold_pair) {
    points.push_back({"none", spec.base_config, BernoulliPolicy{}});
    for (const auto& p : spec.pairs) {
      points.push_back({std::to_string(p.sleep_thr) + ':' + std::to_string(p.force_thr), spec.base_config, p});
    }
    return points;
  }
  for (const double v : spec.values) {
    Point p{format_double(v), spec.base_config, spec.policy};
    switch (spec.variable) {
      case SweepVariable::pilot_len: p.cfg.pilot_len = static_cast<Index>(v); break;
      case SweepVariable::activity_prob: p.cfg.activity_prob = v; break;
      case SweepVariable::n_users: p.cfg.n_users = static_cast<Index>(v); break;
      case SweepVariable::threshold_pair: break;
    }
    points.push_back(std::move(p));
  }
  return points;
}

double policy_activation(const SystemConfig& cfg, const PolicySpec& policy) {
  if (const auto* t = std::get_if<ThresholdPolicy>(&policy)) return effective_activation(*t);
  return cfg.activity_prob;
}

// AAoI predicted from the closed forms; grant-free needs a measured rho.
CsvRow analysis_row(CsvRow row, const SystemConfig& cfg, const ProtocolSpec& protocol, const PolicySpec& policy,
                    std::optional<double> measured_rho) {
  row.source = "analysis";
  row.slots = 0;
  row.ci95 = 0.0;
  const double eps = policy_activation(cfg, policy);
  double rho = 0.0;
  if (const auto* f = std::get_if<FixedRho>(&protocol)) {
    rho = f->rho;
  } else if (std::holds_alternative<GrantBased>(protocol)) {
    rho = grant_based_rho(cfg.n_users, cfg.pilot_len, eps);
  } else if (measured_rho) {
    rho = *measured_rho;
  } else {
    throw ConfigError("grant_free analysis needs a simulated rho (set slots > 0)");
  }
  row.rho = rho;
  row.activation = eps;
  if (const auto* t = std::get_if<ThresholdPolicy>(&policy)) {
    row.aaoi = rho > 0.0 ? algorithm1_aaoi(*t, rho).aaoi : std::numeric_limits<double>::infinity();
  } else {
    row.aaoi = baseline_aaoi(eps, rho);
  }
  return row;
}

template <typename Fn>
void run_pool(std::size_t count, unsigned workers, Fn&& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < count; k = next++) fn(k);
  };
  std::vector<std::jthread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
}

}  // namespace

std::vector<CsvRow> run_sweep(const SweepSpec& spec) {
  spec.validate();
  const auto points = sweep_points(spec);
  const std::size_t jobs = points.size() * spec.protocols.size();
  std::vector<std::vector<CsvRow>> results(jobs);

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = std::min<unsigned>(spec.workers ? spec.workers : hw, static_cast<unsigned>(jobs));
  const unsigned inner = std::max(1u, hw / std::max(1u, workers));

  run_pool(jobs, workers, [&](std::size_t job) {
    const auto& point = points[job / spec.protocols.size()];
    const auto& protocol = spec.protocols[job % spec.protocols.size()];
    CsvRow base;
    base.variable = to_string(spec.variable);
    base.value = point.value;
    base.protocol = protocol_label(protocol);
    base.policy = policy_label(point.policy);
    base.seed = point.cfg.seed;

    auto& rows = results[job];
    std::optional<double> measured_rho;
    if (spec.slots > 0) {
      CsvRow row = base;
      row.source = "simulation";
      try {
        SimOptions opts;
        opts.burn_in = spec.burn_in;
        opts.threads = inner;
        const SimReport rep = run_simulation(point.cfg, protocol, point.policy, spec.slots, opts);
        row.aaoi = rep.aaoi_estimate;
        row.ci95 = rep.ci95;
        row.rho = rep.empirical_rho;
        row.activation = rep.empirical_activation;
        row.slots = rep.slots;
        measured_rho = rep.empirical_rho;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      rows.push_back(std::move(row));
    }
    if (spec.analysis_overlay) {
      try {
        rows.push_back(analysis_row(base, point.cfg, protocol, point.policy, measured_rho));
      } catch (const std::exception& e) {
        CsvRow row = base;
        row.source = "analysis";
        row.error = e.what();
        rows.push_back(std::move(row));
      }
    }
  });

  std::vector<CsvRow> out;
  for (auto& r : results) {
    for (auto& row : r) out.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Command-line front end

namespace {

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  bool verbose = false;
};

struct SystemFlags {
  std::optional<Index> n_users;
  std::optional<double> eps;
  std::optional<Index> pilot_len;
  std::optional<double> snr_db;
  std::optional<Index> amp_iters;
};

struct PolicyFlags {
  std::optional<std::string> policy;
  std::optional<Index> sleep;
  std::optional<Index> force;
};

void add_global(CLI::App* app, GlobalFlags& g) {
  app->add_option("--config", g.config_path, "Flat key = value config file");
  app->add_option("--seed", g.seed, "Random seed");
  app->add_option("--out", g.out_path, "Write CSV to this path instead of stdout");
  app->add_flag("--verbose", g.verbose, "Emit per-slot trace files");
}

void add_system(CLI::App* app, SystemFlags& s) {
  app->add_option("--n", s.n_users, "Number of users N");
  app->add_option("--eps", s.eps, "Activity probability");
  app->add_option("--l", s.pilot_len, "Pilot length L");
  app->add_option("--snr-db", s.snr_db, "Per-user SNR in dB");
  app->add_option("--amp-iters", s.amp_iters, "AMP iteration cap");
}

void add_policy(CLI::App* app, PolicyFlags& p) {
  app->add_option("--policy", p.policy, "bernoulli | threshold");
  app->add_option("--sleep", p.sleep, "Sleep threshold");
  app->add_option("--force", p.force, "Forced-active threshold");
}

template <typename T>
T parse_as(const std::string& key, const std::string& text) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError("bad value for '" + key + "': '" + text + "'");
  return v;
}

template <typename T>
std::optional<T> pick(const std::optional<T>& flag, const KeyValues& kv, const std::string& key) {
  if (flag) return flag;
  const auto it = kv.find(key);
  if (it == kv.end()) return std::nullopt;
  if constexpr (std::is_same_v<T, std::string>) {
    return it->second;
  } else {
    return parse_as<T>(key, it->second);
  }
}

SystemConfig resolve_system(const GlobalFlags& g, const SystemFlags& s, const KeyValues& kv) {
  SystemConfig cfg;
  apply_key_values(kv, cfg);
  if (s.n_users) cfg.n_users = *s.n_users;
  if (s.eps) cfg.activity_prob = *s.eps;
  if (s.pilot_len) cfg.pilot_len = *s.pilot_len;
  if (s.snr_db) cfg.per_user_snr_db = *s.snr_db;
  if (s.amp_iters) cfg.amp_iters = *s.amp_iters;
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  return cfg;
}

std::string normalize(std::string s) {
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

ProtocolSpec resolve_protocol(const std::string& name, std::optional<double> rho) {
  const auto n = normalize(name);
  if (n == "grant_based") return GrantBased{};
  if (n == "grant_free") return GrantFree{};
  if (n == "fixed_rho") {
    if (!rho) throw ConfigError("fixed_rho protocol needs --rho");
    return FixedRho{*rho};
  }
  throw ConfigError("unknown protocol '" + name + "'");
}

PolicySpec resolve_policy(const PolicyFlags& p, const KeyValues& kv, double base_prob) {
  const auto name = pick(p.policy, kv, "policy");
  const auto sleep = pick(p.sleep, kv, "sleep_thr");
  const auto force = pick(p.force, kv, "force_thr");
  const bool threshold = name ? normalize(*name) == "threshold" : (sleep || force);
  if (name && !threshold && normalize(*name) != "bernoulli") throw ConfigError("unknown policy '" + *name + "'");
  if (!threshold) return BernoulliPolicy{};
  if (!sleep || !force) throw ConfigError("threshold policy needs --sleep and --force");
  ThresholdPolicy pol{*sleep, *force, base_prob};
  pol.validate();
  return pol;
}

// Output sink: --out file or the given stream.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw ConfigError("cannot open output file " + path);
      stream_ = &file_;
    }
  }
  std::ostream& stream() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

std::string analysis_header() { return "kind,sleep_thr,force_thr,base_prob,activation,rho,aaoi,horizon,tail_mass"; }

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Age of Information toolkit for grant-based and AMP grant-free random access"};
  app.require_subcommand(1);

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Closed-form and Markov-chain AAoI");
  analyze->require_subcommand(1);
  GlobalFlags ga;
  std::optional<double> a_eps, a_rho, a_target, a_tol, a_tail;
  std::optional<Index> a_theta_max, a_sleep, a_force;

  auto* a_base = analyze->add_subcommand("baseline", "1/(eps*rho)");
  add_global(a_base, ga);
  a_base->add_option("--eps", a_eps, "Activity probability");
  a_base->add_option("--rho", a_rho, "Access success rate");

  auto* a_thr = analyze->add_subcommand("thresholds", "Threshold pairs holding the activation fixed");
  add_global(a_thr, ga);
  a_thr->add_option("--target-eps", a_target, "Target activation probability");
  a_thr->add_option("--theta-max", a_theta_max, "Largest forced-active threshold");
  a_thr->add_option("--tol", a_tol, "Activation tolerance");
  a_thr->add_option("--rho", a_rho, "Also evaluate the AAoI of every pair at this rho");

  auto* a_alg = analyze->add_subcommand("alg1", "AAoI of a threshold policy");
  add_global(a_alg, ga);
  a_alg->add_option("--sleep", a_sleep, "Sleep threshold");
  a_alg->add_option("--force", a_force, "Forced-active threshold");
  a_alg->add_option("--eps", a_eps, "Base activation probability");
  a_alg->add_option("--rho", a_rho, "Access success rate");
  a_alg->add_option("--tail-tol", a_tail, "Tail mass tolerance");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo AAoI estimate");
  GlobalFlags gs;
  SystemFlags ss;
  PolicyFlags ps;
  std::optional<std::string> s_protocol;
  std::optional<double> s_rho;
  std::optional<Index> s_slots, s_burn;
  std::optional<unsigned> s_threads;
  bool s_cold = false;
  add_global(simulate, gs);
  add_system(simulate, ss);
  add_policy(simulate, ps);
  simulate->add_option("--protocol", s_protocol, "grant-based | grant-free | fixed-rho");
  simulate->add_option("--rho", s_rho, "Success probability for fixed-rho");
  simulate->add_option("--slots", s_slots, "Total slots including burn-in");
  simulate->add_option("--burn-in", s_burn, "Unrecorded warm-up slots");
  simulate->add_option("--threads", s_threads, "Grant-free worker threads");
  simulate->add_flag("--cold-start", s_cold, "Threshold policy starts with all intervals at 1");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Parameter sweep emitting simulation and analysis rows");
  GlobalFlags gw;
  SystemFlags sw;
  PolicyFlags pw;
  std::optional<std::string> w_variable, w_values, w_protocols, w_pairs;
  std::optional<double> w_rho, w_target;
  std::optional<Index> w_slots, w_burn, w_theta_max;
  std::optional<unsigned> w_workers;
  bool w_analysis = false;
  add_global(sweep, gw);
  add_system(sweep, sw);
  add_policy(sweep, pw);
  sweep->add_option("--variable", w_variable, "pilot_len | activity_prob | n_users | threshold_pair");
  sweep->add_option("--values", w_values, "a,b,c or start:stop:step");
  sweep->add_option("--pairs", w_pairs, "sleep:force[:base],... for threshold_pair");
  sweep->add_option("--target-eps", w_target, "Activation held fixed when pairs are generated");
  sweep->add_option("--theta-max", w_theta_max, "Generate all feasible pairs up to this force threshold");
  sweep->add_option("--protocols", w_protocols, "Comma list of grant-based, grant-free, fixed-rho");
  sweep->add_option("--rho", w_rho, "Success probability for fixed-rho");
  sweep->add_option("--slots", w_slots, "Simulated slots per point (0 = analysis only)");
  sweep->add_option("--burn-in", w_burn, "Unrecorded warm-up slots");
  sweep->add_option("--workers", w_workers, "Concurrent sweep points");
  sweep->add_flag("--analysis", w_analysis, "Also emit closed-form predictions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (analyze->parsed()) {
      const KeyValues kv = ga.config_path.empty() ? KeyValues{} : load_key_values(ga.config_path);
      Output sink(ga.out_path, out);
      auto& os = sink.stream();
      os << analysis_header() << '\n';
      if (a_base->parsed()) {
        const auto eps = pick(a_eps, kv, "activity_prob");
        const auto rho = pick(a_rho, kv, "rho");
        if (!eps || !rho) throw ConfigError("analyze baseline needs --eps and --rho");
        os << "baseline,,," << format_double(*eps) << ',' << format_double(*eps) << ',' << format_double(*rho) << ','
           << format_double(baseline_aaoi(*eps, *rho)) << ",,\n";
      } else if (a_thr->parsed()) {
        const double target = pick(a_target, kv, "activity_prob").value_or(0.05);
        const Index theta_max = pick(a_theta_max, kv, "theta_max").value_or(40);
        const double tol = a_tol.value_or(1e-9);
        const auto rho = pick(a_rho, kv, "rho");
        for (const auto& pol : solve_threshold_pairs(target, theta_max, tol)) {
          os << "threshold_pair," << pol.sleep_thr << ',' << pol.force_thr << ',' << format_double(pol.base_prob) << ','
             << format_double(effective_activation(pol)) << ',';
          if (rho) {
            const auto res = algorithm1_aaoi(pol, *rho);
            os << format_double(*rho) << ',' << format_double(res.aaoi) << ',' << res.horizon << ','
               << format_double(res.tail_mass) << '\n';
          } else {
            os << ",,,\n";
          }
        }
      } else {
        const auto sleep = pick(a_sleep, kv, "sleep_thr");
        const auto force = pick(a_force, kv, "force_thr");
        const auto rho = pick(a_rho, kv, "rho");
        if (!sleep || !force || !rho) throw ConfigError("analyze alg1 needs --sleep, --force and --rho");
        const ThresholdPolicy pol{*sleep, *force, pick(a_eps, kv, "activity_prob").value_or(0.05)};
        const auto res = algorithm1_aaoi(pol, *rho, a_tail.value_or(1e-10));
        os << "alg1," << pol.sleep_thr << ',' << pol.force_thr << ',' << format_double(pol.base_prob) << ','
           << format_double(effective_activation(pol)) << ',' << format_double(*rho) << ','
           << format_double(res.aaoi) << ',' << res.horizon << ',' << format_double(res.tail_mass) << '\n';
      }
      return 0;
    }

    if (simulate->parsed()) {
      const KeyValues kv = gs.config_path.empty() ? KeyValues{} : load_key_values(gs.config_path);
      const SystemConfig cfg = resolve_system(gs, ss, kv);
      const auto rho = pick(s_rho, kv, "rho");
      const ProtocolSpec protocol = resolve_protocol(pick(s_protocol, kv, "protocol").value_or("grant_based"), rho);
      const PolicySpec policy = resolve_policy(ps, kv, cfg.activity_prob);
      const Index slots = pick(s_slots, kv, "slots").value_or(10000);

      SimOptions opts;
      opts.burn_in = pick(s_burn, kv, "burn_in");
      opts.cold_start = s_cold;
      opts.threads = s_threads.value_or(0);
      std::ofstream slot_file, amp_file;
      if (gs.verbose) {
        if (gs.out_path.empty()) {
          opts.slot_trace = &err;
          opts.amp_trace = &err;
        } else {
          slot_file.open(gs.out_path + ".slots.csv", std::ios::binary);
          amp_file.open(gs.out_path + ".amp.csv", std::ios::binary);
          slot_file << "slot,active_count,success_count,mean_aoi\n";
          amp_file << "slot,iteration,tau_sq,mse\n";
          opts.slot_trace = &slot_file;
          opts.amp_trace = &amp_file;
        }
      }
      const SimReport rep = run_simulation(cfg, protocol, policy, slots, opts);
      CsvRow row;
      row.variable = "none";
      row.protocol = protocol_label(protocol);
      row.policy = policy_label(policy);
      row.source = "simulation";
      row.aaoi = rep.aaoi_estimate;
      row.ci95 = rep.ci95;
      row.rho = rep.empirical_rho;
      row.activation = rep.empirical_activation;
      row.slots = rep.slots;
      row.seed = rep.seed;
      Output sink(gs.out_path, out);
      sink.stream() << csv_header() << '\n' << format_row(row) << '\n';
      return 0;
    }

    // sweep
    const KeyValues kv = gw.config_path.empty() ? KeyValues{} : load_key_values(gw.config_path);
    SweepSpec spec;
    spec.base_config = resolve_system(gw, sw, kv);
    spec.variable = parse_sweep_variable(normalize(pick(w_variable, kv, "variable").value_or("pilot_len")));
    const auto rho = pick(w_rho, kv, "rho");
    std::stringstream protos(pick(w_protocols, kv, "protocols").value_or("grant_based"));
    for (std::string item; std::getline(protos, item, ',');) spec.protocols.push_back(resolve_protocol(item, rho));
    spec.analysis_overlay = w_analysis;
    spec.slots = pick(w_slots, kv, "slots").value_or(0);
    spec.burn_in = pick(w_burn, kv, "burn_in");
    spec.workers = w_workers.value_or(0);
    if (spec.variable == SweepVariable::threshold_pair) {
      const double target = w_target.value_or(spec.base_config.activity_prob);
      if (const auto pairs = pick(w_pairs, kv, "pairs")) {
        spec.pairs = parse_pairs(*pairs, target);
      } else {
        spec.pairs = solve_threshold_pairs(target, pick(w_theta_max, kv, "theta_max").value_or(40));
      }
    } else {
      const auto values = pick(w_values, kv, "values");
      if (!values) throw ConfigError("sweep needs --values");
      spec.values = parse_values(*values);
      spec.policy = resolve_policy(pw, kv, spec.base_config.activity_prob);
    }

    const auto rows = run_sweep(spec);
    Output sink(gw.out_path, out);
    auto& os = sink.stream();
    os << csv_header() << '\n';
    bool ok = true;
    for (const auto& row : rows) {
      os << format_row(row) << '\n';
      ok = ok && row.error.empty();
    }
    return ok ? 0 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace aoi::cli
