#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "aoi/amp.hpp"
#include "aoi/errors.hpp"
#include "oracles.hpp"

using namespace aoi;
using cd = std::complex<double>;

TEST_CASE("denoiser matches quadrature") {
  // Value frozen from an independent 30-digit adaptive integration.
  constexpr double kFrozen = 1.599801249066589;
  const auto d = mmse_denoise(cd(2.0, 0.0), 0.25, 0.1, 1.0);
  CHECK(std::abs(d.value - cd(kFrozen, 0.0)) < 1e-6);

  const auto [mean, post] = oracle::bg_posterior_mean(cd(2.0, 0.0), 0.25, 0.1, 1.0, 60);
  CHECK(std::abs(d.value - mean) < 1e-6);
  CHECK(d.activity_posterior == doctest::Approx(post).epsilon(1e-6));

  // A few off-axis points, same oracle.
  for (const cd r : {cd(0.3, -0.4), cd(-1.1, 0.7), cd(0.0, 2.5)}) {
    const auto got = mmse_denoise(r, 0.5, 0.2, 1.0);
    const auto ref = oracle::bg_posterior_mean(r, 0.5, 0.2, 1.0, 60);
    CHECK(std::abs(got.value - ref.first) < 1e-6);
  }
}

TEST_CASE("denoiser limits") {
  SUBCASE("eps = 1 is the Wiener filter") {
    const cd r(1.3, -0.2);
    const auto d = mmse_denoise(r, 0.5, 1.0, 2.0);
    CHECK(std::abs(d.value - (2.0 / 2.5) * r) < 1e-14);
    CHECK(d.activity_posterior == 1.0);
  }
  SUBCASE("zero input") {
    const auto d = mmse_denoise(cd(0.0, 0.0), 0.3, 0.05, 1.0);
    CHECK(std::abs(d.value) == 0.0);
  }
  SUBCASE("eps -> 0 shrinks to zero") {
    const double tau_sq = 0.2;
    for (double mag = 0.05; mag <= 3.0 * std::sqrt(tau_sq); mag += 0.1) {
      const cd r(mag * 0.6, mag * 0.8);
      const auto d = mmse_denoise(r, tau_sq, 1e-12, 1.0);
      CHECK(std::abs(d.value) < 1e-6 * std::abs(r));
    }
  }
  SUBCASE("invalid arguments") {
    CHECK_THROWS_AS(mmse_denoise(cd(1.0, 0.0), 0.0, 0.1, 1.0), DomainError);
    CHECK_THROWS_AS(mmse_denoise(cd(1.0, 0.0), -1.0, 0.1, 1.0), DomainError);
    CHECK_THROWS_AS(mmse_denoise(cd(1.0, 0.0), 0.1, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(mmse_denoise(cd(1.0, 0.0), 0.1, 1.5, 1.0), DomainError);
  }
  SUBCASE("tiny tau and large inputs stay finite") {
    const auto d1 = mmse_denoise(cd(1e3, 1e3), 1e-30, 0.05, 1.0);
    CHECK(std::isfinite(d1.value.real()));
    CHECK(std::isfinite(d1.divergence));
    const auto d2 = mmse_denoise(cd(1e-3, 0.0), 1e-30, 0.05, 1.0);
    CHECK(std::isfinite(d2.value.real()));
  }
}

TEST_CASE("divergence matches finite differences") {
  CounterRng rng(17);
  int checked = 0;
  for (int k = 0; k < 100; ++k) {
    const double tau_sq = 0.05 + 1.5 * uniform01(rng);
    const double eps = 0.01 + 0.5 * uniform01(rng);
    const cd r = complex_normal(rng, 1.0 + tau_sq);
    const double h = 1e-6;
    auto f = [&](cd z) { return mmse_denoise(z, tau_sq, eps, 1.0).value; };
    const double dre = (f(r + cd(h, 0)) - f(r - cd(h, 0))).real() / (2 * h);
    const double dim = (f(r + cd(0, h)) - f(r - cd(0, h))).imag() / (2 * h);
    const double fd = 0.5 * (dre + dim);
    const double got = mmse_denoise(r, tau_sq, eps, 1.0).divergence;
    CHECK(std::abs(got - fd) < 1e-5 * std::max(1.0, std::abs(fd)));
    ++checked;
  }
  CHECK(checked == 100);
}

namespace {

SystemConfig small_cfg(Index n, Index l, double eps, double snr_db, Index iters) {
  SystemConfig cfg;
  cfg.n_users = n;
  cfg.pilot_len = l;
  cfg.activity_prob = eps;
  cfg.per_user_snr_db = snr_db;
  cfg.amp_iters = iters;
  return cfg;
}

ComplexVector truth_of(const ChannelRealization& ch, const ActivityVector& act) {
  ComplexVector x = ComplexVector::Zero(ch.gains.size());
  for (Index n = 0; n < x.size(); ++n) {
    if (act(n)) x(n) = ch.gains(n);
  }
  return x;
}

}  // namespace

TEST_CASE("received signal synthesis") {
  SystemConfig cfg = small_cfg(50, 20, 0.1, 10.0, 10);
  const double xi = snr_to_xi(cfg.per_user_snr_db, cfg.pilot_len);

  SUBCASE("no active users, no noise") {
    auto rng = substream(1, Stream::channel, 0);
    const auto ch = sample_channels(cfg, rng);
    const ActivityVector none = ActivityVector::Constant(50, false);
    CHECK(synthesize_received(ch, none, cfg.per_user_snr_db, rng, false).norm() == 0.0);
  }
  SUBCASE("single active user is the scaled pilot") {
    auto rng = substream(2, Stream::channel, 0);
    const auto ch = sample_channels(cfg, rng);
    ActivityVector one = ActivityVector::Constant(50, false);
    one(7) = true;
    const ComplexVector y = synthesize_received(ch, one, cfg.per_user_snr_db, rng, false);
    const ComplexVector expect = std::sqrt(xi) * ch.gains(7) * ch.pilot_matrix.col(7);
    CHECK((y - expect).norm() < 1e-12 * expect.norm());
  }
  SUBCASE("matches a loop implementation") {
    auto rng = substream(3, Stream::channel, 0);
    const auto ch = sample_channels(cfg, rng);
    auto arng = substream(3, Stream::activity, 0);
    const auto act = sample_activity(cfg, arng);
    const ComplexVector y = synthesize_received(ch, act, cfg.per_user_snr_db, rng, false);
    std::vector<cd> x(50);
    for (Index n = 0; n < 50; ++n) x[n] = act(n) ? ch.gains(n) : cd(0);
    const auto ref = oracle::naive_received(ch.pilot_matrix, x, xi);
    for (Index l = 0; l < 20; ++l) CHECK(std::abs(y(l) - ref[l]) < 1e-10);
  }
  SUBCASE("average received energy") {
    // E||y||^2 = xi * E||A x||^2 + L; E||A x||^2 = N eps for unit-norm columns.
    const int trials = 10000;
    double total = 0.0;
    double ax_total = 0.0;
    for (int t = 0; t < trials; ++t) {
      auto rng = substream(4, Stream::channel, t);
      auto arng = substream(4, Stream::activity, t);
      const auto ch = sample_channels(cfg, rng);
      const auto act = sample_activity(cfg, arng);
      total += synthesize_received(ch, act, cfg.per_user_snr_db, rng, true).squaredNorm();
      std::vector<cd> x(50);
      for (Index n = 0; n < 50; ++n) x[n] = act(n) ? ch.gains(n) : cd(0);
      for (const cd v : oracle::naive_received(ch.pilot_matrix, x, 1.0)) ax_total += std::norm(v);
    }
    const double expected_mc = xi * ax_total / trials + 20.0;
    const double expected_closed = xi * 50 * 0.1 + 20.0;
    CHECK(std::abs(total / trials - expected_mc) < 0.03 * expected_mc);
    CHECK(std::abs(total / trials - expected_closed) < 0.03 * expected_closed);
  }
  SUBCASE("dimension mismatch") {
    auto rng = substream(5, Stream::channel, 0);
    const auto ch = sample_channels(cfg, rng);
    const ActivityVector wrong = ActivityVector::Constant(49, false);
    CHECK_THROWS_AS(synthesize_received(ch, wrong, 10.0, rng), ConfigError);
  }
}

TEST_CASE("amp on trivial inputs") {
  SystemConfig cfg = small_cfg(60, 20, 0.1, 20.0, 15);
  auto rng = substream(6, Stream::pilots, 0);
  const ComplexMatrix a = sample_pilots(20, 60, rng);

  SUBCASE("zero observation") {
    int calls = 0;
    const auto st = amp_iterate(ComplexVector::Zero(20), a, cfg, [&](const AmpState& s) {
      ++calls;
      CHECK(s.estimate.norm() == 0.0);
    });
    CHECK(calls >= 1);
    CHECK(st.estimate.norm() == 0.0);
    CHECK(detect_active(st, cfg).detected.empty());
  }
  SUBCASE("noiseless single user") {
    auto grng = substream(6, Stream::channel, 0);
    const ComplexVector h = sample_gains(60, grng);
    const Index k = 23;
    const ComplexVector y = std::sqrt(snr_to_xi(cfg.per_user_snr_db, 20)) * h(k) * a.col(k);
    const auto st = amp_iterate(y, a, cfg);
    Index arg = 0;
    st.estimate.cwiseAbs().maxCoeff(&arg);
    CHECK(arg == k);
    const auto det = detect_active(st, cfg);
    REQUIRE(det.detected.size() == 1);
    CHECK(det.detected[0] == k);
  }
  SUBCASE("non-finite observation") {
    ComplexVector y = ComplexVector::Zero(20);
    y(3) = cd(std::numeric_limits<double>::quiet_NaN(), 0.0);
    CHECK_THROWS_AS(amp_iterate(y, a, cfg), DivergenceError);
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(amp_iterate(ComplexVector::Zero(19), a, cfg), ConfigError);
  }
}

TEST_CASE("amp error decreases over the first iterations") {
  const SystemConfig cfg = small_cfg(200, 60, 0.05, 25.0, 20);
  int good = 0;
  const int trials = 500;
  for (int t = 0; t < trials; ++t) {
    auto rng = substream(7, Stream::channel, t);
    auto arng = substream(7, Stream::activity, t);
    const auto ch = sample_channels(cfg, rng);
    const auto act = sample_activity(cfg, arng);
    const ComplexVector x = truth_of(ch, act);
    const ComplexVector y = synthesize_received(ch, act, cfg.per_user_snr_db, rng);
    std::vector<double> mse{x.squaredNorm()};
    amp_iterate(y, ch, cfg, [&](const AmpState& s) { mse.push_back((s.estimate - x).squaredNorm()); });
    bool ok = mse.size() >= 6 || (mse.size() > 1 && mse.back() < 1e-20);
    for (std::size_t k = 1; k < std::min<std::size_t>(mse.size(), 6); ++k) ok = ok && mse[k] < mse[k - 1];
    good += ok;
  }
  CHECK(good >= 475);
}

TEST_CASE("onsager keeps the pseudo-data error at tau") {
  const SystemConfig cfg = small_cfg(1000, 200, 0.05, 20.0, 6);
  int checked = 0;
  for (int t = 0; t < 5; ++t) {
    auto rng = substream(8, Stream::channel, t);
    auto arng = substream(8, Stream::activity, t);
    const auto ch = sample_channels(cfg, rng);
    const auto act = sample_activity(cfg, arng);
    const ComplexVector x = truth_of(ch, act);
    const ComplexVector y = synthesize_received(ch, act, cfg.per_user_snr_db, rng);
    amp_iterate(y, ch, cfg, [&](const AmpState& s) {
      // pseudo_data at iteration t (1-based) was built from the state after t-1 steps.
      if (s.iteration < 3) return;
      const double var = (s.pseudo_data - x).squaredNorm() / static_cast<double>(x.size());
      CHECK(std::abs(var - s.tau_sq) < 0.10 * s.tau_sq);
      ++checked;
    });
  }
  CHECK(checked > 0);
}

TEST_CASE("detection thresholds posteriors") {
  SystemConfig cfg = small_cfg(10, 5, 0.1, 10.0, 5);
  AmpState st;
  st.posterior = Eigen::VectorXd::Zero(10);
  CHECK(detect_active(st, cfg).detected.empty());
  st.posterior = Eigen::VectorXd::Ones(10);
  CHECK(detect_active(st, cfg).detected.size() == 10);
  st.posterior(4) = 0.5;  // not strictly above
  CHECK(detect_active(st, cfg).detected.size() == 9);
}

namespace {

double composed_rate(const SystemConfig& cfg, Index slots, std::uint64_t seed, double& ci) {
  std::int64_t att = 0;
  std::int64_t ok = 0;
  for (Index t = 0; t < slots; ++t) {
    auto arng = substream(seed, Stream::activity, t);
    auto rng = substream(seed, Stream::channel, t);
    const auto act = sample_activity(cfg, arng);
    const auto out = grant_free_round(cfg, act, rng);
    att += static_cast<std::int64_t>(out.active.size());
    ok += static_cast<std::int64_t>(out.succeeded.size());
  }
  const double p = static_cast<double>(ok) / att;
  ci = 1.96 * std::sqrt(p * (1 - p) / att);
  return p;
}

double component_rate(const SystemConfig& cfg, Index slots, std::uint64_t seed, double& ci) {
  std::int64_t att = 0;
  std::int64_t ok = 0;
  for (Index t = 0; t < slots; ++t) {
    auto arng = substream(seed, Stream::activity, t);
    auto rng = substream(seed, Stream::channel, t);
    const auto act = sample_activity(cfg, arng);
    const auto ch = sample_channels(cfg, rng);
    const auto y = synthesize_received(ch, act, cfg.per_user_snr_db, rng);
    const auto det = detect_active(amp_iterate(y, ch, cfg), cfg);
    for (Index n = 0; n < act.size(); ++n) att += act(n);
    for (const Index n : det.detected) ok += act(n);
  }
  const double p = static_cast<double>(ok) / att;
  ci = 1.96 * std::sqrt(p * (1 - p) / att);
  return p;
}

}  // namespace

TEST_CASE("grant-free round agrees with the component pipeline") {
  const SystemConfig cfg = small_cfg(200, 60, 0.05, 20.0, 25);
  double ci_a = 0.0;
  double ci_b = 0.0;
  const double a = component_rate(cfg, 1000, 31, ci_a);
  const double b = composed_rate(cfg, 1000, 32, ci_b);
  CHECK(std::abs(a - b) <= std::hypot(ci_a, ci_b) * 1.5);
  CHECK(a > 0.5);
}

TEST_CASE("grant-free round basics") {
  SystemConfig cfg = small_cfg(30, 15, 0.1, 30.0, 25);
  SUBCASE("no active users") {
    auto rng = substream(9, Stream::channel, 0);
    const auto out = grant_free_round(cfg, ActivityVector::Constant(30, false), rng);
    CHECK(out.active.empty());
    CHECK(out.succeeded.empty());
    CHECK(out.protocol_tag == ProtocolTag::grant_free);
  }
  SUBCASE("noiseless, very sparse") {
    ActivityVector act = ActivityVector::Constant(30, false);
    act(4) = act(17) = true;
    int perfect = 0;
    for (int t = 0; t < 20; ++t) {
      auto rng = substream(10, Stream::channel, t);
      const auto out = grant_free_round(cfg, act, rng, false);
      perfect += out.succeeded == out.active;
    }
    CHECK(perfect >= 19);
  }
  SUBCASE("successes are a subset of the active set") {
    for (int t = 0; t < 50; ++t) {
      auto arng = substream(11, Stream::activity, t);
      auto rng = substream(11, Stream::channel, t);
      const auto act = sample_activity(cfg, arng);
      const auto out = grant_free_round(cfg, act, rng);
      for (const Index n : out.succeeded) CHECK(act(n));
      CHECK(std::is_sorted(out.succeeded.begin(), out.succeeded.end()));
    }
  }
  SUBCASE("fixed pilot matrix shape is checked") {
    auto rng = substream(12, Stream::channel, 0);
    const ComplexMatrix wrong = ComplexMatrix::Zero(14, 30);
    CHECK_THROWS_AS(grant_free_round(cfg, wrong, ActivityVector::Constant(30, false), rng), ConfigError);
  }
}
