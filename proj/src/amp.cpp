#include "aoi/amp.hpp"

#include <cmath>
#include <limits>

namespace aoi {

namespace {

// Keeps the denoiser defined once the residual vanishes (noiseless or y = 0).
constexpr double kTauFloor = 1e-200;

ComplexVector synthesize(const ComplexVector& gains, const ComplexMatrix& pilots, const ActivityVector& act,
                         double snr_db, CounterRng& rng, bool add_noise) {
  const Index n_users = pilots.cols();
  if (gains.size() != n_users || act.size() != n_users)
    throw ConfigError("synthesize_received: gains, pilots and activity disagree on N");
  const double amp = std::sqrt(snr_to_xi(snr_db, pilots.rows()));
  ComplexVector y = ComplexVector::Zero(pilots.rows());
  for (Index n = 0; n < n_users; ++n) {
    if (act(n)) y.noalias() += (amp * gains(n)) * pilots.col(n);
  }
  if (add_noise) {
    for (Index l = 0; l < y.size(); ++l) y(l) += complex_normal(rng, 1.0);
  }
  return y;
}

}  // namespace

ComplexVector synthesize_received(const ChannelRealization& chan, const ActivityVector& act,
                                  double snr_db, CounterRng& rng, bool add_noise) {
  return synthesize(chan.gains, chan.pilot_matrix, act, snr_db, rng, add_noise);
}

AmpState amp_iterate(const ComplexVector& y, const ComplexMatrix& pilots, const SystemConfig& cfg,
                     const AmpObserver& observer) {
  cfg.validate();
  const Index n_users = pilots.cols();
  const Index pilot_len = pilots.rows();
  if (y.size() != pilot_len || n_users != cfg.n_users || pilot_len != cfg.pilot_len)
    throw ConfigError("amp_iterate: dimensions of y, pilots and config disagree");

  const ComplexVector y_norm = y / std::sqrt(snr_to_xi(cfg.per_user_snr_db, pilot_len));
  const double ratio = static_cast<double>(n_users) / static_cast<double>(pilot_len);

  AmpState state;
  state.estimate = ComplexVector::Zero(n_users);
  state.residual = y_norm;
  state.posterior = Eigen::VectorXd::Zero(n_users);
  state.pseudo_data = ComplexVector::Zero(n_users);

  ComplexVector next_estimate(n_users);
  ComplexVector next_residual(pilot_len);
  while (state.iteration < cfg.amp_iters) {
    const Index t = state.iteration;
    state.pseudo_data.noalias() = pilots.adjoint() * state.residual;
    state.pseudo_data += state.estimate;
    state.tau_sq = std::max(state.residual.squaredNorm() / static_cast<double>(pilot_len), kTauFloor);
    if (!std::isfinite(state.tau_sq) || !state.pseudo_data.allFinite())
      throw DivergenceError(static_cast<std::size_t>(t), "amp_iterate: non-finite pseudo-data");

    double div_sum = 0.0;
    for (Index n = 0; n < n_users; ++n) {
      const auto d = mmse_denoise(state.pseudo_data(n), state.tau_sq, cfg.activity_prob, kPriorVariance);
      next_estimate(n) = d.value;
      state.posterior(n) = d.activity_posterior;
      div_sum += d.divergence;
    }
    state.mean_divergence = div_sum / static_cast<double>(n_users);

    next_residual = y_norm;
    next_residual.noalias() -= pilots * next_estimate;
    next_residual += (ratio * state.mean_divergence) * state.residual;

    if (!next_estimate.allFinite() || !next_residual.allFinite())
      throw DivergenceError(static_cast<std::size_t>(t), "amp_iterate: non-finite iterate");

    const double prev_norm = state.residual.norm();
    const double change = prev_norm > 0.0 ? (next_residual - state.residual).norm() / prev_norm : 0.0;
    state.estimate.swap(next_estimate);
    state.residual.swap(next_residual);
    ++state.iteration;
    if (observer) observer(state);
    if (change < kAmpStopTolerance) break;
  }
  return state;
}

DetectionResult detect_active(const AmpState& state, const SystemConfig& /*cfg*/) {
  DetectionResult out;
  out.posterior_activity = state.posterior;
  out.estimate = state.estimate;
  for (Index n = 0; n < state.posterior.size(); ++n) {
    if (state.posterior(n) > 0.5) out.detected.push_back(n);
  }
  return out;
}

namespace {

SlotOutcome finish_round(const SystemConfig& cfg, const ComplexVector& gains, const ComplexMatrix& pilots,
                         const ActivityVector& act, CounterRng& rng, bool add_noise,
                         const AmpTraceSink& trace) {
  SlotOutcome out;
  out.protocol_tag = ProtocolTag::grant_free;
  out.active = active_indices(act);
  if (out.active.empty()) return out;

  const ComplexVector y = synthesize(gains, pilots, act, cfg.per_user_snr_db, rng, add_noise);
  AmpObserver observer;
  if (trace) {
    const ComplexVector truth = act.cast<double>().matrix().cast<std::complex<double>>().cwiseProduct(gains);
    observer = [&trace, truth](const AmpState& s) {
      trace(s.iteration, s.tau_sq, (s.estimate - truth).squaredNorm());
    };
  }
  const auto detection = detect_active(amp_iterate(y, pilots, cfg, observer), cfg);
  for (const Index n : detection.detected) {
    if (act(n)) out.succeeded.push_back(n);
  }
  return out;
}

}  // namespace

SlotOutcome grant_free_round(const SystemConfig& cfg, const ActivityVector& act, CounterRng& rng,
                             bool add_noise) {
  const ChannelRealization chan = sample_channels(cfg, rng);
  return finish_round(cfg, chan.gains, chan.pilot_matrix, act, rng, add_noise, {});
}

SlotOutcome grant_free_round(const SystemConfig& cfg, const ComplexMatrix& pilots,
                             const ActivityVector& act, CounterRng& rng, bool add_noise,
                             const AmpTraceSink& trace) {
  cfg.validate();
  if (pilots.rows() != cfg.pilot_len || pilots.cols() != cfg.n_users)
    throw ConfigError("grant_free_round: pilot matrix does not match config");
  const ComplexVector gains = sample_gains(cfg.n_users, rng);
  return finish_round(cfg, gains, pilots, act, rng, add_noise, trace);
}

}  // namespace aoi
