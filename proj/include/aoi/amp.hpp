#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "aoi/access.hpp"
#include "aoi/errors.hpp"
#include "aoi/model.hpp"

namespace aoi {

template <typename Real>
struct DenoiserOutput {
  std::complex<Real> value;
  Real activity_posterior;
  // Mean of the two real partials, d(Re)/d(Re r) and d(Im)/d(Im r). For this
  // phase-equivariant denoiser it equals the Wirtinger derivative d/dr, which
  // is the quantity the Onsager term needs.
  Real divergence;
};

// Posterior mean of X given r = X + tau*W, W ~ CN(0,1), under the
// Bernoulli-Gaussian prior X ~ eps*CN(0, beta) + (1-eps)*delta_0.
//
//   value     = w(r) * beta/(beta+tau^2) * r
//   w(r)      = 1 / (1 + (1-eps)/eps * (beta+tau^2)/tau^2 * exp(-|r|^2 beta/(tau^2 (beta+tau^2))))
//
// The logistic form is evaluated in the log domain so neither tails nor
// tau_sq -> 0 overflow.
template <typename Real>
DenoiserOutput<Real> mmse_denoise(std::complex<Real> r, Real tau_sq, Real eps, Real beta) {
  if (!(tau_sq > Real(0))) throw DomainError("mmse_denoise: tau_sq must be > 0");
  if (!(eps > Real(0) && eps <= Real(1))) throw DomainError("mmse_denoise: eps must lie in (0, 1]");
  if (!(beta > Real(0))) throw DomainError("mmse_denoise: beta must be > 0");

  const Real shrink = beta / (beta + tau_sq);
  const Real alpha = beta / (tau_sq * (beta + tau_sq));
  const Real s = std::norm(r);

  Real omega = Real(1);
  Real omega_slope = Real(0);  // w (1 - w)
  if (eps < Real(1)) {
    const Real log_k = std::log((Real(1) - eps) / eps) + std::log1p(beta / tau_sq);
    const Real t = log_k - alpha * s;
    omega = Real(1) / (Real(1) + std::exp(t));
    const Real e = std::exp(-std::abs(t));
    omega_slope = e / ((Real(1) + e) * (Real(1) + e));
  }

  DenoiserOutput<Real> out;
  out.value = (omega * shrink) * r;
  out.activity_posterior = omega;
  const Real slope_term = omega_slope > Real(0) ? alpha * s * omega_slope : Real(0);
  out.divergence = shrink * (omega + slope_term);
  return out;
}

// Prior variance of an active user's effective coefficient.
inline constexpr double kPriorVariance = 1.0;
inline constexpr double kAmpStopTolerance = 1e-8;

/// Iterate of the AMP recursion. Quantities are in normalized units: the
/// received vector is divided by sqrt(xi), so `estimate` targets x_n = a_n h_n
/// and the effective noise variance is 1/xi.
struct AmpState {
  ComplexVector estimate;        // x^t
  ComplexVector residual;        // r^t
  double tau_sq = 0.0;           // effective noise variance fed to the last denoiser call
  Index iteration = 0;           // completed iterations
  ComplexVector pseudo_data;     // A^H r^{t-1} + x^{t-1}, last denoiser input
  Eigen::VectorXd posterior;     // activity posteriors from the last denoiser call
  double mean_divergence = 0.0;  // Onsager coefficient factor of the last step
};

struct DetectionResult {
  std::vector<Index> detected;
  Eigen::VectorXd posterior_activity;
  ComplexVector estimate;
};

// y = sqrt(xi) * A x + z with x_n = a_n h_n and z ~ CN(0, I_L).
ComplexVector synthesize_received(const ChannelRealization& chan, const ActivityVector& act,
                                  double snr_db, CounterRng& rng, bool add_noise = true);

using AmpObserver = std::function<void(const AmpState&)>;

// Starts from x^0 = 0, r^0 = y/sqrt(xi). Stops after cfg.amp_iters iterations
// or once ||r^{t+1} - r^t|| / ||r^t|| < kAmpStopTolerance. The observer, if
// set, sees the state after every iteration. Throws DivergenceError on a
// non-finite iterate.
AmpState amp_iterate(const ComplexVector& y, const ComplexMatrix& pilots, const SystemConfig& cfg,
                     const AmpObserver& observer = {});

inline AmpState amp_iterate(const ComplexVector& y, const ChannelRealization& chan,
                            const SystemConfig& cfg, const AmpObserver& observer = {}) {
  return amp_iterate(y, chan.pilot_matrix, cfg, observer);
}

// detected = { n : posterior_n > 0.5 }.
DetectionResult detect_active(const AmpState& state, const SystemConfig& cfg);

// One grant-free slot with freshly drawn channels and pilots.
SlotOutcome grant_free_round(const SystemConfig& cfg, const ActivityVector& act, CounterRng& rng,
                             bool add_noise = true);

// Per-iteration diagnostics: iteration (1-based), tau_sq, and squared error
// of the estimate against the true x summed over users.
using AmpTraceSink = std::function<void(Index iteration, double tau_sq, double squared_error)>;

// Same, with the dedicated pilot matrix held fixed; only gains and noise are
// drawn from rng.
SlotOutcome grant_free_round(const SystemConfig& cfg, const ComplexMatrix& pilots,
                             const ActivityVector& act, CounterRng& rng, bool add_noise = true,
                             const AmpTraceSink& trace = {});

}  // namespace aoi
