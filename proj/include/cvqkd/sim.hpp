#pragma once

// Monte Carlo sampler for the prepare-and-measure stage of the
// squeezed-state heterodyne protocol: Gaussian modulation, lossy noisy
// channel, heterodyne detection, sifting, and channel-parameter
// estimation.  The per-round sampling law is derived from the
// entanglement-based covariance (single source of truth with the analytic
// rates), never written down independently.

#include "cvqkd/rates.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace cvqkd {

// splitmix64 finalizer: bijective 64-bit mixing.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based random stream: the state is keyed by (seed, counter), so
// any round of a session can be generated independently and in parallel.
// Gaussian variates use an explicit Box-Muller transform rather than
// std::normal_distribution, whose output is implementation-defined; this
// keeps fixed-seed golden files portable across standard libraries.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t counter)
      : state_(mix64(seed ^ mix64(counter))) {}

  std::uint64_t next_u64() {
    // canonical splitmix64 step: golden-ratio increment + finalizer
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on (0, 1] (never 0, so log() below is safe).
  double uniform() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal; Box-Muller pairs, one cached.
  double normal();

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// One protocol round.
struct SimRecord {
  std::uint8_t r = 0;  // Alice's quadrature choice: 0 -> x, 1 -> p
  double a = 0.0;      // her displacement, ~ Normal(0, V_a)
  double b_x = 0.0;    // Bob's two heterodyne outcomes
  double b_p = 0.0;
  double b = 0.0;      // sifted value: b_x if r = 0, b_p if r = 1
};

// Per-round sampling law, read off the entanglement-based picture:
// b_matched = slope * a + Normal(0, noise_var), and the unmatched
// quadrature is an independent draw from the thermal marginal.
struct SamplingModel {
  double slope = 0.0;         // sqrt(T/2): channel loss + heterodyne split
  double noise_var = 0.0;     // conditional variance of the matched datum
  double marginal_var = 0.0;  // variance of either unconditioned outcome
};

// Derive the sampling law from gamma_AB plus Bob's balanced heterodyne
// splitter (read off an explicit 3-mode covariance).
SamplingModel derive_sampling_model(const ProtocolConfig& config,
                                    const ChannelModel& channel);

struct SessionResult {
  std::vector<SimRecord> records;
  ProtocolConfig config;
  ChannelModel channel = ChannelModel::from_epsilon(1.0, 0.0);
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double reveal_fraction = 0.5;
  // NaN until the session is large enough to estimate (n >= 1000 with at
  // least 100 revealed rounds); see run_session.
  double T_hat = std::numeric_limits<double>::quiet_NaN();
  double chi_C_hat = std::numeric_limits<double>::quiet_NaN();
  double I_hat = std::numeric_limits<double>::quiet_NaN();
  double K_hat = std::numeric_limits<double>::quiet_NaN();
};

// Sample n rounds; deterministic given seed.  Only squeezed-preparation
// heterodyne configs are in scope (the record schema is two heterodyne
// outcomes).  Fills the estimate fields when the sample supports them.
SessionResult run_session(std::size_t n, const ProtocolConfig& config,
                          const ChannelModel& channel, std::uint64_t seed,
                          double reveal_fraction = 0.5);

// Moment estimators on the first floor(reveal_fraction * n) (a, b) pairs:
// the regression slope through the origin recovers sqrt(T/2) — the 1/2 is
// the heterodyne splitter, inverted explicitly as T_hat = 2 slope^2 — and
// the residual variance recovers chi_C.  Needs >= 100 revealed rounds.
std::pair<double, double> estimate_channel(const SessionResult& result,
                                           double reveal_fraction);

// Gaussian plug-in mutual information on the full-sample (a, b) covariance
// and the corresponding key-rate estimate
// K_hat = I_hat - holevo(T_hat, chi_C_hat, chi_D).  Needs n >= 1000.
std::pair<double, double> empirical_rate(const SessionResult& result);

// CSV export of the raw records: header r,a,b_x,b_p,b.
void write_records_csv(const SessionResult& result, std::ostream& out);

}  // namespace cvqkd
