#pragma once

// Asymptotic secret key rates of one-way Gaussian protocols over a lossy,
// noisy bosonic channel, against collective Gaussian attacks.
//
// Everything is phrased in the entanglement-based picture: Alice holds one
// arm of a two-mode squeezed state of variance V, the other arm crosses a
// channel of transmittance T that adds chi_C units of noise (referred to
// the channel input), and Bob detects his mode, possibly through a noisy
// detector modelled as a beamsplitter T_B mixing in a thermal state N so
// that chi_D = (1-T_B) N / T_B.  Eve is limited only by physics: her
// information is the Holevo quantity against the reconciliation reference
// (Bob's data for reverse, Alice's for direct), computed from the entropy
// of the purified global state.  The key rate is K = I(a:b) - chi_E in
// bits per channel use.

#include "cvqkd/gaussian.hpp"

#include <optional>
#include <string>

namespace cvqkd {

// Excess channel noise above the pure-loss floor, referred to the channel
// input: chi_C = (1-T)/T + epsilon.
double chi_line(double T, double epsilon);

// Lossy thermal channel acting on Bob's arm.  T in (0,1]; the total added
// noise chi_C never sits below the pure-loss value (epsilon >= 0, with a
// small tolerance for round-tripping).
class ChannelModel {
 public:
  static ChannelModel from_chi_c(double T, double chi_c);
  static ChannelModel from_epsilon(double T, double epsilon);
  static ChannelModel from_loss_db(double loss_db, double epsilon);

  double T() const { return T_; }
  double chi_c() const { return chi_c_; }
  double epsilon() const { return chi_c_ - (1.0 - T_) / T_; }
  double loss_db() const;

 private:
  ChannelModel(double T, double chi_c) : T_(T), chi_c_(chi_c) {}
  double T_;
  double chi_c_;
};

enum class Preparation { Squeezed, Coherent };
enum class Measurement { Homodyne, Heterodyne };
enum class Reconciliation { Reverse, Direct };

// Explicit physical realization of Bob's detector noise: a beamsplitter of
// transmittance T_B in front of an ideal detector, the open port fed with
// one arm of an EPR pair of variance N (so the global state stays pure and
// conditional entropies are well defined).  chi_D = (1-T_B) N / T_B.
struct BobNoiseModel {
  double T_B = 1.0;
  double N = 1.0;
  double chi_d() const { return (1.0 - T_B) * N / T_B; }
};

// One protocol of the family: what Alice prepares, how Bob measures, how
// noisy Bob's detector is, and which side's data the key is distilled
// toward.  chi_D is Bob's detector noise referred to his input; heterodyne
// detection is exactly the chi_D = 1 point of the noisy-homodyne family
// (half a vacuum unit on each of two quadratures = one unit on the one
// that is kept), so heterodyne configs pin chi_D = 1.
struct ProtocolConfig {
  Preparation preparation = Preparation::Squeezed;
  Measurement measurement = Measurement::Homodyne;
  double V = 1.0;       // modulation-plus-vacuum quadrature variance, >= 1
  double chi_D = 0.0;   // Bob's detector noise (shot-noise units), >= 0
  Reconciliation reconciliation = Reconciliation::Reverse;
  // When true Bob measures a randomly switched quadrature and the rounds
  // where he picked the unmodulated one are sifted away, halving I, chi_E
  // and K alike.
  bool switching = false;
  // Optional explicit realization of chi_D; must be consistent with it.
  std::optional<BobNoiseModel> bob_model;

  // Variance of the classical Gaussian modulation seen in the
  // prepare-and-measure picture.
  double modulation_variance() const { return V - 1.0 / V; }

  void validate() const;

  static ProtocolConfig squeezed_homodyne(double V, double chi_D = 0.0);
  static ProtocolConfig squeezed_heterodyne(double V);
  static ProtocolConfig coherent_homodyne(double V);
  static ProtocolConfig coherent_heterodyne(double V);
};

// Named presets, in the order they appear in reports.
enum class Preset {
  SqueezedHomodyne,
  SqueezedHeterodyne,
  CoherentHomodyne,
  CoherentHeterodyne,
};

ProtocolConfig make_preset(Preset p, double V);
std::string preset_name(Preset p);
std::optional<Preset> preset_from_name(const std::string& name);

// Full result of a key-rate evaluation.  All entropic quantities are in
// bits per channel use.  The intermediates expose the two-mode state
// x = V, y = T (V + chi_C), z = sqrt(T (V^2 - 1)) and, when the closed
// form applies, its symplectic invariants Delta = x^2 + y^2 - 2 z^2,
// D = x y - z^2 and the conditional-spectrum coefficients A, B (NaN when a
// path computes the conditional spectrum numerically instead).
struct RateReport {
  double I_ab = 0.0;
  double holevo = 0.0;
  double K = 0.0;
  double x = 0.0, y = 0.0, z = 0.0;
  double chi = 0.0;          // chi_C + chi_D_effective / T
  double Delta = 0.0, D = 0.0;
  double A = 0.0, B = 0.0;
  double lambda1 = 1.0, lambda2 = 1.0, lambda3 = 1.0, lambda4 = 1.0;
};

// Two-mode covariance of (Alice arm, channel output).
CovMatrix gamma_AB(double V, const ChannelModel& channel);

// Mutual information of the matched-quadrature data for squeezed-state
// modulation read through a detector of noise chi_D:
// I = (1/2) log2( (V + chi) / (chi + 1/V) ) with chi = chi_C + chi_D / T.
double mutual_info_ab(double V, const ChannelModel& channel, double chi_D);

// Holevo bound chi(b:E) for reverse reconciliation from the closed-form
// symplectic spectra: lambda_{1,2} of the shared state and lambda_{3,4} of
// Eve's state conditioned on Bob's noisy x-quadrature measurement.
double holevo_bE_closed(double V, const ChannelModel& channel, double chi_D);

// Same quantity built the long way: purify chi_D with an EPR pair behind a
// beamsplitter, homodyne-condition the detected port, and take entropy
// differences of explicit covariance matrices.  Slower; used to cross-check
// the closed form.
double holevo_bE_oracle(double V, const ChannelModel& channel,
                        const BobNoiseModel& bob);

// Key rate and intermediates for one protocol over one channel.
RateReport keyrate(const ProtocolConfig& config, const ChannelModel& channel);

}  // namespace cvqkd
