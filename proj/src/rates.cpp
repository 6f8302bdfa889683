#include "cvqkd/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace cvqkd {

namespace {

constexpr double kConsistencyTol = 1e-12;
// Relative guard on the spectra discriminants: slightly negative values are
// rounding residue, anything worse flags a non-physical input or a bug.
constexpr double kDiscriminantTol = 1e-9;

double quiet_nan() { return std::numeric_limits<double>::quiet_NaN(); }

// Positive roots (descending) of lambda^4 - S lambda^2 + P = 0, i.e. the
// pair with lambda_hi^2 + lambda_lo^2 = S and (lambda_hi lambda_lo)^2 = P.
// The small root is computed as 2P/(S + rad) to dodge the cancellation of
// S - rad when the two roots are far apart.
std::pair<double, double> biquadratic_spectrum(double S, double P,
                                               const char* ctx) {
  if (!(S > 0.0) || !(P >= 0.0)) {
    throw NumericError(std::string(ctx) + ": spectrum invariants out of "
                       "range (S=" + std::to_string(S) + ", P=" +
                       std::to_string(P) + ")");
  }
  double disc = S * S - 4.0 * P;
  if (disc < 0.0) {
    if (disc < -kDiscriminantTol * std::max(1.0, S * S)) {
      throw NumericError(std::string(ctx) + ": negative spectrum "
                         "discriminant " + std::to_string(disc));
    }
    disc = 0.0;
  }
  const double rad = std::sqrt(disc);
  const double hi = std::sqrt(0.5 * (S + rad));
  const double lo = std::sqrt(2.0 * P / (S + rad));
  return {clamp_physical_eigenvalue(hi), clamp_physical_eigenvalue(lo)};
}

struct ClosedSpectra {
  double Delta = 0.0, D = 0.0, A = 0.0, B = 0.0;
  double l1 = 1.0, l2 = 1.0, l3 = 1.0, l4 = 1.0;
  double value = 0.0;  // Holevo information, bits
};

// Closed-form Holevo information of Eve about the noisy homodyne datum
// taken on the second mode ("y side") of a two-mode state with blocks
// (x I, y I, z sigma_z).  Eve holds the purification, so S(E) = S(AB) with
// spectrum lambda_{1,2}; conditioning on the datum leaves lambda_{3,4}
// (plus unit eigenvalues) on Eve's side.  chi_ref >= 0 is the detector
// noise of the reference measurement.  For a measurement on the first
// mode call with x and y swapped; Delta and D are symmetric under that.
ClosedSpectra closed_holevo(double x, double y, double z2, double chi_ref,
                            const char* ctx) {
  ClosedSpectra out;
  out.Delta = x * x + y * y - 2.0 * z2;
  out.D = x * y - z2;
  std::tie(out.l1, out.l2) =
      biquadratic_spectrum(out.Delta, out.D * out.D, ctx);
  const double denom = y + chi_ref;  // y > 0 for physical states
  out.A = (y + x * out.D + chi_ref * out.Delta) / denom;
  out.B = out.D * (x + chi_ref * out.D) / denom;
  std::tie(out.l3, out.l4) = biquadratic_spectrum(out.A, out.B, ctx);
  out.value = g_entropy(0.5 * (out.l1 - 1.0)) +
              g_entropy(0.5 * (out.l2 - 1.0)) -
              g_entropy(0.5 * (out.l3 - 1.0)) -
              g_entropy(0.5 * (out.l4 - 1.0));
  return out;
}

// Bob's detector noise as seen by the matched-quadrature data: heterodyne
// detection is exactly the chi_D = 1 member of the noisy-homodyne family
// (the balanced splitter costs 3 dB and adds half a vacuum unit, i.e. one
// unit referred to the kept quadrature).
double effective_bob_noise(const ProtocolConfig& config) {
  return config.measurement == Measurement::Heterodyne ? 1.0 : config.chi_D;
}

// State after all detector optics, with the mode indices of the ports that
// carry classical data.  Alice's side models state preparation: squeezed
// states correspond to an ideal homodyne on her arm, coherent states to a
// heterodyne (balanced splitter plus vacuum).  Bob's side realizes chi_D
// as a beamsplitter mixing in a thermal state.
// Mutual information of one jointly Gaussian (a, b) data pair from its
// scalar covariances: I = (1/2) log2( va vb / (va vb - cov^2) ).
double quadrature_mutual_info(double var_a, double var_b, double cov2) {
  const double det = var_a * var_b - cov2;
  if (!(det > 0.0)) {
    throw NumericError("quadrature_mutual_info: data covariance is not "
                       "positive definite");
  }
  return 0.5 * std::log2(var_a * var_b / det);
}

}  // namespace

double chi_line(double T, double epsilon) {
  if (!(T > 0.0 && T <= 1.0)) {
    throw std::domain_error("chi_line: transmittivity must lie in (0,1], "
                            "got " + std::to_string(T));
  }
  if (!(epsilon >= 0.0)) {
    throw std::domain_error("chi_line: excess noise must be >= 0, got " +
                            std::to_string(epsilon));
  }
  return (1.0 - T) / T + epsilon;
}

ChannelModel ChannelModel::from_chi_c(double T, double chi_c) {
  if (!(T > 0.0 && T <= 1.0)) {
    throw std::domain_error("channel: transmittivity must lie in (0,1], "
                            "got " + std::to_string(T));
  }
  const double floor_noise = (1.0 - T) / T;
  if (!(chi_c >= floor_noise - kConsistencyTol)) {
    throw std::domain_error("channel: added noise " + std::to_string(chi_c) +
                            " sits below the pure-loss floor " +
                            std::to_string(floor_noise));
  }
  return ChannelModel(T, chi_c);
}

ChannelModel ChannelModel::from_epsilon(double T, double epsilon) {
  if (!(epsilon >= -kConsistencyTol)) {
    throw std::domain_error("channel: excess noise must be >= 0, got " +
                            std::to_string(epsilon));
  }
  return from_chi_c(T, chi_line(T, std::max(epsilon, 0.0)));
}

ChannelModel ChannelModel::from_loss_db(double loss_db, double epsilon) {
  if (!(loss_db >= 0.0)) {
    throw std::domain_error("channel: loss must be >= 0 dB, got " +
                            std::to_string(loss_db));
  }
  return from_epsilon(std::pow(10.0, -loss_db / 10.0), epsilon);
}

double ChannelModel::loss_db() const { return -10.0 * std::log10(T_); }

void ProtocolConfig::validate() const {
  if (!(V >= 1.0) || !std::isfinite(V)) {
    throw std::domain_error("protocol: V must be finite and >= 1 (vacuum "
                            "plus modulation), got " + std::to_string(V));
  }
  if (!(chi_D >= 0.0) || !std::isfinite(chi_D)) {
    throw std::domain_error("protocol: chi_D must be finite and >= 0, got " +
                            std::to_string(chi_D));
  }
  if (preparation == Preparation::Coherent && chi_D != 0.0) {
    throw std::domain_error("protocol: coherent presets use ideal "
                            "detection; chi_D is not a free parameter");
  }
  if (preparation == Preparation::Squeezed &&
      measurement == Measurement::Heterodyne && chi_D != 1.0) {
    throw std::domain_error("protocol: heterodyne detection is the "
                            "chi_D = 1 point of the noisy-homodyne family; "
                            "configure it with chi_D = 1");
  }
  if (switching && !(preparation == Preparation::Squeezed &&
                     measurement == Measurement::Homodyne)) {
    throw std::domain_error("protocol: the switching variant models a "
                            "randomly switched (noisy) homodyne on squeezed "
                            "states");
  }
  if (reconciliation == Reconciliation::Direct &&
      preparation == Preparation::Coherent &&
      measurement == Measurement::Heterodyne) {
    throw std::domain_error("protocol: direct reconciliation against a "
                            "two-quadrature reference is not supported");
  }
  if (bob_model) {
    if (!(bob_model->T_B > 0.0 && bob_model->T_B <= 1.0) ||
        !(bob_model->N >= 1.0)) {
      throw std::domain_error("protocol: bob_model needs T_B in (0,1] and "
                              "N >= 1");
    }
    const double realized = bob_model->chi_d();
    if (std::abs(realized - chi_D) > kConsistencyTol * std::max(1.0, chi_D)) {
      throw std::domain_error("protocol: bob_model realizes chi_D = " +
                              std::to_string(realized) +
                              ", inconsistent with configured chi_D = " +
                              std::to_string(chi_D));
    }
  }
}

ProtocolConfig ProtocolConfig::squeezed_homodyne(double V, double chi_D) {
  ProtocolConfig c;
  c.preparation = Preparation::Squeezed;
  c.measurement = Measurement::Homodyne;
  c.V = V;
  c.chi_D = chi_D;
  return c;
}

ProtocolConfig ProtocolConfig::squeezed_heterodyne(double V) {
  ProtocolConfig c;
  c.preparation = Preparation::Squeezed;
  c.measurement = Measurement::Heterodyne;
  c.V = V;
  c.chi_D = 1.0;
  return c;
}

ProtocolConfig ProtocolConfig::coherent_homodyne(double V) {
  ProtocolConfig c;
  c.preparation = Preparation::Coherent;
  c.measurement = Measurement::Homodyne;
  c.V = V;
  c.chi_D = 0.0;
  return c;
}

ProtocolConfig ProtocolConfig::coherent_heterodyne(double V) {
  ProtocolConfig c;
  c.preparation = Preparation::Coherent;
  c.measurement = Measurement::Heterodyne;
  c.V = V;
  c.chi_D = 0.0;
  return c;
}

ProtocolConfig make_preset(Preset p, double V) {
  switch (p) {
    case Preset::SqueezedHomodyne:
      return ProtocolConfig::squeezed_homodyne(V);
    case Preset::SqueezedHeterodyne:
      return ProtocolConfig::squeezed_heterodyne(V);
    case Preset::CoherentHomodyne:
      return ProtocolConfig::coherent_homodyne(V);
    case Preset::CoherentHeterodyne:
      return ProtocolConfig::coherent_heterodyne(V);
  }
  throw std::domain_error("make_preset: unknown preset");
}

std::string preset_name(Preset p) {
  switch (p) {
    case Preset::SqueezedHomodyne: return "squeezed-homodyne";
    case Preset::SqueezedHeterodyne: return "squeezed-heterodyne";
    case Preset::CoherentHomodyne: return "coherent-homodyne";
    case Preset::CoherentHeterodyne: return "coherent-heterodyne";
  }
  throw std::domain_error("preset_name: unknown preset");
}

std::optional<Preset> preset_from_name(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  std::replace(n.begin(), n.end(), '_', '-');
  if (n == "squeezed-homodyne") return Preset::SqueezedHomodyne;
  if (n == "squeezed-heterodyne") return Preset::SqueezedHeterodyne;
  if (n == "coherent-homodyne") return Preset::CoherentHomodyne;
  if (n == "coherent-heterodyne") return Preset::CoherentHeterodyne;
  return std::nullopt;
}

CovMatrix gamma_AB(double V, const ChannelModel& channel) {
  if (!(V >= 1.0)) {
    throw std::domain_error("gamma_AB: V must be >= 1, got " +
                            std::to_string(V));
  }
  const double T = channel.T();
  const double x = V;
  const double y = T * (V + channel.chi_c());
  const double z = std::sqrt(T * (V * V - 1.0));
  Eigen::Matrix4d m;
  m << x, 0, z, 0,
       0, x, 0, -z,
       z, 0, y, 0,
       0, -z, 0, y;
  return CovMatrix(m);  // the constructor rejects non-physical parameters
}

double mutual_info_ab(double V, const ChannelModel& channel, double chi_D) {
  if (!(V >= 1.0)) {
    throw std::domain_error("mutual_info_ab: V must be >= 1, got " +
                            std::to_string(V));
  }
  if (!(chi_D >= 0.0)) {
    throw std::domain_error("mutual_info_ab: chi_D must be >= 0, got " +
                            std::to_string(chi_D));
  }
  const double chi = channel.chi_c() + chi_D / channel.T();
  return 0.5 * std::log2((V + chi) / (chi + 1.0 / V));
}

double holevo_bE_closed(double V, const ChannelModel& channel, double chi_D) {
  if (!(V >= 1.0) || !(chi_D >= 0.0)) {
    throw std::domain_error("holevo_bE_closed: need V >= 1 and chi_D >= 0");
  }
  const double T = channel.T();
  const double y = T * (V + channel.chi_c());
  const double z2 = T * (V * V - 1.0);
  return closed_holevo(V, y, z2, chi_D, "holevo_bE_closed").value;
}

double holevo_bE_oracle(double V, const ChannelModel& channel,
                        const BobNoiseModel& bob) {
  if (!(bob.T_B > 0.0 && bob.T_B <= 1.0) || !(bob.N >= 1.0)) {
    throw std::domain_error("holevo_bE_oracle: need T_B in (0,1] and "
                            "N >= 1");
  }
  // Modes: Alice=0, Bob=1, then the EPR pair (F=2, G=3) purifying Bob's
  // detector noise.  Mixing B and F at T_B realizes chi_D = (1-T_B)N/T_B;
  // conditioning on the detected port leaves (A, F', G), whose entropy is
  // Eve's conditional entropy because the five-party state is pure.
  const CovMatrix gab = gamma_AB(V, channel);
  CovMatrix four = tensor(gab, epr_state(bob.N));
  four = apply_beamsplitter(four, 1, 2, bob.T_B);
  const CovMatrix cond =
      homodyne_condition(four, {1, Quadrature::X}, 0.0);
  return vn_entropy(gab) - vn_entropy(cond);
}

RateReport keyrate(const ProtocolConfig& config, const ChannelModel& channel) {
  config.validate();
  const double V = config.V;
  const double T = channel.T();
  const double chi_b = effective_bob_noise(config);

  RateReport rep;
  rep.x = V;
  rep.y = T * (V + channel.chi_c());
  const double z2 = T * (V * V - 1.0);
  rep.z = std::sqrt(z2);
  rep.chi = channel.chi_c() + chi_b / T;

  // Shannon term.  Squeezed preparation has the closed form; for coherent
  // preparation Alice reads both quadratures through her own balanced
  // split, so her datum carries (x+1)/2 of variance and half of the
  // correlation power, and each measured quadrature contributes one term.
  if (config.preparation == Preparation::Squeezed) {
    rep.I_ab = mutual_info_ab(V, channel, chi_b);
  } else {
    const double var_a = 0.5 * (rep.x + 1.0);
    if (config.measurement == Measurement::Heterodyne) {
      // Bob splits once more: variance (y+1)/2, correlation power z^2/4,
      // and the x and p data pairs contribute symmetrically.
      rep.I_ab = 2.0 * quadrature_mutual_info(var_a, 0.5 * (rep.y + 1.0),
                                              0.25 * z2);
    } else {
      // Homodyne through detector noise chi_D: scaling Bob's datum back by
      // the detector transmittivity leaves variance y + chi_D against the
      // undiminished correlation power z^2/2.
      rep.I_ab = quadrature_mutual_info(var_a, rep.y + config.chi_D,
                                        0.5 * z2);
    }
  }

  // Holevo term, against the reconciliation reference.
  if (config.reconciliation == Reconciliation::Reverse) {
    if (config.preparation == Preparation::Coherent &&
        config.measurement == Measurement::Heterodyne) {
      // The reference is Bob's full two-quadrature outcome.  Conditioning
      // Alice's arm on it leaves the isotropic block
      // (x - z^2/(y+1)) I = ((D + x)/(y+1)) I, so its single symplectic
      // eigenvalue has a closed form (the matrix route loses physicality
      // to roundoff for near-pure states at very large V).
      rep.Delta = rep.x * rep.x + rep.y * rep.y - 2.0 * z2;
      rep.D = rep.x * rep.y - z2;
      std::tie(rep.lambda1, rep.lambda2) =
          biquadratic_spectrum(rep.Delta, rep.D * rep.D, "keyrate");
      rep.lambda3 = clamp_physical_eigenvalue((rep.D + rep.x) / (rep.y + 1.0));
      rep.lambda4 = 1.0;
      rep.A = quiet_nan();
      rep.B = quiet_nan();
      rep.holevo = g_entropy(0.5 * (rep.lambda1 - 1.0)) +
                   g_entropy(0.5 * (rep.lambda2 - 1.0)) -
                   g_entropy(0.5 * (rep.lambda3 - 1.0));
    } else {
      const ClosedSpectra cs =
          closed_holevo(rep.x, rep.y, z2, chi_b, "keyrate");
      rep.Delta = cs.Delta;
      rep.D = cs.D;
      rep.A = cs.A;
      rep.B = cs.B;
      rep.lambda1 = cs.l1;
      rep.lambda2 = cs.l2;
      rep.lambda3 = cs.l3;
      rep.lambda4 = cs.l4;
      rep.holevo = cs.value;
    }
  } else {
    // Direct reconciliation: Eve is bounded against Alice's datum.  Alice
    // detects her arm ideally for squeezed preparation and through one
    // vacuum unit (the kept quadrature of her heterodyne) for coherent
    // preparation; same closed form with the two modes' roles exchanged.
    const double chi_a =
        config.preparation == Preparation::Coherent ? 1.0 : 0.0;
    const ClosedSpectra cs =
        closed_holevo(rep.y, rep.x, z2, chi_a, "keyrate[direct]");
    rep.Delta = cs.Delta;
    rep.D = cs.D;
    rep.A = cs.A;
    rep.B = cs.B;
    rep.lambda1 = cs.l1;
    rep.lambda2 = cs.l2;
    rep.lambda3 = cs.l3;
    rep.lambda4 = cs.l4;
    rep.holevo = cs.value;
  }

  if (config.switching) {
    // Random quadrature switching sifts away half the rounds; every
    // per-use information rate halves with them.
    rep.I_ab *= 0.5;
    rep.holevo *= 0.5;
  }
  rep.K = rep.I_ab - rep.holevo;
  return rep;
}

}  // namespace cvqkd
