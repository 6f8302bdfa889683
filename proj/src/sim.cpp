#include "cvqkd/sim.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

namespace cvqkd {

double CounterRng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();  // in (0,1], so the log is finite
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  have_spare_ = true;
  return radius * std::cos(angle);
}

SamplingModel derive_sampling_model(const ProtocolConfig& config,
                                    const ChannelModel& channel) {
  // Entanglement-based picture: Alice's arm (mode 0), channel output
  // (mode 1), and the vacuum entering Bob's balanced heterodyne splitter
  // (mode 2).  After the splitter the transmitted port's x quadrature is
  // Bob's x outcome.
  CovMatrix g = tensor(gamma_AB(config.V, channel), vacuum_state());
  g = apply_beamsplitter(g, 1, 2, 0.5);
  const double var_b = g(CovMatrix::x_index(1), CovMatrix::x_index(1));
  const double cov_eb = g(CovMatrix::x_index(0), CovMatrix::x_index(1));

  // Alice's entanglement-based datum has variance V; her prepare-and-
  // measure displacement has variance V_a = V - 1/V.  The two pictures
  // are related by a deterministic rescale of her datum, which maps the
  // cross covariance by the same factor and leaves Bob's marginal alone.
  const double V_a = config.modulation_variance();
  if (V_a <= 0.0) {
    // V = 1: no modulation; slope is irrelevant but keep the marginals.
    return {0.0, var_b, var_b};
  }
  const double cov_ab = cov_eb * std::sqrt(V_a / config.V);
  const double slope = cov_ab / V_a;
  return {slope, var_b - cov_ab * cov_ab / V_a, var_b};
}

SessionResult run_session(std::size_t n, const ProtocolConfig& config,
                          const ChannelModel& channel, std::uint64_t seed,
                          double reveal_fraction) {
  config.validate();
  if (config.preparation != Preparation::Squeezed ||
      config.measurement != Measurement::Heterodyne) {
    throw std::domain_error("run_session: simulation covers the squeezed-"
                            "preparation heterodyne protocol only");
  }
  if (!(reveal_fraction > 0.0 && reveal_fraction <= 1.0)) {
    throw std::domain_error("run_session: reveal_fraction must lie in "
                            "(0,1], got " + std::to_string(reveal_fraction));
  }

  const SamplingModel model = derive_sampling_model(config, channel);
  const double sd_a = std::sqrt(config.modulation_variance());
  const double sd_noise = std::sqrt(model.noise_var);
  const double sd_marginal = std::sqrt(model.marginal_var);

  SessionResult result;
  result.config = config;
  result.channel = channel;
  result.n = n;
  result.seed = seed;
  result.reveal_fraction = reveal_fraction;
  result.records.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(seed, i);  // per-round key: rounds are independent
    SimRecord& rec = result.records[i];
    rec.r = rng.uniform() > 0.5 ? 1 : 0;
    rec.a = sd_a * rng.normal();
    const double matched = model.slope * rec.a + sd_noise * rng.normal();
    const double unmatched = sd_marginal * rng.normal();
    rec.b_x = rec.r == 0 ? matched : unmatched;
    rec.b_p = rec.r == 0 ? unmatched : matched;
    rec.b = matched;
  }

  // Fill the estimates when the sample supports them; tiny sessions stay
  // NaN and the estimation entry points raise on use.
  const auto revealed = static_cast<std::size_t>(
      reveal_fraction * static_cast<double>(n));
  if (n >= 1000 && revealed >= 100) {
    try {
      std::tie(result.T_hat, result.chi_C_hat) =
          estimate_channel(result, reveal_fraction);
      std::tie(result.I_hat, result.K_hat) = empirical_rate(result);
    } catch (const std::exception&) {
      // Degenerate sample (e.g. V = 1, no modulation): estimates stay NaN
      // and the estimation entry points report the failure on direct use.
    }
  }
  return result;
}

std::pair<double, double> estimate_channel(const SessionResult& result,
                                           double reveal_fraction) {
  if (!(reveal_fraction > 0.0 && reveal_fraction <= 1.0)) {
    throw std::domain_error("estimate_channel: reveal_fraction must lie in "
                            "(0,1], got " + std::to_string(reveal_fraction));
  }
  const auto m = static_cast<std::size_t>(
      reveal_fraction * static_cast<double>(result.records.size()));
  if (m < 100) {
    throw std::domain_error("estimate_channel: need at least 100 revealed "
                            "rounds, got " + std::to_string(m));
  }
  // Moment estimators on the revealed prefix (rounds are i.i.d., so any
  // deterministic subset is fair).  The data are zero-mean by
  // construction, so the regression runs through the origin.
  double s_aa = 0.0, s_ab = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    s_aa += result.records[i].a * result.records[i].a;
    s_ab += result.records[i].a * result.records[i].b;
  }
  if (!(s_aa > 0.0)) {
    throw NumericError("estimate_channel: degenerate modulation sample");
  }
  const double slope = s_ab / s_aa;
  double residual = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double e = result.records[i].b - slope * result.records[i].a;
    residual += e * e;
  }
  residual /= static_cast<double>(m);

  // b = sqrt(T/2) a + noise: the 1/2 is the heterodyne splitter, undone
  // here; the residual variance is (T (1/V + chi_C) + 1) / 2 (squeezed
  // quadrature + channel noise through the splitter + the vacuum unit),
  // solved for chi_C.
  const double T_hat = 2.0 * slope * slope;
  const double chi_C_hat =
      (2.0 * residual - 1.0) / T_hat - 1.0 / result.config.V;
  return {T_hat, chi_C_hat};
}

std::pair<double, double> empirical_rate(const SessionResult& result) {
  const std::size_t n = result.records.size();
  if (n < 1000) {
    throw std::domain_error("empirical_rate: need at least 1000 rounds, "
                            "got " + std::to_string(n));
  }
  double mean_a = 0.0, mean_b = 0.0;
  for (const SimRecord& rec : result.records) {
    mean_a += rec.a;
    mean_b += rec.b;
  }
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);
  double v_a = 0.0, v_b = 0.0, c_ab = 0.0;
  for (const SimRecord& rec : result.records) {
    const double da = rec.a - mean_a;
    const double db = rec.b - mean_b;
    v_a += da * da;
    v_b += db * db;
    c_ab += da * db;
  }
  const double norm = static_cast<double>(n - 1);
  v_a /= norm;
  v_b /= norm;
  c_ab /= norm;
  if (!(v_a > 0.0) || !(v_b > 0.0) || !(v_a * v_b - c_ab * c_ab > 0.0)) {
    throw NumericError("empirical_rate: degenerate sample covariance");
  }
  Eigen::Matrix2d joint;
  joint << v_a, c_ab, c_ab, v_b;
  const double I_hat = gaussian_mutual_info(joint);

  // Eve's bound at the estimated channel.  Sampling noise can push the
  // estimates slightly outside the physical region (T above 1 or chi_C
  // below the pure-loss floor); project back before evaluating.
  double T_hat = result.T_hat;
  double chi_C_hat = result.chi_C_hat;
  if (!std::isfinite(T_hat) || !std::isfinite(chi_C_hat)) {
    std::tie(T_hat, chi_C_hat) =
        estimate_channel(result, result.reveal_fraction);
  }
  const double T_proj = std::min(T_hat, 1.0);
  const double eps_proj =
      std::max(chi_C_hat - (1.0 - T_proj) / T_proj, 0.0);
  const double holevo = holevo_bE_closed(
      result.config.V, ChannelModel::from_epsilon(T_proj, eps_proj),
      result.config.chi_D);
  return {I_hat, I_hat - holevo};
}

void write_records_csv(const SessionResult& result, std::ostream& out) {
  out << "r,a,b_x,b_p,b\n";
  char buf[128];
  for (const SimRecord& rec : result.records) {
    std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g,%.12g,%.12g\n",
                  static_cast<int>(rec.r), rec.a, rec.b_x, rec.b_p, rec.b);
    out << buf;
  }
}

}  // namespace cvqkd
