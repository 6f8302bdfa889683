#include "cvqkd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace cvqkd {

namespace {

// Zero crossing of a decreasing rate function f(eps) with f(0) > 0:
// expand the bracket, then bisect.  Termination mirrors the documented
// tolerances exactly so regression values are reproducible.
double excess_noise_root(const std::function<double(double)>& rate_at) {
  if (!(rate_at(0.0) > 0.0)) return 0.0;
  double lo = 0.0;
  double hi = 0.5;
  double f_hi = rate_at(hi);
  while (f_hi > 0.0) {
    if (hi >= kEpsilonSearchMax) return kNoFiniteTolerance;
    lo = hi;
    hi = std::min(2.0 * hi, kEpsilonSearchMax);
    f_hi = rate_at(hi);
  }
  // Invariant: rate_at(lo) > 0 >= f_hi.
  for (;;) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = rate_at(mid);
    if (std::abs(f_mid) <= kRateRootTol || hi - lo <= kEpsilonIntervalTol) {
      return mid;
    }
    (f_mid > 0.0 ? lo : hi) = mid;
  }
}

// Golden-section maximization on [lo, hi] to interval width tol; returns
// (argmax, max) evaluated at the interval midpoint.
std::pair<double, double> golden_max(const std::function<double(double)>& f,
                                     double lo, double hi, double tol) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  const double xm = 0.5 * (a + b);
  return {xm, f(xm)};
}

ChannelModel channel_at(double loss_db, bool noise_is_epsilon, double noise) {
  const double T = std::pow(10.0, -loss_db / 10.0);
  return noise_is_epsilon ? ChannelModel::from_epsilon(T, noise)
                          : ChannelModel::from_chi_c(T, noise);
}

}  // namespace

double tolerable_excess_noise(const ProtocolConfig& config, double loss_db,
                              double V) {
  ProtocolConfig cfg = config;
  cfg.V = V;
  cfg.validate();
  return excess_noise_root([&](double eps) {
    return keyrate(cfg, ChannelModel::from_loss_db(loss_db, eps)).K;
  });
}

double tolerable_excess_noise_optimal(double loss_db, double V) {
  return excess_noise_root([&](double eps) {
    return optimize_chi_d(V, ChannelModel::from_loss_db(loss_db, eps)).K;
  });
}

ChiDOptimum optimize_chi_d(double V, const ChannelModel& channel) {
  // Rate of the noisy-homodyne family as a function of Bob's added noise;
  // scalar closed forms keep this cheap enough for nested searches.
  const auto rate = [&](double chi_d) {
    return mutual_info_ab(V, channel, chi_d) -
           holevo_bE_closed(V, channel, chi_d);
  };

  // Coarse scan brackets the global maximum (the rate is smooth and at
  // most unimodal-with-plateau in chi_D on this family).
  constexpr int kGridPoints = 65;
  const double step = kChiDCap / (kGridPoints - 1);
  int best = 0;
  double f_best = rate(0.0);
  for (int i = 1; i < kGridPoints; ++i) {
    const double f_i = rate(step * i);
    if (f_i > f_best) {
      best = i;
      f_best = f_i;
    }
  }
  const double lo = step * std::max(best - 1, 0);
  const double hi = step * std::min(best + 1, kGridPoints - 1);
  const auto [xm, fm] = golden_max(rate, lo, hi, kChiDTol);

  // Candidates in ascending chi_D with strict improvement required, so
  // plateaus resolve to the smallest optimal noise and the documented
  // dominance over chi_D = 0 and 1 holds exactly.
  ChiDOptimum out;
  out.chi_d = 0.0;
  out.K = rate(0.0);
  const double f_one = rate(1.0);
  if (f_one > out.K) {
    out.chi_d = 1.0;
    out.K = f_one;
  }
  if (fm > out.K) {
    out.chi_d = xm;
    out.K = fm;
  }
  out.at_cap = out.chi_d >= kChiDCap - 1e-3;
  return out;
}

LargeVError::LargeVError(double prev_value, double last_value)
    : NumericError("large-V evaluation did not converge: f(V) = " +
                   std::to_string(prev_value) + " then " +
                   std::to_string(last_value) + " at the V cap"),
      prev(prev_value),
      last(last_value) {}

double large_V_eval(const std::function<double(double)>& f, double rel_tol) {
  double v = kLargeVStart;
  double f_prev = f(v);
  for (;;) {
    const double f_next = f(2.0 * v);
    if (f_prev == f_next ||
        std::abs(f_next - f_prev) <=
            rel_tol * std::max(std::abs(f_prev), std::abs(f_next))) {
      return f_next;
    }
    if (2.0 * v >= kLargeVCap) throw LargeVError(f_prev, f_next);
    v *= 2.0;
    f_prev = f_next;
  }
}

void SweepSpec::validate() const {
  for (std::size_t i = 1; i < loss_db.size(); ++i) {
    if (!(loss_db[i] > loss_db[i - 1])) {
      throw std::domain_error("sweep: loss grid must be strictly "
                              "increasing");
    }
  }
  if (kind != SweepKind::Optimize && columns.empty()) {
    throw std::domain_error("sweep: at least one column required");
  }
  for (const auto& col : columns) {
    if (col.config) {
      ProtocolConfig cfg = *col.config;
      cfg.V = large_V ? kLargeVStart : V;
      cfg.validate();
    }
  }
}

SweepResult sweep_curves(const SweepSpec& spec) {
  spec.validate();
  SweepResult out;
  if (spec.kind == SweepKind::Optimize) {
    out.columns = {"chi_d_opt", "K_opt"};
  } else {
    out.columns.reserve(spec.columns.size());
    for (const auto& col : spec.columns) out.columns.push_back(col.label);
  }

  // One column value at a fixed loss; `V -> value` so the large-V
  // procedure can wrap it uniformly.
  const auto column_value = [&spec](const SweepSpec::Column& col,
                                    double loss_db, double V) {
    if (spec.kind == SweepKind::Tolerance) {
      return col.config ? tolerable_excess_noise(*col.config, loss_db, V)
                        : tolerable_excess_noise_optimal(loss_db, V);
    }
    const ChannelModel ch =
        channel_at(loss_db, spec.noise_is_epsilon, spec.noise);
    if (!col.config) return optimize_chi_d(V, ch).K;
    ProtocolConfig cfg = *col.config;
    cfg.V = V;
    return keyrate(cfg, ch).K;
  };

  out.points.reserve(spec.loss_db.size());
  for (const double loss : spec.loss_db) {
    CurvePoint pt;
    pt.loss_db = loss;
    pt.T = std::pow(10.0, -loss / 10.0);
    const auto record_failure = [&pt](const std::string& label,
                                      const std::exception& e) {
      pt.values.push_back(std::numeric_limits<double>::quiet_NaN());
      if (!pt.error.empty()) pt.error += "; ";
      pt.error += label + ": " + e.what();
    };
    if (spec.kind == SweepKind::Optimize) {
      try {
        const ChannelModel ch =
            channel_at(loss, spec.noise_is_epsilon, spec.noise);
        const ChiDOptimum opt =
            spec.large_V
                ? [&] {
                    // Converge chi_d and K jointly on the doubled V.
                    ChiDOptimum o;
                    large_V_eval([&](double V) {
                      o = optimize_chi_d(V, ch);
                      return o.K;
                    });
                    return o;
                  }()
                : optimize_chi_d(spec.V, ch);
        pt.values = {opt.chi_d, opt.K};
      } catch (const std::exception& e) {
        pt.values.assign(2, std::numeric_limits<double>::quiet_NaN());
        pt.error = e.what();
      }
    } else {
      for (const auto& col : spec.columns) {
        try {
          pt.values.push_back(
              spec.large_V
                  ? large_V_eval([&](double V) {
                      return column_value(col, loss, V);
                    })
                  : column_value(col, loss, spec.V));
        } catch (const std::exception& e) {
          record_failure(col.label, e);
        }
      }
    }
    out.points.push_back(std::move(pt));
  }
  return out;
}

}  // namespace cvqkd
