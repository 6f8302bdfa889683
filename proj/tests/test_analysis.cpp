// Tests for the analysis layer: noise-tolerance root finding, detector-
// noise optimization, the large-V limit procedure, and declarative curve
// sweeps.  Golden values were frozen from an independent implementation
// running the same documented algorithms and tolerances.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cvqkd/analysis.hpp"
#include "cvqkd/sim.hpp"  // CounterRng for deterministic random probes

#include <cmath>

using namespace cvqkd;

namespace {

double draw(CounterRng& rng, double lo, double hi) {
  return lo + (hi - lo) * (rng.uniform() - 0x1.0p-53);
}

// Rate of the squeezed/noisy-homodyne family at an explicit chi_D.
double family_rate(double V, const ChannelModel& ch, double chi_d) {
  return mutual_info_ab(V, ch, chi_d) - holevo_bE_closed(V, ch, chi_d);
}

}  // namespace

TEST_CASE("tolerable excess noise: frozen root and bracketing behavior") {
  const ProtocolConfig sq_hom = ProtocolConfig::squeezed_homodyne(40.0);

  SUBCASE("frozen value at 5 dB, V = 1e5") {
    const double eps = tolerable_excess_noise(sq_hom, 5.0, 1e5);
    CHECK(std::abs(eps - 0.516561567783) <= 1e-5);
  }

  SUBCASE("root brackets the actual sign change") {
    const double eps = tolerable_excess_noise(sq_hom, 5.0, 1e5);
    ProtocolConfig cfg = sq_hom;
    cfg.V = 1e5;
    const double below =
        keyrate(cfg, ChannelModel::from_loss_db(5.0, eps - 1e-3)).K;
    const double above =
        keyrate(cfg, ChannelModel::from_loss_db(5.0, eps + 1e-3)).K;
    CHECK(below > 0.0);
    CHECK(above < 0.0);
  }

  SUBCASE("no key at zero noise reports zero tolerance") {
    // direct reconciliation dies past ~3 dB of loss, so at 6 dB the rate
    // is negative already at eps = 0
    ProtocolConfig dr = ProtocolConfig::coherent_homodyne(40.0);
    dr.reconciliation = Reconciliation::Direct;
    CHECK(tolerable_excess_noise(dr, 6.0, 40.0) == 0.0);
  }

  SUBCASE("optimal-detector tolerance dominates every fixed preset") {
    const double opt = tolerable_excess_noise_optimal(5.0, 1e5);
    for (Preset p : {Preset::SqueezedHomodyne, Preset::SqueezedHeterodyne,
                     Preset::CoherentHomodyne, Preset::CoherentHeterodyne}) {
      const double fixed =
          tolerable_excess_noise(make_preset(p, 40.0), 5.0, 1e5);
      CHECK(opt >= fixed - 2e-6);  // two bisection intervals of slack
    }
  }
}

TEST_CASE("detector-noise optimization") {
  SUBCASE("noiseless channel: adding detector noise only hurts") {
    const ChannelModel id = ChannelModel::from_epsilon(1.0, 0.0);
    const ChiDOptimum opt = optimize_chi_d(40.0, id);
    CHECK(opt.chi_d == 0.0);  // plateau rule resolves to the smallest argmax
    CHECK(opt.K == doctest::Approx(std::log2(40.0)).epsilon(1e-12));
    CHECK_FALSE(opt.at_cap);
  }

  SUBCASE("frozen optima on the eps = 0.5, V = 40 line") {
    const ChiDOptimum at0 =
        optimize_chi_d(40.0, ChannelModel::from_loss_db(0.0, 0.5));
    CHECK(std::abs(at0.chi_d - 0.00459807) <= 1e-3);
    CHECK(at0.K == doctest::Approx(0.499335).epsilon(1e-4));
    CHECK_FALSE(at0.at_cap);

    const ChiDOptimum at5 =
        optimize_chi_d(40.0, ChannelModel::from_loss_db(5.0, 0.5));
    CHECK(at5.chi_d == doctest::Approx(0.491438).epsilon(1e-3));
    CHECK(at5.K == doctest::Approx(0.0263031).epsilon(1e-4));
    CHECK_FALSE(at5.at_cap);
  }

  SUBCASE("cap breach is flagged, not fatal") {
    // deep loss pushes the optimum to the search cap
    const ChiDOptimum opt =
        optimize_chi_d(40.0, ChannelModel::from_loss_db(10.0, 0.5));
    CHECK(opt.at_cap);
    CHECK(opt.chi_d >= kChiDCap - 1e-3);
    CHECK(std::abs(opt.K - (-0.00016795)) <= 1e-5);
  }

  SUBCASE("dominance: the optimum beats the canonical and random points") {
    CounterRng rng(31, 0);
    for (int it = 0; it < 50; ++it) {
      const double loss = draw(rng, 0.0, 12.0);
      const double eps = draw(rng, 0.0, 1.0);
      const ChannelModel ch = ChannelModel::from_loss_db(loss, eps);
      const ChiDOptimum opt = optimize_chi_d(40.0, ch);
      // exact by the candidate rule
      CHECK(opt.K >= family_rate(40.0, ch, 0.0));
      CHECK(opt.K >= family_rate(40.0, ch, 1.0));
      // near-exact against arbitrary probes (search resolution slack)
      const double probe = draw(rng, 0.0, kChiDCap);
      CHECK(opt.K >= family_rate(40.0, ch, probe) - 1e-7);
      CHECK(opt.chi_d >= 0.0);
      CHECK(opt.chi_d <= kChiDCap);
    }
  }
}

TEST_CASE("large-V evaluation") {
  SUBCASE("constant functional converges immediately") {
    int calls = 0;
    const double v = large_V_eval([&](double) {
      ++calls;
      return 3.25;
    });
    CHECK(v == 3.25);
    CHECK(calls == 2);  // one doubling suffices for identical values
  }

  SUBCASE("slowly varying functional converges to the limit") {
    const double v = large_V_eval([](double V) { return 1.0 + 1.0 / V; });
    CHECK(v == doctest::Approx(1.0).epsilon(1e-4));
  }

  SUBCASE("divergent functional raises with both trailing values") {
    CHECK_THROWS_AS(large_V_eval([](double V) { return std::log2(V); }),
                    LargeVError);
    try {
      large_V_eval([](double V) { return std::log2(V); });
    } catch (const LargeVError& e) {
      CHECK(e.prev == doctest::Approx(std::log2(kLargeVCap / 2.0)));
      CHECK(e.last == doctest::Approx(std::log2(kLargeVCap)));
    }
  }

  SUBCASE("key rates admit a large-V limit even though I_ab diverges") {
    const ChannelModel ch = ChannelModel::from_loss_db(5.0, 0.1);
    const double k_limit = large_V_eval(
        [&](double V) { return family_rate(V, ch, 1.0); });
    CHECK(std::isfinite(k_limit));
    CHECK(k_limit > 0.0);
  }
}

TEST_CASE("noise-tolerance regression row at 5 dB (large-V)") {
  // One row of the frozen tolerance table; the full table is covered by
  // the acceptance suite.
  const auto eps_of = [](const ProtocolConfig& cfg) {
    return large_V_eval(
        [&](double V) { return tolerable_excess_noise(cfg, 5.0, V); });
  };
  CHECK(eps_of(ProtocolConfig::squeezed_homodyne(40.0)) ==
        doctest::Approx(0.516565144).epsilon(1e-4));
  CHECK(eps_of(ProtocolConfig::squeezed_heterodyne(40.0)) ==
        doctest::Approx(0.595512092).epsilon(1e-4));
  CHECK(eps_of(ProtocolConfig::coherent_homodyne(40.0)) ==
        doctest::Approx(0.221911967).epsilon(1e-4));
  CHECK(eps_of(ProtocolConfig::coherent_heterodyne(40.0)) ==
        doctest::Approx(0.227756202).epsilon(1e-4));
  const double opt = large_V_eval(
      [](double V) { return tolerable_excess_noise_optimal(5.0, V); });
  CHECK(opt == doctest::Approx(0.627369583).epsilon(1e-4));
}

TEST_CASE("preset crossing: unit detector noise wins past ~3.33 dB") {
  // On the eps = 0.5, V = 40 line the chi_D = 1 protocol overtakes the
  // ideal-homodyne one at a single loss threshold.
  const auto diff = [](double db) {
    const ChannelModel ch = ChannelModel::from_loss_db(db, 0.5);
    return family_rate(40.0, ch, 1.0) - family_rate(40.0, ch, 0.0);
  };
  int flips = 0;
  double lo = 0.0, hi = 0.0;
  double prev = diff(0.25);
  for (double db = 0.5; db <= 25.0 + 1e-9; db += 0.25) {
    const double cur = diff(db);
    if ((prev < 0.0) != (cur < 0.0)) {
      ++flips;
      lo = db - 0.25;
      hi = db;
    }
    prev = cur;
  }
  REQUIRE(flips == 1);
  // bisect the bracket to plot precision
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    ((diff(mid) < 0.0) ? lo : hi) = mid;
  }
  CHECK(0.5 * (lo + hi) == doctest::Approx(3.33409502506256).epsilon(1e-6));
}

TEST_CASE("sweeps: validation, consistency, error capture") {
  SUBCASE("spec validation") {
    SweepSpec s;
    s.kind = SweepKind::KeyRates;
    s.loss_db = {1.0, 1.0};
    s.columns = {{"K", ProtocolConfig::squeezed_heterodyne(40.0)}};
    CHECK_THROWS_AS(sweep_curves(s), std::domain_error);

    s.loss_db = {2.0, 1.0};
    CHECK_THROWS_AS(sweep_curves(s), std::domain_error);

    s.loss_db = {1.0, 2.0};
    s.columns.clear();
    CHECK_THROWS_AS(sweep_curves(s), std::domain_error);
  }

  SUBCASE("single-point key-rate sweep equals a direct evaluation") {
    SweepSpec s;
    s.kind = SweepKind::KeyRates;
    s.loss_db = {5.0};
    s.noise_is_epsilon = true;
    s.noise = 0.1;
    s.V = 40.0;
    s.columns = {{"K_new", ProtocolConfig::squeezed_heterodyne(40.0)}};
    const SweepResult r = sweep_curves(s);
    REQUIRE(r.points.size() == 1);
    REQUIRE(r.points[0].values.size() == 1);
    CHECK(r.columns == std::vector<std::string>{"K_new"});
    const double direct = keyrate(ProtocolConfig::squeezed_heterodyne(40.0),
                                  ChannelModel::from_loss_db(5.0, 0.1))
                              .K;
    CHECK(r.points[0].values[0] == direct);  // bit-for-bit same path
    CHECK(r.points[0].T == doctest::Approx(std::pow(10.0, -0.5))
                               .epsilon(1e-15));
    CHECK(r.points[0].error.empty());
  }

  SUBCASE("optimal column equals the optimizer, optimize kind emits both") {
    SweepSpec s;
    s.kind = SweepKind::Optimize;
    s.loss_db = {5.0};
    s.noise = 0.5;
    s.V = 40.0;
    const SweepResult r = sweep_curves(s);
    CHECK(r.columns == std::vector<std::string>{"chi_d_opt", "K_opt"});
    REQUIRE(r.points.size() == 1);
    const ChiDOptimum direct =
        optimize_chi_d(40.0, ChannelModel::from_loss_db(5.0, 0.5));
    CHECK(r.points[0].values[0] == direct.chi_d);
    CHECK(r.points[0].values[1] == direct.K);
  }

  SUBCASE("tolerance sweep equals the root finder") {
    SweepSpec s;
    s.kind = SweepKind::Tolerance;
    s.loss_db = {5.0};
    s.V = 1e5;
    s.columns = {{"eps_max", ProtocolConfig::squeezed_homodyne(40.0)}};
    const SweepResult r = sweep_curves(s);
    const double direct = tolerable_excess_noise(
        ProtocolConfig::squeezed_homodyne(40.0), 5.0, 1e5);
    CHECK(r.points[0].values[0] == direct);
  }

  SUBCASE("empty grid yields headers and no points") {
    SweepSpec s;
    s.kind = SweepKind::KeyRates;
    s.columns = {{"K", ProtocolConfig::squeezed_homodyne(40.0)}};
    const SweepResult r = sweep_curves(s);
    CHECK(r.columns.size() == 1);
    CHECK(r.points.empty());
  }

  SUBCASE("per-point failures are recorded and the sweep continues") {
    // fixed chi_C = 1 is fine at 0 dB but sits below the pure-loss floor
    // at 10 dB, so that point must fail without aborting the sweep
    SweepSpec s;
    s.kind = SweepKind::KeyRates;
    s.loss_db = {0.0, 10.0};
    s.noise_is_epsilon = false;
    s.noise = 1.0;
    s.V = 40.0;
    s.columns = {{"K_hom", ProtocolConfig::squeezed_homodyne(40.0)},
                 {"K_new", ProtocolConfig::squeezed_heterodyne(40.0)}};
    const SweepResult r = sweep_curves(s);
    REQUIRE(r.points.size() == 2);
    CHECK(r.points[0].error.empty());
    CHECK(std::isfinite(r.points[0].values[0]));
    CHECK_FALSE(r.points[1].error.empty());
    CHECK(r.points[1].error.find("K_hom") != std::string::npos);
    CHECK(r.points[1].error.find("K_new") != std::string::npos);
    CHECK(std::isnan(r.points[1].values[0]));
    CHECK(std::isnan(r.points[1].values[1]));
  }

  SUBCASE("optimize-kind failures are recorded too") {
    SweepSpec s;
    s.kind = SweepKind::Optimize;
    s.loss_db = {10.0};
    s.noise_is_epsilon = false;
    s.noise = 1.0;  // below the 10 dB pure-loss floor
    s.V = 40.0;
    const SweepResult r = sweep_curves(s);
    REQUIRE(r.points.size() == 1);
    CHECK_FALSE(r.points[0].error.empty());
    CHECK(std::isnan(r.points[0].values[0]));
    CHECK(std::isnan(r.points[0].values[1]));
  }
}

TEST_CASE("sentinel constant marks the no-finite-tolerance case") {
  CHECK(std::isinf(kNoFiniteTolerance));
  CHECK(kNoFiniteTolerance > 0.0);
}
