#pragma once

// Root finding, 1-D optimization, and grid sweeps over the key-rate
// functions: tolerable excess noise (where K crosses zero), the
// rate-maximizing detector noise chi_D, and the tabulated curves behind
// the standard loss/noise plots.

#include "cvqkd/rates.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace cvqkd {

// Search/termination constants.  Chosen well below plot resolution so that
// regression files stay stable; see the README for the golden-file policy.
inline constexpr double kEpsilonIntervalTol = 1e-6;  // bisection width in eps
inline constexpr double kRateRootTol = 1e-9;         // |K| counts as zero
inline constexpr double kEpsilonSearchMax = 10.0;    // bracket expansion cap
inline constexpr double kChiDCap = 50.0;             // chi_D search interval
inline constexpr double kChiDTol = 1e-5;             // golden-section width
inline constexpr double kLargeVRelTol = 1e-3;        // doubling convergence
inline constexpr double kLargeVStart = 1e5;
inline constexpr double kLargeVCap = 1.6e6;

// Sentinel for "no finite tolerance": K stays positive up to the epsilon
// search cap.
inline constexpr double kNoFiniteTolerance =
    std::numeric_limits<double>::infinity();

// Largest excess noise epsilon at which the protocol still yields K > 0 at
// the given loss, found by bisection (interval <= kEpsilonIntervalTol or
// |K| <= kRateRootTol).  Returns 0 when K(eps=0) <= 0 already and
// kNoFiniteTolerance when K is still positive at eps = kEpsilonSearchMax.
// The V argument overrides config.V (the large-V procedure sweeps it).
double tolerable_excess_noise(const ProtocolConfig& config, double loss_db,
                              double V);

// Same zero crossing for the optimal-chi_D protocol: at each epsilon the
// rate is first maximized over Bob's added noise.
double tolerable_excess_noise_optimal(double loss_db, double V);

struct ChiDOptimum {
  double chi_d = 0.0;
  double K = 0.0;
  // True when the optimum sits at the chi_D search cap, i.e. the real
  // argmax may lie beyond it.  Callers surface this as a warning.
  bool at_cap = false;
};

// Maximize K(chi_D) for the squeezed/noisy-homodyne family over
// [0, kChiDCap]: coarse 65-point scan, golden-section refinement to
// kChiDTol, and explicit candidate checks at chi_D = 0 and 1 so the
// dominance guarantees K_opt >= max(K(0), K(1)) hold exactly.  Flat
// regions resolve to the smallest optimal chi_D.
ChiDOptimum optimize_chi_d(double V, const ChannelModel& channel);

// Raised when the large-V doubling procedure fails to converge; carries
// the last two evaluations.
class LargeVError : public NumericError {
 public:
  LargeVError(double prev, double last);
  double prev;
  double last;
};

// Evaluate a V -> value functional in the V -> infinity regime: start at
// V = kLargeVStart, double until two successive values agree to rel_tol
// (relative to the larger magnitude), give up past kLargeVCap.  Returns
// the latest value.
double large_V_eval(const std::function<double(double)>& f,
                    double rel_tol = kLargeVRelTol);

enum class SweepKind { KeyRates, Tolerance, Optimize };

// Declarative description of one curve sweep over a loss grid.
struct SweepSpec {
  SweepKind kind = SweepKind::KeyRates;
  std::vector<double> loss_db;  // strictly increasing
  bool noise_is_epsilon = true; // channel noise given as epsilon or chi_C
  double noise = 0.0;           // ignored by Tolerance sweeps
  double V = 40.0;
  bool large_V = false;         // use the doubling procedure instead of V

  // One output column: a protocol (V is overridden by the spec) or, when
  // config is empty, the optimal-chi_D protocol.  Optimize sweeps ignore
  // columns (they always emit chi_d_opt and K_opt).
  struct Column {
    std::string label;
    std::optional<ProtocolConfig> config;
  };
  std::vector<Column> columns;

  void validate() const;
};

struct CurvePoint {
  double loss_db = 0.0;
  double T = 1.0;
  std::vector<double> values;  // parallel to SweepResult::columns
  std::string error;           // non-empty if any column failed (values NaN)
};

struct SweepResult {
  std::vector<std::string> columns;  // headers, excluding loss_db and T
  std::vector<CurvePoint> points;
};

// Evaluate the spec point by point.  Per-point failures are recorded in
// CurvePoint::error and the sweep continues.  Deterministic given spec.
SweepResult sweep_curves(const SweepSpec& spec);

}  // namespace cvqkd
