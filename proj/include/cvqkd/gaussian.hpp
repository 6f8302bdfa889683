#pragma once

// Phase-space toolbox for Gaussian states of n bosonic modes.
//
// States are represented by their covariance matrix in shot-noise units
// (vacuum variance = 1) with quadratures ordered (x1, p1, x2, p2, ...).
// The symplectic form is block-diagonal with per-mode blocks [[0,1],[-1,0]].
// A symmetric matrix is a physical covariance matrix iff all symplectic
// eigenvalues (moduli of the eigenvalues of i*Omega*gamma, deduplicated)
// are >= 1; entropy and conditioning formulas below assume that normal
// form throughout.

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace cvqkd {

// Numerical tolerances shared by the validation layers.  Symmetry and
// positivity are checked against exact-arithmetic expectations; physicality
// gets a looser band because symplectic spectra of deeply conditioned or
// strongly squeezed states pick up O(kappa * eps_machine) rounding.
inline constexpr double kSymmetryTol = 1e-12;
inline constexpr double kPositivityTol = 1e-12;
inline constexpr double kPhysicalityTol = 1e-9;

// Raised when a computation leaves the numerically trustworthy regime
// (failed eigensolve, negative discriminant beyond tolerance, ...), as
// opposed to std::domain_error which flags invalid caller input.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Quadrature { X, P };

// Addresses a single quadrature of a single mode, e.g. for homodyne
// conditioning.  Modes are zero-indexed.
struct QuadratureSelector {
  int mode = 0;
  Quadrature quad = Quadrature::X;
};

// Validated covariance matrix.  Construction enforces symmetry (to
// kSymmetryTol, then symmetrizes), positive definiteness (eigenvalues
// > -kPositivityTol) and physicality (symplectic eigenvalues
// >= 1 - kPhysicalityTol).  Invalid input raises std::domain_error.
class CovMatrix {
 public:
  explicit CovMatrix(Eigen::MatrixXd entries);

  int n_modes() const { return n_modes_; }
  Eigen::Index dim() const { return m_.rows(); }
  const Eigen::MatrixXd& entries() const { return m_; }
  double operator()(Eigen::Index r, Eigen::Index c) const { return m_(r, c); }

  // 2x2 diagonal block of a single mode.
  Eigen::Matrix2d mode_block(int mode) const;

  static Eigen::Index x_index(int mode) { return 2 * mode; }
  static Eigen::Index p_index(int mode) { return 2 * mode + 1; }
  static Eigen::Index index(QuadratureSelector sel) {
    return 2 * sel.mode + (sel.quad == Quadrature::X ? 0 : 1);
  }

 private:
  Eigen::MatrixXd m_;
  int n_modes_;
};

// Symplectic spectrum of a state: one value per mode, sorted descending.
// Values within kPhysicalityTol below 1 are clamped up to exactly 1 so the
// entropy formulas never see a (spuriously) sub-vacuum eigenvalue.
struct SymplecticSpectrum {
  std::vector<double> values;
};

// von Neumann entropy kernel in bits: g(x) = (x+1)log2(x+1) - x log2 x,
// the entropy of a thermal state with x mean photons.  g(0) = 0; negative
// input raises std::domain_error.
double g_entropy(double x);

// Snap an eigenvalue sitting within kPhysicalityTol below 1 up to exactly
// 1 (rounding residue); anything further below raises NumericError.
double clamp_physical_eigenvalue(double nu);

// Two-mode squeezed vacuum with quadrature variance V >= 1: diagonal
// blocks V*I, off-diagonal sqrt(V^2-1)*diag(1,-1).  V = 1 gives two vacua.
CovMatrix epr_state(double V);

// Single thermal mode of variance N >= 1 (N = 1 is vacuum).
CovMatrix thermal_state(double N);
CovMatrix vacuum_state();

// Tensor product (covariances compose as a direct sum).
CovMatrix tensor(const CovMatrix& a, const CovMatrix& b);

// Beamsplitter of transmittance T in [0,1] mixing modes i and j.  Mode i
// is the transmitted port: for T = 1 the state is unchanged, for T = 0 the
// modes swap (up to the sign convention of the reflected arm).
CovMatrix apply_beamsplitter(const CovMatrix& state, int mode_i, int mode_j,
                             double T);

// Phase rotation of one mode by theta (2x2 rotation acting on (x,p)).
CovMatrix apply_phase(const CovMatrix& state, int mode, double theta);

// State of the remaining modes after a homodyne detection of the selected
// quadrature.  `added_noise` >= 0 is extra classical variance on the
// detector (chi_m, in shot-noise units); the conditioning uses the
// Moore-Penrose pseudoinverse of the measured-quadrature variance so a
// perfectly squeezed direction is handled gracefully.  The conditional
// covariance is outcome-independent.
CovMatrix homodyne_condition(const CovMatrix& state, QuadratureSelector sel,
                             double added_noise = 0.0);

// State of the remaining modes after a heterodyne detection (both
// quadratures, one unit of vacuum noise each) of one mode:
// gamma_A - C (gamma_B + I)^{-1} C^T.
CovMatrix heterodyne_condition(const CovMatrix& state, int mode);

// Symplectic eigenvalues of a validated state, descending, clamped to
// >= 1 within kPhysicalityTol (values below that band raise NumericError).
SymplecticSpectrum symplectic_eigenvalues(const CovMatrix& state);

// von Neumann entropy in bits: sum of g((nu_i - 1)/2) over the symplectic
// spectrum.  Zero (to rounding) for pure states.
double vn_entropy(const CovMatrix& state);

// Mutual information in bits of two jointly Gaussian scalars with the
// given 2x2 covariance: I = (1/2) log2( var(a) var(b) / det ).  Raises
// std::domain_error if the matrix is not symmetric positive definite.
double gaussian_mutual_info(const Eigen::Matrix2d& joint);

}  // namespace cvqkd
