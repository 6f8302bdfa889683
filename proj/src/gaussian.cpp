#include "cvqkd/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cvqkd {

namespace {

// Block-diagonal symplectic form for n modes, per-mode [[0,1],[-1,0]].
Eigen::MatrixXd symplectic_form(Eigen::Index dim) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index k = 0; k + 1 < dim; k += 2) {
    omega(k, k + 1) = 1.0;
    omega(k + 1, k) = -1.0;
  }
  return omega;
}

// Raw symplectic eigenvalues of a symmetric matrix: the eigenvalues of
// Omega*gamma come in +/- i*nu pairs, so we take moduli, sort descending
// and average adjacent pairs to deduplicate.
std::vector<double> raw_symplectic_eigenvalues(const Eigen::MatrixXd& m) {
  const Eigen::Index dim = m.rows();
  Eigen::EigenSolver<Eigen::MatrixXd> es(symplectic_form(dim) * m, false);
  if (es.info() != Eigen::Success) {
    throw NumericError("symplectic eigenvalue solve failed to converge");
  }
  std::vector<double> moduli(static_cast<std::size_t>(dim));
  for (Eigen::Index k = 0; k < dim; ++k) {
    moduli[static_cast<std::size_t>(k)] = std::abs(es.eigenvalues()[k]);
  }
  std::sort(moduli.begin(), moduli.end(), std::greater<double>());
  std::vector<double> nu(static_cast<std::size_t>(dim / 2));
  for (std::size_t k = 0; k < nu.size(); ++k) {
    nu[k] = 0.5 * (moduli[2 * k] + moduli[2 * k + 1]);
  }
  return nu;
}

// Keep all rows/columns except the two quadratures of `drop_mode`.
Eigen::MatrixXd drop_mode(const Eigen::MatrixXd& m, int mode) {
  const Eigen::Index dim = m.rows();
  Eigen::MatrixXd out(dim - 2, dim - 2);
  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(dim - 2));
  for (Eigen::Index k = 0; k < dim; ++k) {
    if (k != 2 * mode && k != 2 * mode + 1) keep.push_back(k);
  }
  for (std::size_t r = 0; r < keep.size(); ++r) {
    for (std::size_t c = 0; c < keep.size(); ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          m(keep[r], keep[c]);
    }
  }
  return out;
}

void require_mode(const CovMatrix& state, int mode, const char* what) {
  if (mode < 0 || mode >= state.n_modes()) {
    throw std::domain_error(std::string(what) + ": mode index " +
                            std::to_string(mode) + " out of range for " +
                            std::to_string(state.n_modes()) + " modes");
  }
}

}  // namespace

CovMatrix::CovMatrix(Eigen::MatrixXd entries) : m_(std::move(entries)) {
  if (m_.rows() != m_.cols() || m_.rows() < 2 || m_.rows() % 2 != 0) {
    throw std::domain_error("covariance matrix must be square with even "
                            "dimension >= 2");
  }
  n_modes_ = static_cast<int>(m_.rows() / 2);
  const double asym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= kSymmetryTol)) {
    throw std::domain_error("covariance matrix asymmetry " +
                            std::to_string(asym) + " exceeds tolerance");
  }
  m_ = 0.5 * (m_ + m_.transpose()).eval();  // exact symmetry from here on

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_,
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericError("covariance eigenvalue solve failed to converge");
  }
  const double min_eig = es.eigenvalues().minCoeff();
  if (!(min_eig > -kPositivityTol)) {
    throw std::domain_error("covariance matrix not positive definite "
                            "(min eigenvalue " + std::to_string(min_eig) +
                            ")");
  }

  const auto nu = raw_symplectic_eigenvalues(m_);
  const double min_nu = *std::min_element(nu.begin(), nu.end());
  if (!(min_nu >= 1.0 - kPhysicalityTol)) {
    throw std::domain_error("covariance matrix violates the uncertainty "
                            "bound (min symplectic eigenvalue " +
                            std::to_string(min_nu) + ")");
  }
}

Eigen::Matrix2d CovMatrix::mode_block(int mode) const {
  require_mode(*this, mode, "mode_block");
  return m_.block<2, 2>(2 * mode, 2 * mode);
}

double clamp_physical_eigenvalue(double nu) {
  if (nu >= 1.0) return nu;
  if (nu >= 1.0 - kPhysicalityTol) return 1.0;
  throw NumericError("symplectic eigenvalue " + std::to_string(nu) +
                     " below physical bound 1");
}

double g_entropy(double x) {
  if (x < 0.0) {
    throw std::domain_error("g_entropy: negative mean photon number " +
                            std::to_string(x));
  }
  if (x < 1e-12) return 0.0;  // x log2 x -> 0; avoids log(0)
  return (x + 1.0) * std::log2(x + 1.0) - x * std::log2(x);
}

CovMatrix epr_state(double V) {
  if (!(V >= 1.0)) {
    throw std::domain_error("epr_state: variance V must be >= 1, got " +
                            std::to_string(V));
  }
  const double c = std::sqrt(V * V - 1.0);
  Eigen::Matrix4d m;
  m << V, 0, c, 0,
       0, V, 0, -c,
       c, 0, V, 0,
       0, -c, 0, V;
  return CovMatrix(m);
}

CovMatrix thermal_state(double N) {
  if (!(N >= 1.0)) {
    throw std::domain_error("thermal_state: variance N must be >= 1, got " +
                            std::to_string(N));
  }
  return CovMatrix(N * Eigen::Matrix2d::Identity());
}

CovMatrix vacuum_state() { return thermal_state(1.0); }

CovMatrix tensor(const CovMatrix& a, const CovMatrix& b) {
  const Eigen::Index da = a.dim();
  const Eigen::Index db = b.dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(da + db, da + db);
  m.topLeftCorner(da, da) = a.entries();
  m.bottomRightCorner(db, db) = b.entries();
  return CovMatrix(std::move(m));
}

CovMatrix apply_beamsplitter(const CovMatrix& state, int mode_i, int mode_j,
                             double T) {
  require_mode(state, mode_i, "apply_beamsplitter");
  require_mode(state, mode_j, "apply_beamsplitter");
  if (mode_i == mode_j) {
    throw std::domain_error("apply_beamsplitter: modes must be distinct");
  }
  if (!(T >= 0.0 && T <= 1.0)) {
    throw std::domain_error("apply_beamsplitter: transmittance must lie in "
                            "[0,1], got " + std::to_string(T));
  }
  const double t = std::sqrt(T);
  const double r = std::sqrt(1.0 - T);
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(state.dim(), state.dim());
  const Eigen::Index i = 2 * mode_i;
  const Eigen::Index j = 2 * mode_j;
  // Transmitted port keeps mode_i; the reflected arm picks up a sign.
  s.block<2, 2>(i, i) = t * Eigen::Matrix2d::Identity();
  s.block<2, 2>(i, j) = r * Eigen::Matrix2d::Identity();
  s.block<2, 2>(j, i) = -r * Eigen::Matrix2d::Identity();
  s.block<2, 2>(j, j) = t * Eigen::Matrix2d::Identity();
  return CovMatrix(s * state.entries() * s.transpose());
}

CovMatrix apply_phase(const CovMatrix& state, int mode, double theta) {
  require_mode(state, mode, "apply_phase");
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(state.dim(), state.dim());
  const double c = std::cos(theta);
  const double sn = std::sin(theta);
  s(2 * mode, 2 * mode) = c;
  s(2 * mode, 2 * mode + 1) = sn;
  s(2 * mode + 1, 2 * mode) = -sn;
  s(2 * mode + 1, 2 * mode + 1) = c;
  return CovMatrix(s * state.entries() * s.transpose());
}

CovMatrix homodyne_condition(const CovMatrix& state, QuadratureSelector sel,
                             double added_noise) {
  require_mode(state, sel.mode, "homodyne_condition");
  if (state.n_modes() < 2) {
    throw std::domain_error("homodyne_condition: need at least one "
                            "unmeasured mode");
  }
  if (!(added_noise >= 0.0)) {
    throw std::domain_error("homodyne_condition: added detector noise must "
                            "be >= 0, got " + std::to_string(added_noise));
  }
  const Eigen::Index q = CovMatrix::index(sel);
  // Schur complement against the single measured quadrature.  The measured
  // variance is the (q,q) entry plus detector noise; its Moore-Penrose
  // pseudoinverse is 1/denom when denom > 0 and 0 when the quadrature
  // carries no fluctuations at all (then measuring reveals nothing new).
  const double denom = state(q, q) + added_noise;
  const Eigen::MatrixXd& m = state.entries();
  Eigen::MatrixXd cond = m;
  if (denom > 0.0) {
    cond -= (m.col(q) * m.row(q)) / denom;
  }
  return CovMatrix(drop_mode(cond, sel.mode));
}

CovMatrix heterodyne_condition(const CovMatrix& state, int mode) {
  require_mode(state, mode, "heterodyne_condition");
  if (state.n_modes() < 2) {
    throw std::domain_error("heterodyne_condition: need at least one "
                            "unmeasured mode");
  }
  const Eigen::MatrixXd& m = state.entries();
  const Eigen::Index b = 2 * mode;
  const Eigen::Matrix2d gb =
      m.block<2, 2>(b, b) + Eigen::Matrix2d::Identity();
  // gamma_B + I of a physical state is >= 2*I, so the plain inverse is safe.
  const Eigen::MatrixXd cross = m.middleCols<2>(b);
  Eigen::MatrixXd cond = m - cross * gb.inverse() * cross.transpose();
  return CovMatrix(drop_mode(cond, mode));
}

SymplecticSpectrum symplectic_eigenvalues(const CovMatrix& state) {
  SymplecticSpectrum spec;
  spec.values = raw_symplectic_eigenvalues(state.entries());
  for (double& nu : spec.values) nu = clamp_physical_eigenvalue(nu);
  return spec;
}

double vn_entropy(const CovMatrix& state) {
  const SymplecticSpectrum spec = symplectic_eigenvalues(state);
  double s = 0.0;
  for (double nu : spec.values) s += g_entropy(0.5 * (nu - 1.0));
  return s;
}

double gaussian_mutual_info(const Eigen::Matrix2d& joint) {
  if (std::abs(joint(0, 1) - joint(1, 0)) > kSymmetryTol) {
    throw std::domain_error("gaussian_mutual_info: covariance not symmetric");
  }
  const double va = joint(0, 0);
  const double vb = joint(1, 1);
  const double det = va * vb - joint(0, 1) * joint(1, 0);
  if (!(va > 0.0) || !(vb > 0.0) || !(det > 0.0)) {
    throw std::domain_error("gaussian_mutual_info: covariance not positive "
                            "definite");
  }
  return 0.5 * std::log2(va * vb / det);
}

}  // namespace cvqkd
