#include "gqfi/gaussian_state.hpp"

#include <cmath>
#include <sstream>

#include "gqfi/errors.hpp"
#include "gqfi/williamson.hpp"

namespace gqfi {

GaussianState::GaussianState(CVector displacement, CMatrix covariance)
    : displacement_(std::move(displacement)), covariance_(std::move(covariance)) {
  if (covariance_.rows() == 0 || covariance_.rows() != covariance_.cols() ||
      covariance_.rows() % 2 != 0) {
    throw StructuralError("covariance must be a nonempty 2N x 2N matrix");
  }
  if (displacement_.size() != covariance_.rows()) {
    throw StructuralError("displacement length must equal 2N");
  }
}

GaussianState GaussianState::vacuum(int modes) {
  if (modes <= 0) throw StructuralError("mode count must be positive");
  return GaussianState(CVector::Zero(2 * modes), CMatrix::Identity(2 * modes, 2 * modes));
}

GaussianState GaussianState::from_mode_means(const CVector& mode_means, CMatrix covariance) {
  CVector d(2 * mode_means.size());
  d << mode_means, mode_means.conjugate();
  return GaussianState(std::move(d), std::move(covariance));
}

double GaussianState::mean_photon_number() const {
  const int n = modes();
  const double vacuum_free = 0.5 * (covariance_.topLeftCorner(n, n).trace().real() - n);
  return vacuum_free + mode_means().squaredNorm();
}

GaussianState GaussianState::transformed(const SymplecticMatrix& t, const CVector& shift) const {
  if (t.modes() != modes()) throw StructuralError("mode count mismatch in transformation");
  CVector d = t.full() * displacement_;
  if (shift.size() != 0) {
    if (shift.size() != d.size()) throw StructuralError("shift length must equal 2N");
    d += shift;
  }
  return GaussianState(std::move(d), t.full() * covariance_ * t.full().adjoint());
}

GaussianState GaussianState::with_covariance(CMatrix covariance) const {
  return GaussianState(displacement_, std::move(covariance));
}

ValidationReport inspect_state(const GaussianState& state, const Tolerances& tol) {
  ValidationReport report;
  const int n = state.modes();
  const CMatrix& sigma = state.covariance();
  const double scale = std::max(1.0, sigma.norm());

  const double herm_err = (sigma - sigma.adjoint()).norm();
  report.hermitian = herm_err <= tol.herm_rel * scale;
  if (!report.hermitian) {
    std::ostringstream os;
    os << "covariance not Hermitian (||sigma - sigma^+|| = " << herm_err << ")";
    report.messages.push_back(os.str());
  }

  const CMatrix x = exchange_matrix(n);
  const double block_err = (x * sigma.conjugate() * x - sigma).norm();
  report.block_structure = block_err <= tol.herm_rel * scale;
  if (!report.block_structure) {
    report.messages.push_back("covariance lacks the [[X, Y], [conj Y, conj X]] structure");
  }

  const CVector& d = state.displacement();
  const double d_err = (d.tail(n) - d.head(n).conjugate()).norm();
  report.displacement_structure = d_err <= tol.herm_rel * std::max(1.0, d.norm());
  if (!report.displacement_structure) {
    report.messages.push_back("displacement second half is not the conjugate of the first");
  }

  if (report.hermitian && report.block_structure) {
    try {
      report.symplectic_eigenvalues = symplectic_eigenvalues(sigma, tol);
      report.lambda_min = report.symplectic_eigenvalues.minCoeff();
      report.physical = report.lambda_min >= 1.0 - tol.phys;
      if (!report.physical) {
        std::ostringstream os;
        os << "smallest symplectic eigenvalue " << report.lambda_min << " < 1";
        report.messages.push_back(os.str());
      }
    } catch (const UnphysicalStateError& e) {
      report.physical = false;
      report.messages.push_back(e.what());
    }
  }
  return report;
}

ValidationReport validate_state(const GaussianState& state, const Tolerances& tol) {
  ValidationReport report = inspect_state(state, tol);
  if (!report.hermitian || !report.block_structure || !report.displacement_structure) {
    throw StructuralError(report.messages.front());
  }
  if (!report.physical) throw UnphysicalStateError(report.messages.front());
  return report;
}

GaussianState to_complex(const RealGaussianState& state, const Tolerances& tol) {
  const RMatrix& s = state.covariance;
  if (s.rows() == 0 || s.rows() != s.cols() || s.rows() % 2 != 0) {
    throw StructuralError("real covariance must be a nonempty 2N x 2N matrix");
  }
  if (state.displacement.size() != s.rows()) {
    throw StructuralError("real displacement length must equal 2N");
  }
  if ((s - s.transpose()).norm() > tol.herm_rel * std::max(1.0, s.norm())) {
    throw StructuralError("real covariance is not symmetric");
  }
  const CMatrix u = quadrature_to_mode_unitary(state.modes());
  CMatrix sigma = u * s.cast<Complex>() * u.adjoint();
  sigma = 0.5 * (sigma + sigma.adjoint()).eval();
  CVector d = u * state.displacement.cast<Complex>();
  return GaussianState(std::move(d), std::move(sigma));
}

RealGaussianState to_real(const GaussianState& state, const Tolerances& tol) {
  const ValidationReport report = inspect_state(state, tol);
  if (!report.hermitian || !report.block_structure || !report.displacement_structure) {
    throw StructuralError("state is not a valid complex-form Gaussian state");
  }
  const CMatrix u = quadrature_to_mode_unitary(state.modes());
  const CMatrix s = u.adjoint() * state.covariance() * u;
  RealGaussianState out;
  out.covariance = s.real();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  out.displacement = (u.adjoint() * state.displacement()).real();
  return out;
}

}  // namespace gqfi
