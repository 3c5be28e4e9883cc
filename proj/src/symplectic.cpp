#include "gqfi/symplectic.hpp"

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "gqfi/errors.hpp"

namespace gqfi {

CMatrix k_matrix(int modes) {
  CMatrix k = CMatrix::Identity(2 * modes, 2 * modes);
  k.bottomRightCorner(modes, modes) *= -1.0;
  return k;
}

RMatrix omega_matrix(int modes) {
  RMatrix omega = RMatrix::Zero(2 * modes, 2 * modes);
  omega.topRightCorner(modes, modes).setIdentity();
  omega.bottomLeftCorner(modes, modes) = -RMatrix::Identity(modes, modes);
  return omega;
}

CMatrix quadrature_to_mode_unitary(int modes) {
  const double s = 1.0 / std::sqrt(2.0);
  CMatrix u(2 * modes, 2 * modes);
  const CMatrix id = CMatrix::Identity(modes, modes);
  u << s * id, s * kI * id, s * id, -s * kI * id;
  return u;
}

CMatrix exchange_matrix(int modes) {
  CMatrix x = CMatrix::Zero(2 * modes, 2 * modes);
  x.topRightCorner(modes, modes).setIdentity();
  x.bottomLeftCorner(modes, modes).setIdentity();
  return x;
}

SymplecticMatrix SymplecticMatrix::identity(int modes) {
  return SymplecticMatrix(CMatrix::Identity(2 * modes, 2 * modes));
}

SymplecticMatrix SymplecticMatrix::from_blocks(const CMatrix& alpha, const CMatrix& beta) {
  if (alpha.rows() != alpha.cols() || beta.rows() != alpha.rows() ||
      beta.cols() != alpha.cols()) {
    throw StructuralError("symplectic blocks must be square and of equal size");
  }
  const auto n = alpha.rows();
  CMatrix full(2 * n, 2 * n);
  full << alpha, beta, beta.conjugate(), alpha.conjugate();
  return SymplecticMatrix(std::move(full));
}

SymplecticMatrix SymplecticMatrix::from_full(const CMatrix& m, double tol) {
  if (m.rows() != m.cols() || m.rows() % 2 != 0 || m.rows() == 0) {
    throw StructuralError("symplectic matrix must be square with even, nonzero size");
  }
  const int n = static_cast<int>(m.rows() / 2);
  const CMatrix x = exchange_matrix(n);
  const double scale = std::max(1.0, m.norm());
  if ((x * m.conjugate() * x - m).norm() > tol * scale) {
    throw StructuralError("matrix lacks the [[alpha, beta], [conj beta, conj alpha]] structure");
  }
  return from_blocks(m.topLeftCorner(n, n), m.topRightCorner(n, n));
}

CMatrix SymplecticMatrix::alpha() const {
  return full_.topLeftCorner(modes(), modes());
}

CMatrix SymplecticMatrix::beta() const {
  return full_.topRightCorner(modes(), modes());
}

CMatrix SymplecticMatrix::inverse() const {
  const CMatrix k = k_matrix(modes());
  return k * full_.adjoint() * k;
}

double SymplecticMatrix::defect() const {
  const CMatrix k = k_matrix(modes());
  return (full_ * k * full_.adjoint() - k).norm();
}

SymplecticMatrix SymplecticMatrix::operator*(const SymplecticMatrix& other) const {
  if (other.modes() != modes()) {
    throw StructuralError("mode count mismatch in symplectic product");
  }
  return SymplecticMatrix(full_ * other.full_);
}

CMatrix algebra_element(const CMatrix& r_block, const CMatrix& q_block) {
  return SymplecticMatrix::from_blocks(r_block, q_block).full();
}

double algebra_defect(const CMatrix& x) {
  const CMatrix k = k_matrix(static_cast<int>(x.rows() / 2));
  return (x.adjoint() + k * x * k).norm();
}

SymplecticMatrix exp_algebra(const CMatrix& x) {
  const CMatrix e = x.exp();
  // exp preserves the conjugate block structure exactly in exact arithmetic;
  // re-symmetrize to shed rounding.
  const int n = static_cast<int>(x.rows() / 2);
  const CMatrix alpha = 0.5 * (e.topLeftCorner(n, n) + e.bottomRightCorner(n, n).conjugate());
  const CMatrix beta = 0.5 * (e.topRightCorner(n, n) + e.bottomLeftCorner(n, n).conjugate());
  return SymplecticMatrix::from_blocks(alpha, beta);
}

namespace {

void check_mode(int modes, int mode) {
  if (mode < 0 || mode >= modes) throw DomainError("mode index out of range");
}

}  // namespace

CMatrix squeeze_generator(int modes, int mode) {
  check_mode(modes, mode);
  CMatrix x = CMatrix::Zero(2 * modes, 2 * modes);
  x(mode, modes + mode) = -1.0;
  x(modes + mode, mode) = -1.0;
  return x;
}

CMatrix rotation_generator(int modes, int mode) {
  check_mode(modes, mode);
  CMatrix x = CMatrix::Zero(2 * modes, 2 * modes);
  x(mode, mode) = -kI;
  x(modes + mode, modes + mode) = kI;
  return x;
}

CMatrix two_mode_squeeze_generator(int modes, int mode_a, int mode_b) {
  check_mode(modes, mode_a);
  check_mode(modes, mode_b);
  if (mode_a == mode_b) throw DomainError("two-mode squeezing needs distinct modes");
  CMatrix x = CMatrix::Zero(2 * modes, 2 * modes);
  x(mode_a, modes + mode_b) = -1.0;
  x(mode_b, modes + mode_a) = -1.0;
  x(modes + mode_a, mode_b) = -1.0;
  x(modes + mode_b, mode_a) = -1.0;
  return x;
}

SymplecticMatrix squeezer(int modes, int mode, double r) {
  check_mode(modes, mode);
  CMatrix alpha = CMatrix::Identity(modes, modes);
  CMatrix beta = CMatrix::Zero(modes, modes);
  alpha(mode, mode) = std::cosh(r);
  beta(mode, mode) = -std::sinh(r);
  return SymplecticMatrix::from_blocks(alpha, beta);
}

SymplecticMatrix rotation(int modes, int mode, double theta) {
  check_mode(modes, mode);
  CMatrix alpha = CMatrix::Identity(modes, modes);
  alpha(mode, mode) = std::exp(-kI * theta);
  return SymplecticMatrix::from_blocks(alpha, CMatrix::Zero(modes, modes));
}

SymplecticMatrix two_mode_squeezer(int modes, int mode_a, int mode_b, double r) {
  check_mode(modes, mode_a);
  check_mode(modes, mode_b);
  if (mode_a == mode_b) throw DomainError("two-mode squeezing needs distinct modes");
  CMatrix alpha = CMatrix::Identity(modes, modes);
  CMatrix beta = CMatrix::Zero(modes, modes);
  alpha(mode_a, mode_a) = std::cosh(r);
  alpha(mode_b, mode_b) = std::cosh(r);
  beta(mode_a, mode_b) = -std::sinh(r);
  beta(mode_b, mode_a) = -std::sinh(r);
  return SymplecticMatrix::from_blocks(alpha, beta);
}

RMatrix to_real(const SymplecticMatrix& s) {
  const CMatrix u = quadrature_to_mode_unitary(s.modes());
  return (u.adjoint() * s.full() * u).real();
}

SymplecticMatrix from_real(const RMatrix& s_real) {
  if (s_real.rows() != s_real.cols() || s_real.rows() % 2 != 0 || s_real.rows() == 0) {
    throw StructuralError("real symplectic matrix must be square with even size");
  }
  const int n = static_cast<int>(s_real.rows() / 2);
  const RMatrix a = s_real.topLeftCorner(n, n);
  const RMatrix b = s_real.topRightCorner(n, n);
  const RMatrix c = s_real.bottomLeftCorner(n, n);
  const RMatrix d = s_real.bottomRightCorner(n, n);
  const CMatrix alpha = 0.5 * ((a + d).cast<Complex>() + kI * (c - b).cast<Complex>());
  const CMatrix beta = 0.5 * ((a - d).cast<Complex>() + kI * (c + b).cast<Complex>());
  return SymplecticMatrix::from_blocks(alpha, beta);
}

}  // namespace gqfi
