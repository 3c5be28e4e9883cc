#pragma once

// Reference values computed along paths that share no code with the QFI
// formulas under test.

#include <cmath>

#include <Eigen/Dense>

#include "gqfi/gaussian_state.hpp"

namespace gqfi::testing {

/// Real quadrature form, built here from scratch: Q = (x..., p...) with
/// x = (a + a^+)/sqrt 2, p = (a - a^+)/(i sqrt 2).
inline CMatrix quadrature_unitary(int n) {
  const double s = 1.0 / std::sqrt(2.0);
  CMatrix u = CMatrix::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    u(i, i) = s;
    u(i, i + n) = Complex(0.0, s);
    u(i + n, i) = s;
    u(i + n, i + n) = Complex(0.0, -s);
  }
  return u;
}

// Single-mode Gaussian fidelity in real form (vacuum = I):
// F = 2 / (sqrt(D + d) - sqrt(d)) exp(-u^T (V1 + V2)^{-1} u),
// D = det(V1 + V2), d = (det V1 - 1)(det V2 - 1).
inline double single_mode_fidelity(const GaussianState& a, const GaussianState& b) {
  const CMatrix u = quadrature_unitary(1);
  const RMatrix v1 = (u.adjoint() * a.covariance() * u).real();
  const RMatrix v2 = (u.adjoint() * b.covariance() * u).real();
  const RVector du = (u.adjoint() * (a.displacement() - b.displacement())).real();
  const double big = (v1 + v2).determinant();
  const double small = (v1.determinant() - 1.0) * (v2.determinant() - 1.0);
  return 2.0 / (std::sqrt(big + small) - std::sqrt(small)) *
         std::exp(-du.dot((v1 + v2).inverse() * du));
}

/// Mixed-state QFI in real form by the vectorized Lyapunov solution
/// 1/2 vec(V')^T (V (x) V - W (x) W)^{-1} vec(V') + 2 d'^T V^{-1} d'.
inline double real_form_qfi(const CMatrix& sigma, const CMatrix& sigma_dot, const CVector& d_dot) {
  const int n = static_cast<int>(sigma.rows() / 2);
  const CMatrix u = quadrature_unitary(n);
  const RMatrix v = (u.adjoint() * sigma * u).real();
  const RMatrix vd = (u.adjoint() * sigma_dot * u).real();
  const RVector dd = (u.adjoint() * d_dot).real();
  RMatrix w = RMatrix::Zero(2 * n, 2 * n);
  w.topRightCorner(n, n).setIdentity();
  w.bottomLeftCorner(n, n) = -RMatrix::Identity(n, n);

  const int m = 2 * n;
  RMatrix big(m * m, m * m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      big.block(i * m, j * m, m, m) = v(i, j) * v - w(i, j) * w;
    }
  }
  const RVector vec = Eigen::Map<const RVector>(vd.data(), m * m);
  const RVector sol = big.fullPivLu().solve(vec);
  return 0.5 * vec.dot(sol) + 2.0 * dd.dot(v.ldlt().solve(dd));
}

/// Squeezing channel on a one-mode squeezed rotated displaced thermal probe,
/// written out from its closed form independently of the library.
inline double squeezing_channel_reference(double lambda, double r, double theta, double d_abs,
                                          double phi) {
  const double ch = std::cosh(r), sh = std::sinh(r);
  return 4.0 * lambda * lambda / (lambda * lambda + 1.0) *
             (std::pow(ch, 4) + std::pow(sh, 4) -
              2.0 * std::cos(4.0 * theta) * ch * ch * sh * sh) +
         4.0 * d_abs * d_abs / lambda *
             (std::cosh(2.0 * r) + std::cos(2.0 * (theta - phi)) * std::sinh(2.0 * r));
}

}  // namespace gqfi::testing
