#pragma once

#include <complex>

#include <Eigen/Dense>

namespace gqfi {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

/// Conjugate transpose, spelled the way the formulas read.
inline CMatrix dag(const CMatrix& m) { return m.adjoint(); }

/// Trace of a matrix known to be real in exact arithmetic.
inline double real_trace(const CMatrix& m) { return m.trace().real(); }

}  // namespace gqfi
