#pragma once

#include "gqfi/types.hpp"

namespace gqfi {

/// K = diag(I, -I): commutator of the mode-operator vector (a_1..a_N, a_1^+..a_N^+).
CMatrix k_matrix(int modes);

/// Real symplectic form [[0, I], [-I, 0]] for the quadrature ordering (x..., p...).
RMatrix omega_matrix(int modes);

/// Unitary U with A = U Q, mapping quadratures (x..., p...) to mode operators.
CMatrix quadrature_to_mode_unitary(int modes);

/// Exchange matrix [[0, I], [I, 0]]; conj(M) = X M X for every complex-form
/// covariance or symplectic matrix M.
CMatrix exchange_matrix(int modes);

/// Complex-form symplectic matrix [[alpha, beta], [conj(beta), conj(alpha)]].
class SymplecticMatrix {
 public:
  SymplecticMatrix() = default;

  static SymplecticMatrix identity(int modes);
  static SymplecticMatrix from_blocks(const CMatrix& alpha, const CMatrix& beta);
  /// Accepts a full 2N x 2N matrix; throws StructuralError if the conjugate
  /// block structure is violated by more than `tol` (Frobenius, relative).
  static SymplecticMatrix from_full(const CMatrix& m, double tol = 1e-10);

  int modes() const { return static_cast<int>(full_.rows() / 2); }
  const CMatrix& full() const { return full_; }
  CMatrix alpha() const;
  CMatrix beta() const;

  /// S^{-1} = K S^+ K.
  CMatrix inverse() const;
  /// ||S K S^+ - K||_F.
  double defect() const;

  SymplecticMatrix operator*(const SymplecticMatrix& other) const;

 private:
  explicit SymplecticMatrix(CMatrix full) : full_(std::move(full)) {}
  CMatrix full_;
};

/// Lie-algebra element [[R, Q], [conj(Q), conj(R)]].
CMatrix algebra_element(const CMatrix& r_block, const CMatrix& q_block);

/// ||X^+ + K X K||_F, zero for members of the symplectic algebra.
double algebra_defect(const CMatrix& x);

/// exp(X) for an algebra element X.
SymplecticMatrix exp_algebra(const CMatrix& x);

// One-parameter generators, complex form. exp(r * squeeze_generator) is the
// squeezer [[cosh r, -sinh r], [-sinh r, cosh r]] on `mode`.
CMatrix squeeze_generator(int modes, int mode);
CMatrix rotation_generator(int modes, int mode);
CMatrix two_mode_squeeze_generator(int modes, int mode_a, int mode_b);

SymplecticMatrix squeezer(int modes, int mode, double r);
SymplecticMatrix rotation(int modes, int mode, double theta);
SymplecticMatrix two_mode_squeezer(int modes, int mode_a, int mode_b, double r);

/// Real-form symplectic matrix S_R = U^+ S U.
RMatrix to_real(const SymplecticMatrix& s);
/// Inverse of to_real; throws StructuralError if `s_real` is not square of even size.
SymplecticMatrix from_real(const RMatrix& s_real);

}  // namespace gqfi
