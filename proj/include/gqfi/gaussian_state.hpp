#pragma once

#include <string>
#include <vector>

#include "gqfi/symplectic.hpp"
#include "gqfi/types.hpp"

namespace gqfi {

/// Numerical tolerances for structural checks. Entries marked relative are
/// multiplied by max(1, ||sigma||_F).
struct Tolerances {
  double herm_rel = 1e-10;
  double symp_rel = 1e-10;
  double phys = 1e-8;
  double pair = 1e-8;
  double recon_rel = 1e-9;
  double degen = 1e-8;
};

/// Gaussian state in complex form: displacement d = (d~, conj d~) and
/// covariance sigma_ij = <{dA_i, dA_j^+}> with the vacuum at sigma = I.
class GaussianState {
 public:
  GaussianState() = default;
  /// Throws StructuralError when the sizes are not (2N, 2N x 2N).
  GaussianState(CVector displacement, CMatrix covariance);

  static GaussianState vacuum(int modes);
  /// Builds d = (d~, conj d~).
  static GaussianState from_mode_means(const CVector& mode_means, CMatrix covariance);

  int modes() const { return static_cast<int>(covariance_.rows() / 2); }
  const CVector& displacement() const { return displacement_; }
  const CMatrix& covariance() const { return covariance_; }

  /// First half of the displacement vector, <a_i>.
  CVector mode_means() const { return displacement_.head(modes()); }
  /// sum_i <a_i^+ a_i>.
  double mean_photon_number() const;

  /// T sigma T^+ and T d + shift.
  GaussianState transformed(const SymplecticMatrix& t, const CVector& shift) const;
  GaussianState with_covariance(CMatrix covariance) const;

 private:
  CVector displacement_;
  CMatrix covariance_;
};

/// Real quadrature form: means (x..., p...) and sigma_R = <{dQ, dQ}>.
struct RealGaussianState {
  RVector displacement;
  RMatrix covariance;

  int modes() const { return static_cast<int>(covariance.rows() / 2); }
};

struct ValidationReport {
  bool hermitian = false;
  bool block_structure = false;
  bool displacement_structure = false;
  bool physical = false;
  RVector symplectic_eigenvalues;
  double lambda_min = 0.0;
  std::vector<std::string> messages;

  bool ok() const {
    return hermitian && block_structure && displacement_structure && physical;
  }
};

/// Checks every complex-form invariant. Returns the report when all pass;
/// throws StructuralError for shape/structure failures and
/// UnphysicalStateError when lambda_min < 1 - tol.phys.
ValidationReport validate_state(const GaussianState& state, const Tolerances& tol = {});

/// Same checks without throwing; dimension mismatches still throw.
ValidationReport inspect_state(const GaussianState& state, const Tolerances& tol = {});

GaussianState to_complex(const RealGaussianState& state, const Tolerances& tol = {});
RealGaussianState to_real(const GaussianState& state, const Tolerances& tol = {});

}  // namespace gqfi
