#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gqfi/gaussian_state.hpp"
#include "gqfi/symplectic.hpp"

namespace gqfi {

/// Positive members of the +-lambda eigenvalue pairs of K sigma, sorted
/// descending. Computed from the Hermitian matrix sigma^{1/2} K sigma^{1/2},
/// which is similar to K sigma.
///
/// Throws UnphysicalStateError if sigma is not positive definite and
/// StructuralError if the spectrum does not pair up within tol.pair.
RVector symplectic_eigenvalues(const CMatrix& sigma, const Tolerances& tol = {});

/// Two-mode closed form lambda_{1,2} = 1/2 sqrt(tr A^2 +- sqrt((tr A^2)^2 - 16 det A)),
/// A = K sigma; returns (larger, smaller).
std::pair<double, double> symplectic_eigenvalues_two_mode(const CMatrix& sigma);

/// Records how the phase freedom of S was fixed.
struct GaugeTag {
  /// Half-open index ranges [first, last) of clusters of symplectic eigenvalues
  /// closer than tol.degen. Within such a cluster S is only fixed up to a
  /// unitary mixing, and numerical S-derivatives are not meaningful.
  std::vector<std::pair<int, int>> degenerate_blocks;
  bool supplied = false;  ///< factors were handed in by the caller, not decomposed

  bool degenerate() const { return !degenerate_blocks.empty(); }
};

/// sigma = S D S^+ with D = diag(L, L), L = diag(eigenvalues).
struct WilliamsonFactors {
  SymplecticMatrix symplectic;
  RVector eigenvalues;
  GaugeTag gauge;

  int modes() const { return static_cast<int>(eigenvalues.size()); }
  /// diag(L, L).
  CMatrix diagonal() const;
  CMatrix reconstruct() const;
};

/// Williamson decomposition with deterministic gauge: eigenvalues descending;
/// column i of S is the +lambda_i eigenvector of sigma K normalized to
/// s^+ K s = 1, its phase chosen so that the largest-magnitude entry of the
/// alpha column is real positive (lowest row wins ties). Degenerate clusters
/// are K-orthonormalized by modified Gram-Schmidt and listed in the tag.
WilliamsonFactors williamson_decompose(const CMatrix& sigma, const Tolerances& tol = {});

/// Index clusters of `values` (sorted) whose neighbours differ by less than `tol`.
std::vector<std::pair<int, int>> degenerate_clusters(const RVector& values, double tol);

}  // namespace gqfi
