#pragma once

#include <optional>

#include "gqfi/gaussian_state.hpp"
#include "gqfi/probes.hpp"

namespace gqfi {

/// Number-basis truncation. n_max = 0 picks a starting cutoff from the
/// state's photon statistics. With auto_grow the cutoff grows by half until the
/// trace deficit and the drift against a smaller working space are both below
/// cutoff_tol.
struct CutoffConfig {
  int n_max = 0;
  double cutoff_tol = 1e-8;
  bool auto_grow = true;
  int max_single_mode = 640;
  int max_two_mode = 48;
};

/// Truncated density matrix of a one- or two-mode state, basis index
/// n_1 * cutoff + n_2 for two modes, held as rho = factor factor^+.
/// Renormalized to unit trace; the mass lost to the truncation is kept in
/// trace_deficit.
struct FockDensityMatrix {
  int modes = 1;
  int cutoff = 0;
  CMatrix factor;
  double trace_deficit = 0.0;
  double drift = 0.0;  ///< bound on the Frobenius change when the working space shrinks

  CMatrix dense() const;
};

/// rho = C(eps) D R S_r S_2 rho_th (...)^+ for the probe, with the channel
/// applied last when given. Operators are exponentials of truncated
/// generators in a working space larger than the cutoff.
FockDensityMatrix fock_build(const ProbeSpec& spec, const CutoffConfig& cfg = {},
                             const std::optional<ChannelSpec>& channel = std::nullopt,
                             double eps = 0.0);

/// First and second moments of a truncated density matrix in complex form.
GaussianState fock_moments(const FockDensityMatrix& rho);

/// (tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2, the squared trace norm of
/// factor_1^+ factor_2. Throws DomainError for mismatched shapes.
double uhlmann_fidelity_fock(const FockDensityMatrix& a, const FockDensityMatrix& b);

/// Dense form of the same quantity. Throws DomainError for mismatched shapes or
/// eigenvalues below -1e-8.
double uhlmann_fidelity_dense(const CMatrix& rho1, const CMatrix& rho2);

struct FockQfi {
  double value = 0.0;
  double value_step = 0.0;         ///< Bures quotient at the step
  double value_double_step = 0.0;  ///< Bures quotient at twice the step
  int cutoff = 0;
  double trace_deficit = 0.0;
};

/// Symmetric Bures finite difference on Fock matrices at one shared cutoff,
/// Richardson-combined over step and 2 step.
FockQfi qfi_fock_fd(const ProbeSpec& spec, const ChannelSpec& channel, double eps,
                    double step = 0.02, const CutoffConfig& cfg = {});

}  // namespace gqfi
