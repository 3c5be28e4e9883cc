#pragma once

#include "gqfi/gaussian_state.hpp"
#include "gqfi/parametrization.hpp"

namespace gqfi {

/// Two-mode fidelity with its determinant ingredients:
/// delta = det(s1 + s2), gamma = det(I + K s1 K s2),
/// lambda = det(s1 + K) det(s2 + K).
struct FidelityBreakdown {
  double value = 0.0;
  double delta = 0.0;
  double gamma = 0.0;
  double lambda = 0.0;
  double displacement_factor = 1.0;
};

/// Uhlmann fidelity of two two-mode Gaussian states. Throws StructuralError
/// when either state is not two-mode and NumericalError when a square-root
/// argument is negative beyond round-off.
FidelityBreakdown two_mode_fidelity(const GaussianState& a, const GaussianState& b);

/// 8 (1 - sqrt F(eps, eps +- step)) / step^2 averaged over both signs.
double bures_qfi_fd(const StateFamily& family, double eps, double step);

}  // namespace gqfi
