#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "gqfi/gaussian_state.hpp"
#include "gqfi/parametrization.hpp"

namespace gqfi {

/// One mode of a probe: thermal occupation, squeezing, rotation and a
/// displacement d_abs * e^{i d_phase}, applied in the order
/// thermal -> squeeze -> rotate -> displace.
struct ModeProbe {
  double n_th = 0.0;
  double r = 0.0;
  double theta = 0.0;
  double d_abs = 0.0;
  double d_phase = 0.0;

  double lambda() const { return 1.0 + 2.0 * n_th; }
  Complex displacement() const { return std::polar(d_abs, d_phase); }
};

/// Product probe; with two modes an optional two-mode squeezer acts on the
/// thermal state before the single-mode operations.
struct ProbeSpec {
  std::vector<ModeProbe> modes{ModeProbe{}};
  double two_mode_squeezing = 0.0;

  int count() const { return static_cast<int>(modes.size()); }
  /// Throws DomainError for negative occupations or an unsupported layout.
  void validate() const;
};

enum class ChannelKind { squeeze, rotate, displace, two_mode_squeeze };
std::string_view to_string(ChannelKind kind);

/// eps-dependent Gaussian channel. Displacement channels shift mode `mode`
/// by eps * direction; the others apply exp(eps X) for their generator X.
struct ChannelSpec {
  ChannelKind kind = ChannelKind::squeeze;
  int mode = 0;
  int mode_b = 1;  ///< second mode of a two-mode squeezer
  Complex direction{1.0, 0.0};

  /// Algebra element of the channel on `modes` modes (zero for displacements).
  CMatrix generator(int modes) const;
  /// Drift vector eps * (delta, conj delta) for displacements, empty otherwise.
  CVector drift(int modes) const;
};

/// R_theta S_r per mode, times the two-mode squeezer when present.
SymplecticMatrix probe_symplectic(const ProbeSpec& spec);
WilliamsonFactors probe_williamson(const ProbeSpec& spec);
GaussianState build_probe(const ProbeSpec& spec);

/// Generator-tier family eps -> channel(eps) applied to the probe, with the
/// probe's Williamson factors passed through.
StateFamily apply_channel_family(const ProbeSpec& spec, const ChannelSpec& channel);
StateFamily apply_channel_family(const GaussianState& state, const ChannelSpec& channel);

/// n = |d|^2 + n_th + (1 + 2 n_th) sinh^2 r.
double probe_photon_number(const ModeProbe& probe);

/// Closed-form QFI of the one-mode squeezing channel for a single-mode probe.
double squeezing_channel_qfi_closed(const ModeProbe& probe);
/// Its maximum over theta and the displacement phase.
double squeezing_channel_qfi_optimal(double lambda, double r, double d_abs);

/// Squeezing that multiplies the vacuum-probe QFI by 10^k.
double enhancement_squeezing_for_orders(double k);

enum class OptimumStatus { interior_maximum, boundary, increasing_without_bound };
std::string_view to_string(OptimumStatus status);

struct ThermalOptimum {
  double lambda = 1.0;
  OptimumStatus status = OptimumStatus::boundary;
  double residual = 0.0;  ///< |lambda^3/(lambda^2+1)^2 - rhs| at the returned lambda
  double qfi = 0.0;       ///< optimal-probe QFI at the returned lambda
};

/// Thermal symplectic eigenvalue maximizing the optimal-probe QFI at fixed
/// r and |d|. Solves lambda^3/(lambda^2+1)^2 = |d|^2 e^{2r} / (2 cosh^2 2r)
/// by bisection and reports boundary behaviour when no interior root wins.
ThermalOptimum optimal_thermal_occupation(double r, double d_abs);

/// Best QFI at total photon number n split into thermal n_th and displacement
/// n_d photons. Throws DomainError unless 0 <= n_th, n_d and n_th + n_d <= n.
double qfi_max_photon_budget(double n, double n_th, double n_d);

struct BudgetOptimum {
  double n_th = 0.0;
  double n_d = 0.0;
  double value = 0.0;
};

/// Grid search over the feasible simplex followed by a local refinement.
BudgetOptimum photon_budget_argmax(double n, double step = 1e-2);

/// Points c + sigma_R^{1/2} (cos t, sin t), t = 2 pi k / n, of a one-mode state.
std::vector<std::array<double, 2>> ellipse_export(const GaussianState& state, int n_points);
/// Area of the ellipse through `points` (shoelace area rescaled for the
/// inscribed polygon).
double ellipse_area(const std::vector<std::array<double, 2>>& points);

}  // namespace gqfi
