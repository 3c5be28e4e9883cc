#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gqfi/parametrization.hpp"

namespace gqfi {

enum class QfiMethod {
  two_mode_covariance,
  two_mode_williamson,
  series,
  multimode_williamson,
  isothermal,
  pure_point,
  regularized,
  bures_fd,
  fock_fd,
};

std::string_view to_string(QfiMethod method);
/// Accepts the names produced by to_string; returns nullopt otherwise.
std::optional<QfiMethod> method_from_string(std::string_view name);

/// How lambda_dot^2 / (lambda^2 - 1) is read at a pure mode: as lambda_ddot
/// (`paper`, the continuous choice) or as 0.
enum class PureConvention { paper, zero };

struct QfiOptions {
  Tolerances tolerances;
  FdConfig fd;
  double tol_pure = 1e-9;  ///< lambda <= 1 + tol_pure counts as a pure mode
  PureConvention convention = PureConvention::paper;
  double series_tol = 1e-12;
  std::optional<long> max_order;  ///< fixes the series order instead of series_tol
  long hard_cap = 1'000'000;
  double tol_iso = 1e-8;  ///< relative ||A^2 - nu^2 I|| for iso-thermal detection
  double bures_step = 1e-3;
};

struct QfiDiagnostics {
  RVector eigenvalues;  ///< symplectic eigenvalues at eps, descending
  double lambda_min = 0.0;
  std::optional<long> truncation_order;
  std::optional<double> remainder_bound;  ///< series tail bound alone
  std::vector<double> nu_path;
  std::vector<double> nu_values;
  std::optional<DerivativeTier> tier;
  std::vector<bool> pure_modes;  ///< indexed like `eigenvalues`
  std::string route;
  std::vector<std::string> warnings;
};

struct QfiEstimate {
  double value = 0.0;
  QfiMethod method = QfiMethod::series;
  /// Bound on |value - H|: the series remainder plus a floating-point allowance.
  std::optional<double> error_bound;
  QfiDiagnostics diagnostics;
};

// Point formulas. They take the local data directly and do no purity checks.

/// 2 d_dot^+ sigma^{-1} d_dot.
double displacement_term(const CMatrix& sigma, const CVector& d_dot);

/// Covariance-form two-mode QFI; `lambda`, `lambda_dot` hold (lambda_1, lambda_2).
double two_mode_covariance_formula(const CMatrix& sigma, const CMatrix& sigma_dot,
                                   const CVector& d_dot, const RVector& lambda,
                                   const RVector& lambda_dot);

/// Two-mode QFI from Williamson data D0 = diag(L, L), D1 = diag(L_dot, L_dot) and P1.
double two_mode_williamson_formula(const RVector& lambda, const RVector& lambda_dot,
                                   const CMatrix& p1, const CMatrix& sigma,
                                   const CVector& d_dot);

/// N-mode Williamson form. Pure modes (lambda <= 1 + tol_pure) follow
/// `convention`; the `paper` convention needs `lambda_ddot`.
double multimode_williamson_formula(const RVector& lambda, const RVector& lambda_dot,
                                    const std::optional<RVector>& lambda_ddot,
                                    const P1Blocks& p1, const CMatrix& sigma,
                                    const CVector& d_dot, double tol_pure,
                                    PureConvention convention);

/// tr[(A^{-n} A_dot)^2] for n = 1..order, A = K sigma.
std::vector<double> series_terms(const CMatrix& sigma, const CMatrix& sigma_dot, long order);

/// tr[(A A_dot)^2] / (2 lambda_min^{2M+2} (lambda_min^2 - 1)); +inf when lambda_min <= 1.
double series_remainder_bound(const CMatrix& sigma, const CMatrix& sigma_dot, long order,
                              const Tolerances& tol = {});
double series_remainder_bound(const StateFamily& family, double eps, long order,
                              const QfiOptions& opts = {});

/// 1/2 tr[sigma_dot Y] + 2 d_dot^+ sigma^{-1} d_dot with sigma_dot = sigma Y sigma - K Y K
/// solved directly as a (2N)^2 linear system.
double stein_qfi(const CMatrix& sigma, const CMatrix& sigma_dot, const CVector& d_dot);

// Family-level methods.

QfiEstimate qfi_two_mode(const StateFamily& family, double eps, const QfiOptions& opts = {});
QfiEstimate qfi_two_mode_williamson(const StateFamily& family, double eps,
                                    const QfiOptions& opts = {});
QfiEstimate qfi_series(const StateFamily& family, double eps, const QfiOptions& opts = {});
QfiEstimate qfi_multimode_williamson(const StateFamily& family, double eps,
                                     const QfiOptions& opts = {});
QfiEstimate qfi_isothermal(const StateFamily& family, double eps, const QfiOptions& opts = {});
QfiEstimate qfi_pure_point(const StateFamily& family, double eps, const QfiOptions& opts = {});

/// Pure-point handling by regularization. The analytic path uses the
/// Williamson form; without P1 it extrapolates H(nu sigma) to nu = 1.
QfiEstimate qfi_regularized(const StateFamily& family, double eps, const QfiOptions& opts = {});
/// Always the nu-ladder path.
QfiEstimate qfi_regularized_ladder(const StateFamily& family, double eps,
                                   const QfiOptions& opts = {});

QfiEstimate qfi_bures(const StateFamily& family, double eps, const QfiOptions& opts = {});

/// Picks the cheapest applicable method; diagnostics.route names the path and
/// the warnings list any routes that were tried and rejected.
QfiEstimate qfi_auto(const StateFamily& family, double eps, const QfiOptions& opts = {});

QfiEstimate qfi_by_method(QfiMethod method, const StateFamily& family, double eps,
                          const QfiOptions& opts = {});

}  // namespace gqfi
