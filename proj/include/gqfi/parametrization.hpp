#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "gqfi/gaussian_state.hpp"
#include "gqfi/williamson.hpp"

namespace gqfi {

/// Central-difference steps. Unset steps default to cbrt(machine eps) and
/// machine eps^{1/4}, both scaled by max(1, |eps|).
struct FdConfig {
  std::optional<double> step_first;
  std::optional<double> step_second;

  double first_step(double eps) const;
  double second_step(double eps) const;
};

enum class DerivativeTier { analytic, generator, finite_difference };
std::string_view to_string(DerivativeTier tier);

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Caller-supplied Williamson data at one parameter value. The eigenvalues
/// need not be sorted; S_dot is dS/deps for the same gauge.
struct WilliamsonJet {
  SymplecticMatrix symplectic;
  RVector eigenvalues;
  CMatrix symplectic_dot;
  std::optional<RVector> eigenvalues_dot;
  std::optional<RVector> eigenvalues_ddot;
};

/// What an analytic provider returns at one parameter value.
struct AnalyticDerivatives {
  CMatrix sigma_dot;
  CVector d_dot;
  std::optional<CMatrix> sigma_ddot;
  std::optional<WilliamsonJet> williamson;
};

/// Derivatives of the family at one point: sigma_dot, d_dot and whatever
/// higher-order data the provider tier can produce.
struct DerivativeBundle {
  CMatrix sigma_dot;
  CVector d_dot;
  std::optional<CMatrix> sigma_ddot;
  std::optional<RVector> lambda_dot;
  std::optional<RVector> lambda_ddot;
  std::optional<CMatrix> symplectic_dot;
  DerivativeTier tier = DerivativeTier::finite_difference;
};

/// P1 = S^{-1} dS/deps = [[R, Q], [conj Q, conj R]] with R skew-Hermitian and
/// Q symmetric.
struct P1Blocks {
  CMatrix r;
  CMatrix q;

  CMatrix full() const { return algebra_element(r, q); }
};

/// One-parameter family eps -> (d(eps), sigma(eps)) with a derivative provider.
///
/// Evaluators must be reentrant: families are shared across threads during
/// parameter sweeps.
class StateFamily {
 public:
  using Evaluator = std::function<GaussianState(double)>;
  using AnalyticProvider = std::function<AnalyticDerivatives(double)>;

  /// Derivatives by central differences of `evaluate`.
  static StateFamily finite_difference(Evaluator evaluate, Interval domain = {});

  /// Caller-supplied derivatives; `provider` may also return Williamson data.
  static StateFamily analytic(Evaluator evaluate, AnalyticProvider provider,
                              Interval domain = {});

  /// sigma(eps) = e^{X eps} sigma_0 e^{X^+ eps}, d(eps) = e^{X eps} d_0 + eps * drift.
  /// X must lie in the symplectic algebra. `base_factors` is the Williamson
  /// decomposition of sigma_0; it is computed when absent.
  static StateFamily generated(const GaussianState& base, const CMatrix& generator,
                               const CVector& drift = CVector(),
                               std::optional<WilliamsonFactors> base_factors = std::nullopt);

  GaussianState evaluate(double eps) const;
  DerivativeTier tier() const;
  int modes() const;
  const Interval& domain() const;

  /// Same family acted on by an eps-independent symplectic T and shifted by
  /// a constant displacement.
  StateFamily transformed(const SymplecticMatrix& t, const CVector& shift) const;

  /// The family nu * sigma(eps) used by the regularization procedure.
  StateFamily scaled(double nu) const;

  struct Impl;

 private:
  explicit StateFamily(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;

  friend std::pair<GaussianState, DerivativeBundle> evaluate_with_derivatives(
      const StateFamily&, double, const FdConfig&);
  friend struct LocalExpansionBuilder;
};

/// The state at eps together with its derivative bundle. Analytic and
/// generator tiers pass through; the FD tier returns central differences.
std::pair<GaussianState, DerivativeBundle> evaluate_with_derivatives(
    const StateFamily& family, double eps, const FdConfig& cfg = {});

P1Blocks p1_from_derivative(const SymplecticMatrix& s, const CMatrix& s_dot);
/// Splits a full algebra element into its R and Q blocks.
P1Blocks p1_blocks(const CMatrix& p1);

/// P1 at eps: exact for generator and analytic-S tiers; otherwise from
/// gauge-matched Williamson factors at eps +- h. Throws
/// UnsupportedDerivativeError when that spectrum is degenerate.
P1Blocks p1_matrix(const StateFamily& family, double eps, const FdConfig& cfg = {},
                   const Tolerances& tol = {});

/// First derivatives of the symplectic eigenvalues, lambda_dot_i = x_i^+ sigma_dot x_i
/// with x_i = K s_i. Inside a degenerate cluster the values are the
/// eigenvalues of the compressed derivative, in descending order.
RVector eigenvalue_first_derivatives(const WilliamsonFactors& factors, const CMatrix& sigma_dot,
                                     double tol_degen = 1e-8);

/// Second derivatives from second-order perturbation theory of the pencil
/// (sigma, K). Inside a degenerate cluster only the cluster sum is exact.
RVector eigenvalue_second_derivatives(const WilliamsonFactors& factors, const CMatrix& sigma_dot,
                                      const CMatrix& sigma_ddot, double tol_degen = 1e-8);

/// Everything the QFI formulas consume at one point of a family.
struct LocalExpansion {
  GaussianState state;
  DerivativeBundle derivatives;   ///< lambda_dot always filled in
  WilliamsonFactors williamson;   ///< in the gauge P1 refers to
  std::optional<P1Blocks> p1;
  std::string p1_unavailable;     ///< reason, when p1 is empty
};

LocalExpansion expand(const StateFamily& family, double eps, const FdConfig& cfg = {},
                      const Tolerances& tol = {});

/// lambda_ddot at eps: supplied values, else perturbation theory when sigma_ddot
/// is known, else central second differences of the sorted eigenvalue map.
RVector eigenvalue_second_derivatives(const StateFamily& family, double eps,
                                      const LocalExpansion& local, const FdConfig& cfg = {},
                                      const Tolerances& tol = {});

}  // namespace gqfi
