#include "gqfi/qfi.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "gqfi/errors.hpp"
#include "gqfi/fidelity.hpp"

namespace gqfi {

namespace {

constexpr std::array<std::pair<QfiMethod, std::string_view>, 9> kMethodNames{{
    {QfiMethod::two_mode_covariance, "two_mode_covariance"},
    {QfiMethod::two_mode_williamson, "two_mode_williamson"},
    {QfiMethod::series, "series"},
    {QfiMethod::multimode_williamson, "multimode_williamson"},
    {QfiMethod::isothermal, "isothermal"},
    {QfiMethod::pure_point, "pure_point"},
    {QfiMethod::regularized, "regularized"},
    {QfiMethod::bures_fd, "bures_fd"},
    {QfiMethod::fock_fd, "fock_fd"},
}};

constexpr double kMachineEps = std::numeric_limits<double>::epsilon();

bool is_pure(double lambda, double tol_pure) { return lambda <= 1.0 + tol_pure; }

CMatrix a_matrix(const CMatrix& m) { return k_matrix(static_cast<int>(m.rows() / 2)) * m; }

QfiDiagnostics make_diagnostics(const RVector& lambda, double tol_pure,
                                std::optional<DerivativeTier> tier, std::string route) {
  QfiDiagnostics d;
  d.eigenvalues = lambda;
  std::sort(d.eigenvalues.data(), d.eigenvalues.data() + d.eigenvalues.size(), std::greater<>());
  d.lambda_min = d.eigenvalues.size() ? d.eigenvalues.minCoeff() : 0.0;
  for (Eigen::Index i = 0; i < d.eigenvalues.size(); ++i) {
    d.pure_modes.push_back(is_pure(d.eigenvalues(i), tol_pure));
  }
  d.tier = tier;
  d.route = std::move(route);
  return d;
}

void note_pure_modes(QfiDiagnostics& d) {
  if (std::find(d.pure_modes.begin(), d.pure_modes.end(), true) != d.pure_modes.end()) {
    d.warnings.emplace_back("pure mode present; Cramer-Rao attainability not implied");
  }
}

CMatrix sigma_ddot_at(const StateFamily& family, double eps, const GaussianState& state,
                      const DerivativeBundle& bundle, const FdConfig& cfg) {
  if (bundle.sigma_ddot) return *bundle.sigma_ddot;
  const double h = cfg.second_step(eps);
  if (!family.domain().contains(eps - h) || !family.domain().contains(eps + h)) {
    throw InsufficientDerivativesError("second derivative of sigma unavailable near the domain edge");
  }
  return (family.evaluate(eps + h).covariance() - 2.0 * state.covariance() +
          family.evaluate(eps - h).covariance()) /
         (h * h);
}

RVector lambda_ddot_or_throw(const StateFamily& family, double eps, const LocalExpansion& local,
                             const QfiOptions& opts) {
  try {
    return eigenvalue_second_derivatives(family, eps, local, opts.fd, opts.tolerances);
  } catch (const DomainError& e) {
    throw InsufficientDerivativesError(std::string("lambda_ddot unavailable: ") + e.what());
  }
}

// (lambda_1, lambda_2) derivatives from tr A^2 and det A; Hellmann-Feynman
// when the two eigenvalues nearly coincide.
RVector two_mode_lambda_dot(const CMatrix& sigma, const CMatrix& sigma_dot, double l1, double l2,
                            const Tolerances& tol) {
  const double s = l1 * l1 + l2 * l2;
  const double g = l1 * l1 - l2 * l2;
  RVector out(2);
  if (g > 1e-6 * s) {
    const CMatrix a = a_matrix(sigma);
    const CMatrix a_dot = a_matrix(sigma_dot);
    const Eigen::PartialPivLU<CMatrix> lu(a);
    const double det = lu.determinant().real();
    const double s_dot = real_trace(a * a_dot);
    const double p_dot = det * real_trace(lu.solve(a_dot));
    const double g_dot = (s * s_dot - 2.0 * p_dot) / g;
    out(0) = 0.5 * (s_dot + g_dot) / (2.0 * l1);
    out(1) = 0.5 * (s_dot - g_dot) / (2.0 * l2);
    return out;
  }
  const WilliamsonFactors f = williamson_decompose(sigma, tol);
  return eigenvalue_first_derivatives(f, sigma_dot, tol.degen);
}

double neville_at_zero(const std::vector<double>& x, std::vector<double> y) {
  const std::size_t n = x.size();
  for (std::size_t m = 1; m < n; ++m) {
    for (std::size_t i = 0; i + m < n; ++i) {
      y[i] = (x[i + m] * y[i] - x[i] * y[i + 1]) / (x[i + m] - x[i]);
    }
  }
  return y[0];
}

}  // namespace

std::string_view to_string(QfiMethod method) {
  for (const auto& [m, name] : kMethodNames) {
    if (m == method) return name;
  }
  return "unknown";
}

std::optional<QfiMethod> method_from_string(std::string_view name) {
  for (const auto& [m, n] : kMethodNames) {
    if (n == name) return m;
  }
  return std::nullopt;
}

double displacement_term(const CMatrix& sigma, const CVector& d_dot) {
  if (d_dot.size() == 0 || d_dot.isZero(0.0)) return 0.0;
  const CVector x = sigma.ldlt().solve(d_dot);
  return 2.0 * d_dot.dot(x).real();
}

double two_mode_covariance_formula(const CMatrix& sigma, const CMatrix& sigma_dot,
                                   const CVector& d_dot, const RVector& lambda,
                                   const RVector& lambda_dot) {
  const CMatrix a = a_matrix(sigma);
  const CMatrix a_dot = a_matrix(sigma_dot);
  const CMatrix id = CMatrix::Identity(4, 4);
  const Eigen::PartialPivLU<CMatrix> lu(a);
  const double det_a = lu.determinant().real();

  const CMatrix x = lu.solve(a_dot);
  const double t1 = det_a * real_trace(x * x);

  const CMatrix c = id + a * a;
  const Eigen::PartialPivLU<CMatrix> clu(c);
  const CMatrix y = clu.solve(a_dot);
  const double t2 = std::sqrt(std::max(0.0, clu.determinant().real())) * real_trace(y * y);

  const double l1 = lambda(0), l2 = lambda(1);
  const double gap = l1 * l1 - l2 * l2;
  double t3 = 0.0;
  if (gap != 0.0) {
    t3 = 4.0 * gap *
         (-lambda_dot(0) * lambda_dot(0) / (std::pow(l1, 4) - 1.0) +
          lambda_dot(1) * lambda_dot(1) / (std::pow(l2, 4) - 1.0));
  }
  return (t1 + t2 + t3) / (2.0 * (det_a - 1.0)) + displacement_term(sigma, d_dot);
}

double two_mode_williamson_formula(const RVector& lambda, const RVector& lambda_dot,
                                   const CMatrix& p1, const CMatrix& sigma,
                                   const CVector& d_dot) {
  const CMatrix k = k_matrix(2);
  RVector diag(4), diag_dot(4);
  diag << lambda, lambda;
  diag_dot << lambda_dot, lambda_dot;
  const CMatrix d0 = diag.cast<Complex>().asDiagonal();
  const CMatrix d0_inv = diag.cwiseInverse().cast<Complex>().asDiagonal();
  const double det_d0 = diag.prod();

  const CMatrix p2 = p1 * p1;
  const double t1 = det_d0 * (real_trace(p2) - real_trace(d0_inv * k * p1 * d0 * k * p1));

  const RVector c_diag = (1.0 + diag.array().square()).matrix();
  const CMatrix c_inv = c_diag.cwiseInverse().cast<Complex>().asDiagonal();
  const CMatrix cp = c_inv * p1;
  const CMatrix cdkp = c_inv * d0 * k * p1;
  const double t2 = std::sqrt(c_diag.prod()) *
                    (real_trace(cp * cp) + real_trace(cdkp * cdkp) - real_trace(c_inv * p2));

  double t3 = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double e = diag(i) + (i < 2 ? 1.0 : -1.0);
    t3 += diag_dot(i) * diag_dot(i) / (e * diag(i));
  }
  return (t1 + t2) / (det_d0 - 1.0) + 0.5 * t3 + displacement_term(sigma, d_dot);
}

double multimode_williamson_formula(const RVector& lambda, const RVector& lambda_dot,
                                    const std::optional<RVector>& lambda_ddot,
                                    const P1Blocks& p1, const CMatrix& sigma,
                                    const CVector& d_dot, double tol_pure,
                                    PureConvention convention) {
  const Eigen::Index n = lambda.size();
  double h = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool pi = is_pure(lambda(i), tol_pure);
    for (Eigen::Index j = 0; j < n; ++j) {
      const bool pj = is_pure(lambda(j), tol_pure);
      const double prod = lambda(i) * lambda(j);
      if (i != j && !(pi && pj)) {
        const double diff = lambda(i) - lambda(j);
        h += diff * diff / (prod - 1.0) * std::norm(p1.r(i, j));
      }
      const double sum = lambda(i) + lambda(j);
      h += sum * sum / (prod + 1.0) * std::norm(p1.q(i, j));
    }
    if (pi) {
      if (convention == PureConvention::paper) {
        if (!lambda_ddot) {
          throw InsufficientDerivativesError("lambda_ddot is required at a pure mode");
        }
        h += (*lambda_ddot)(i);
      }
    } else {
      h += lambda_dot(i) * lambda_dot(i) / (lambda(i) * lambda(i) - 1.0);
    }
  }
  return h + displacement_term(sigma, d_dot);
}

std::vector<double> series_terms(const CMatrix& sigma, const CMatrix& sigma_dot, long order) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max(0L, order)));
  const Eigen::PartialPivLU<CMatrix> lu(a_matrix(sigma));
  CMatrix l = a_matrix(sigma_dot);
  for (long n = 1; n <= order; ++n) {
    l = lu.solve(l);
    out.push_back(real_trace(l * l));
  }
  return out;
}

namespace {

double bound_from(double c, double lmin, long order) {
  if (!(lmin > 1.0)) return std::numeric_limits<double>::infinity();
  if (c <= 0.0) return 0.0;
  return c / (2.0 * std::pow(lmin, 2.0 * static_cast<double>(order) + 2.0) * (lmin * lmin - 1.0));
}

double coupling(const CMatrix& sigma, const CMatrix& sigma_dot) {
  const CMatrix m = a_matrix(sigma) * a_matrix(sigma_dot);
  return real_trace(m * m);
}

}  // namespace

double series_remainder_bound(const CMatrix& sigma, const CMatrix& sigma_dot, long order,
                              const Tolerances& tol) {
  const RVector lambda = symplectic_eigenvalues(sigma, tol);
  return bound_from(coupling(sigma, sigma_dot), lambda.minCoeff(), order);
}

double series_remainder_bound(const StateFamily& family, double eps, long order,
                              const QfiOptions& opts) {
  const auto [state, bundle] = evaluate_with_derivatives(family, eps, opts.fd);
  return series_remainder_bound(state.covariance(), bundle.sigma_dot, order, opts.tolerances);
}

double stein_qfi(const CMatrix& sigma, const CMatrix& sigma_dot, const CVector& d_dot) {
  const Eigen::Index m = sigma.rows();
  const CMatrix k = k_matrix(static_cast<int>(m / 2));
  // vec(A Y B) = (B^T kron A) vec(Y), column-major.
  CMatrix op(m * m, m * m);
  for (Eigen::Index p = 0; p < m; ++p) {
    for (Eigen::Index q = 0; q < m; ++q) {
      op.block(p * m, q * m, m, m) = sigma(q, p) * sigma - k(q, p) * k;
    }
  }
  const CVector rhs = Eigen::Map<const CVector>(sigma_dot.data(), m * m);
  const CVector y = op.partialPivLu().solve(rhs);
  const CMatrix ym = Eigen::Map<const CMatrix>(y.data(), m, m);
  return 0.5 * real_trace(sigma_dot * ym) + displacement_term(sigma, d_dot);
}

QfiEstimate qfi_two_mode(const StateFamily& family, double eps, const QfiOptions& opts) {
  if (family.modes() != 2) throw ApplicabilityError("two-mode formula needs N = 2");
  const auto [state, b] = evaluate_with_derivatives(family, eps, opts.fd);
  const auto [l1, l2] = symplectic_eigenvalues_two_mode(state.covariance());
  if (is_pure(l2, opts.tol_pure)) {
    throw PurityError("two-mode covariance formula needs both symplectic eigenvalues above one; "
                      "use the regularized method");
  }
  RVector lambda(2);
  lambda << l1, l2;
  const RVector lambda_dot =
      two_mode_lambda_dot(state.covariance(), b.sigma_dot, l1, l2, opts.tolerances);

  QfiEstimate out;
  out.method = QfiMethod::two_mode_covariance;
  out.value = two_mode_covariance_formula(state.covariance(), b.sigma_dot, b.d_dot, lambda,
                                          lambda_dot);
  out.diagnostics = make_diagnostics(lambda, opts.tol_pure, b.tier, "two_mode_covariance");
  return out;
}

QfiEstimate qfi_two_mode_williamson(const StateFamily& family, double eps,
                                    const QfiOptions& opts) {
  if (family.modes() != 2) throw ApplicabilityError("two-mode Williamson formula needs N = 2");
  const LocalExpansion local = expand(family, eps, opts.fd, opts.tolerances);
  if (!local.p1) throw UnsupportedDerivativeError(local.p1_unavailable);
  const RVector& lambda = local.williamson.eigenvalues;
  if (is_pure(lambda.minCoeff(), opts.tol_pure)) {
    throw PurityError("two-mode Williamson formula needs both symplectic eigenvalues above one; "
                      "use the regularized method");
  }
  QfiEstimate out;
  out.method = QfiMethod::two_mode_williamson;
  out.value = two_mode_williamson_formula(lambda, *local.derivatives.lambda_dot, local.p1->full(),
                                          local.state.covariance(), local.derivatives.d_dot);
  out.diagnostics =
      make_diagnostics(lambda, opts.tol_pure, local.derivatives.tier, "two_mode_williamson");
  return out;
}

QfiEstimate qfi_series(const StateFamily& family, double eps, const QfiOptions& opts) {
  const auto [state, b] = evaluate_with_derivatives(family, eps, opts.fd);
  const CMatrix& sigma = state.covariance();
  const RVector lambda = symplectic_eigenvalues(sigma, opts.tolerances);
  const double lmin = lambda.minCoeff();
  if (is_pure(lmin, opts.tol_pure)) {
    throw PurityError("series needs every symplectic eigenvalue above one; "
                      "use the regularized method");
  }
  const double c = coupling(sigma, b.sigma_dot);

  long order = 1;
  if (opts.max_order) {
    order = std::max(1L, *opts.max_order);
  } else if (c > 0.0) {
    const double guess =
        std::log(c / (2.0 * (lmin * lmin - 1.0) * opts.series_tol)) / (2.0 * std::log(lmin)) - 1.0;
    if (guess > static_cast<double>(opts.hard_cap)) {
      std::ostringstream os;
      os << "series order would exceed the cap of " << opts.hard_cap;
      throw ConvergenceError(os.str(), bound_from(c, lmin, opts.hard_cap));
    }
    order = std::max(1L, static_cast<long>(std::ceil(guess)));
    while (order > 1 && bound_from(c, lmin, order - 1) <= opts.series_tol) --order;
    while (bound_from(c, lmin, order) > opts.series_tol) ++order;
  }
  if (order > opts.hard_cap) {
    throw ConvergenceError("series order exceeds the cap", bound_from(c, lmin, opts.hard_cap));
  }

  const std::vector<double> terms = series_terms(sigma, b.sigma_dot, order);
  double sum = 0.0, weighted = 0.0;
  for (std::size_t n = 0; n < terms.size(); ++n) {
    sum += terms[n];
    weighted += static_cast<double>(n + 1) * std::abs(terms[n]);
  }
  const double disp = displacement_term(sigma, b.d_dot);
  const double remainder = bound_from(c, lmin, order);

  const CMatrix a = a_matrix(sigma);
  const double cond = a.norm() * a.partialPivLu().inverse().norm();
  const double rounding = 16.0 * kMachineEps * (cond * 0.5 * weighted + std::abs(disp));

  QfiEstimate out;
  out.method = QfiMethod::series;
  out.value = 0.5 * sum + disp;
  out.error_bound = remainder + rounding;
  out.diagnostics = make_diagnostics(lambda, opts.tol_pure, b.tier, "series");
  out.diagnostics.truncation_order = order;
  out.diagnostics.remainder_bound = remainder;
  if (remainder > opts.series_tol) {
    out.diagnostics.warnings.emplace_back("remainder bound above the requested tolerance");
  }
  return out;
}

QfiEstimate qfi_multimode_williamson(const StateFamily& family, double eps,
                                     const QfiOptions& opts) {
  const LocalExpansion local = expand(family, eps, opts.fd, opts.tolerances);
  if (!local.p1) throw UnsupportedDerivativeError(local.p1_unavailable);
  const RVector& lambda = local.williamson.eigenvalues;
  const RVector& lambda_dot = *local.derivatives.lambda_dot;

  bool any_pure = false;
  QfiEstimate out;
  out.diagnostics =
      make_diagnostics(lambda, opts.tol_pure, local.derivatives.tier, "multimode_williamson");
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (!is_pure(lambda(i), opts.tol_pure)) continue;
    any_pure = true;
    if (std::abs(lambda_dot(i)) > 1e-6) {
      out.diagnostics.warnings.emplace_back(
          "nonzero lambda_dot at a pure mode; the family is not differentiable there");
    }
  }
  std::optional<RVector> lambda_ddot;
  if (any_pure && opts.convention == PureConvention::paper) {
    lambda_ddot = lambda_ddot_or_throw(family, eps, local, opts);
  }
  out.method = QfiMethod::multimode_williamson;
  out.value = multimode_williamson_formula(lambda, lambda_dot, lambda_ddot, *local.p1,
                                           local.state.covariance(), local.derivatives.d_dot,
                                           opts.tol_pure, opts.convention);
  note_pure_modes(out.diagnostics);
  return out;
}

QfiEstimate qfi_isothermal(const StateFamily& family, double eps, const QfiOptions& opts) {
  const auto [state, b] = evaluate_with_derivatives(family, eps, opts.fd);
  const CMatrix& sigma = state.covariance();
  const int n = state.modes();
  const CMatrix a = a_matrix(sigma);
  const CMatrix a_dot = a_matrix(b.sigma_dot);
  const CMatrix a2 = a * a;
  const double nu2 = real_trace(a2) / (2.0 * n);
  const double scale = a.squaredNorm();
  if ((a2 - nu2 * CMatrix::Identity(2 * n, 2 * n)).norm() > opts.tol_iso * std::max(1.0, scale)) {
    throw ApplicabilityError("state is not iso-thermal: A^2 is not proportional to I");
  }
  const double anti = (a * a_dot + a_dot * a).norm();
  if (anti > 1e-7 * std::max(1.0, a.norm() * a_dot.norm())) {
    throw ApplicabilityError("symplectic eigenvalues vary along the family; "
                             "the iso-thermal formula does not apply");
  }
  const double nu = std::sqrt(nu2);
  const Eigen::PartialPivLU<CMatrix> lu(a);
  const CMatrix x = lu.solve(a_dot);
  const double disp = displacement_term(sigma, b.d_dot);
  const double inverting = nu2 / (2.0 * (1.0 + nu2)) * real_trace(x * x);
  const double direct = -real_trace(a_dot * a_dot) / (2.0 * (1.0 + nu2));
  if (std::abs(inverting - direct) > 1e-8 * std::max(1.0, std::abs(inverting))) {
    throw ApplicabilityError("iso-thermal forms disagree; A^2 = nu^2 I does not hold along the family");
  }

  RVector lambda = RVector::Constant(n, nu);
  QfiEstimate out;
  out.diagnostics = make_diagnostics(lambda, opts.tol_pure, b.tier, "isothermal");
  if (is_pure(nu, opts.tol_pure) && opts.convention == PureConvention::paper) {
    const CMatrix sdd = sigma_ddot_at(family, eps, state, b, opts.fd);
    const double sum_ddot = 0.5 * (real_trace(lu.solve(a_matrix(sdd))) - real_trace(x * x));
    if (std::abs(sum_ddot) > 1e-6 * std::max(1.0, std::abs(inverting))) {
      throw ApplicabilityError("purity changes at second order; "
                               "the iso-thermal formula omits the lambda_ddot term");
    }
  }
  out.method = QfiMethod::isothermal;
  out.value = inverting + disp;
  note_pure_modes(out.diagnostics);
  return out;
}

QfiEstimate qfi_pure_point(const StateFamily& family, double eps, const QfiOptions& opts) {
  const auto [state, b] = evaluate_with_derivatives(family, eps, opts.fd);
  const CMatrix& sigma = state.covariance();
  const RVector lambda = symplectic_eigenvalues(sigma, opts.tolerances);
  if (!is_pure(lambda.maxCoeff(), opts.tol_pure)) {
    throw ApplicabilityError("pure-point formula needs every mode pure; "
                             "use the regularized method");
  }
  const Eigen::PartialPivLU<CMatrix> lu(sigma);
  const CMatrix x = lu.solve(b.sigma_dot);
  const double sq = real_trace(x * x);

  QfiEstimate out;
  out.method = QfiMethod::pure_point;
  out.diagnostics = make_diagnostics(lambda, opts.tol_pure, b.tier, "pure_point");
  if (opts.convention == PureConvention::paper) {
    const CMatrix sdd = sigma_ddot_at(family, eps, state, b, opts.fd);
    out.value = 0.25 * (2.0 * real_trace(lu.solve(sdd)) - sq);
  } else {
    out.value = 0.25 * sq;
  }
  out.value += displacement_term(sigma, b.d_dot);
  note_pure_modes(out.diagnostics);
  return out;
}

namespace {

double pure_correction(const StateFamily& family, double eps, const LocalExpansion& local,
                       const QfiOptions& opts) {
  if (opts.convention != PureConvention::paper) return 0.0;
  const RVector& lambda = local.williamson.eigenvalues;
  bool any = false;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) any |= is_pure(lambda(i), opts.tol_pure);
  if (!any) return 0.0;
  const RVector ddot = lambda_ddot_or_throw(family, eps, local, opts);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (is_pure(lambda(i), opts.tol_pure)) sum += ddot(i);
  }
  return sum;
}

QfiEstimate ladder(const StateFamily& family, double eps, const QfiOptions& opts,
                   LocalExpansion local) {
  const CMatrix& sigma = local.state.covariance();
  const RVector& lambda = local.williamson.eigenvalues;
  const RVector& lambda_dot = *local.derivatives.lambda_dot;
  const int n = local.state.modes();

  QfiEstimate out;
  out.method = QfiMethod::regularized;
  out.diagnostics = make_diagnostics(lambda, opts.tol_pure, local.derivatives.tier,
                                     "regularized:nu_ladder");
  std::vector<double> t, h;
  for (int k = 0; k <= 6; ++k) {
    const double step = 1e-3 * std::ldexp(1.0, -k);
    const double nu = 1.0 + step;
    const CMatrix s = nu * sigma;
    const CMatrix sd = nu * local.derivatives.sigma_dot;
    const double value =
        n == 2 ? two_mode_covariance_formula(s, sd, local.derivatives.d_dot, nu * lambda,
                                             nu * lambda_dot)
               : stein_qfi(s, sd, local.derivatives.d_dot);
    t.push_back(step);
    h.push_back(value);
    out.diagnostics.nu_path.push_back(nu);
    out.diagnostics.nu_values.push_back(value);
  }
  out.value = neville_at_zero(t, h) + pure_correction(family, eps, local, opts);
  note_pure_modes(out.diagnostics);
  return out;
}

}  // namespace

QfiEstimate qfi_regularized(const StateFamily& family, double eps, const QfiOptions& opts) {
  LocalExpansion local = expand(family, eps, opts.fd, opts.tolerances);
  if (!local.p1) {
    const std::string why = local.p1_unavailable;
    QfiEstimate out = ladder(family, eps, opts, std::move(local));
    out.diagnostics.warnings.push_back("P1 unavailable (" + why + "); used the nu-ladder");
    return out;
  }
  const RVector& lambda = local.williamson.eigenvalues;
  QfiEstimate out;
  out.method = QfiMethod::regularized;
  out.diagnostics =
      make_diagnostics(lambda, opts.tol_pure, local.derivatives.tier, "regularized:analytic");
  out.value = multimode_williamson_formula(lambda, *local.derivatives.lambda_dot, std::nullopt,
                                           *local.p1, local.state.covariance(),
                                           local.derivatives.d_dot, opts.tol_pure,
                                           PureConvention::zero) +
              pure_correction(family, eps, local, opts);
  note_pure_modes(out.diagnostics);
  return out;
}

QfiEstimate qfi_regularized_ladder(const StateFamily& family, double eps,
                                   const QfiOptions& opts) {
  return ladder(family, eps, opts, expand(family, eps, opts.fd, opts.tolerances));
}

QfiEstimate qfi_bures(const StateFamily& family, double eps, const QfiOptions& opts) {
  if (family.modes() != 2) throw ApplicabilityError("Bures finite difference needs N = 2");
  QfiEstimate out;
  out.method = QfiMethod::bures_fd;
  out.value = bures_qfi_fd(family, eps, opts.bures_step);
  const RVector lambda = symplectic_eigenvalues(family.evaluate(eps).covariance(), opts.tolerances);
  out.diagnostics = make_diagnostics(lambda, opts.tol_pure, std::nullopt, "bures_fd");
  return out;
}

QfiEstimate qfi_by_method(QfiMethod method, const StateFamily& family, double eps,
                          const QfiOptions& opts) {
  switch (method) {
    case QfiMethod::two_mode_covariance: return qfi_two_mode(family, eps, opts);
    case QfiMethod::two_mode_williamson: return qfi_two_mode_williamson(family, eps, opts);
    case QfiMethod::series: return qfi_series(family, eps, opts);
    case QfiMethod::multimode_williamson: return qfi_multimode_williamson(family, eps, opts);
    case QfiMethod::isothermal: return qfi_isothermal(family, eps, opts);
    case QfiMethod::pure_point: return qfi_pure_point(family, eps, opts);
    case QfiMethod::regularized: return qfi_regularized(family, eps, opts);
    case QfiMethod::bures_fd: return qfi_bures(family, eps, opts);
    case QfiMethod::fock_fd:
      throw ApplicabilityError("the Fock oracle needs a probe description, not a state family");
  }
  throw ApplicabilityError("unknown method");
}

QfiEstimate qfi_auto(const StateFamily& family, double eps, const QfiOptions& opts) {
  std::vector<std::string> failures;
  auto attempt = [&](QfiMethod method) -> std::optional<QfiEstimate> {
    try {
      QfiEstimate e = qfi_by_method(method, family, eps, opts);
      e.diagnostics.route = "auto:" + e.diagnostics.route;
      for (const auto& f : failures) e.diagnostics.warnings.push_back("rejected " + f);
      return e;
    } catch (const ApplicabilityError& e) {
      failures.push_back(std::string(to_string(method)) + ": " + e.what());
      return std::nullopt;
    }
  };

  if (auto e = attempt(QfiMethod::isothermal)) return *e;

  const RVector lambda = symplectic_eigenvalues(family.evaluate(eps).covariance(), opts.tolerances);
  int pure = 0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) pure += is_pure(lambda(i), opts.tol_pure);
  if (pure == lambda.size()) {
    if (auto e = attempt(QfiMethod::pure_point)) return *e;
  }
  if (pure > 0) {
    if (auto e = attempt(QfiMethod::regularized)) return *e;
  } else {
    if (family.modes() == 2) {
      if (auto e = attempt(QfiMethod::two_mode_covariance)) return *e;
    }
    if (auto e = attempt(QfiMethod::multimode_williamson)) return *e;
    if (auto e = attempt(QfiMethod::series)) return *e;
  }

  std::ostringstream os;
  os << "no QFI method applies:";
  for (const auto& f : failures) os << "\n  " << f;
  throw DispatchError(os.str(), failures);
}

}  // namespace gqfi
