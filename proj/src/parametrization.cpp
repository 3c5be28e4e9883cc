#include "gqfi/parametrization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "gqfi/errors.hpp"

namespace gqfi {

double FdConfig::first_step(double eps) const {
  if (step_first) return *step_first;
  return std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::abs(eps));
}

double FdConfig::second_step(double eps) const {
  if (step_second) return *step_second;
  return std::pow(std::numeric_limits<double>::epsilon(), 0.25) * std::max(1.0, std::abs(eps));
}

std::string_view to_string(DerivativeTier tier) {
  switch (tier) {
    case DerivativeTier::analytic: return "analytic";
    case DerivativeTier::generator: return "generator";
    case DerivativeTier::finite_difference: return "finite_difference";
  }
  return "unknown";
}

struct StateFamily::Impl {
  DerivativeTier tier = DerivativeTier::finite_difference;
  Interval domain;
  int modes = 0;
  Evaluator evaluate;
  AnalyticProvider provider;

  // Generator tier.
  GaussianState base;
  CMatrix generator;
  CVector drift;
  WilliamsonFactors base_factors;
  CMatrix p1;
};

namespace {

using Impl = StateFamily::Impl;

CMatrix project_covariance_like(const CMatrix& m) {
  const int n = static_cast<int>(m.rows() / 2);
  const CMatrix x = exchange_matrix(n);
  const CMatrix h = 0.5 * (m + m.adjoint());
  return 0.5 * (h + x * h.conjugate() * x);
}

CVector project_displacement_like(const CVector& v) {
  const auto n = v.size() / 2;
  CVector out(v.size());
  const CVector head = 0.5 * (v.head(n) + v.tail(n).conjugate());
  out << head, head.conjugate();
  return out;
}

// Exact derivatives of a generated family.
AnalyticDerivatives generator_derivatives(const Impl& g, double eps, GaussianState* state_out,
                                          WilliamsonJet* jet_out) {
  const CMatrix e = (g.generator * eps).exp();
  const CMatrix& x = g.generator;
  const CMatrix sigma = e * g.base.covariance() * e.adjoint();
  CVector d = e * g.base.displacement();
  if (g.drift.size() != 0) d += eps * g.drift;

  AnalyticDerivatives out;
  out.sigma_dot = x * sigma + sigma * x.adjoint();
  out.sigma_ddot = x * out.sigma_dot + out.sigma_dot * x.adjoint();
  out.d_dot = x * e * g.base.displacement();
  if (g.drift.size() != 0) out.d_dot += g.drift;

  if (state_out) *state_out = GaussianState(project_displacement_like(d), project_covariance_like(sigma));
  if (jet_out) {
    const CMatrix s = e * g.base_factors.symplectic.full();
    jet_out->symplectic = SymplecticMatrix::from_full(s, 1e-8);
    jet_out->eigenvalues = g.base_factors.eigenvalues;
    jet_out->symplectic_dot = x * s;
    jet_out->eigenvalues_dot = RVector::Zero(g.modes);
    jet_out->eigenvalues_ddot = RVector::Zero(g.modes);
  }
  return out;
}

struct FullEvaluation {
  GaussianState state;
  DerivativeBundle bundle;
  std::optional<WilliamsonJet> jet;
};

void require_stencil(const Interval& domain, double eps, double h) {
  if (!domain.contains(eps - h) || !domain.contains(eps + h)) {
    std::ostringstream os;
    os << "finite-difference stencil eps +- " << h << " leaves the family domain";
    throw DomainError(os.str());
  }
}

FullEvaluation evaluate_full(const Impl& impl, double eps, const FdConfig& cfg) {
  if (!impl.domain.contains(eps)) throw DomainError("eps outside the family domain");
  FullEvaluation out;
  switch (impl.tier) {
    case DerivativeTier::generator: {
      WilliamsonJet jet;
      AnalyticDerivatives a = generator_derivatives(impl, eps, &out.state, &jet);
      out.bundle.sigma_dot = std::move(a.sigma_dot);
      out.bundle.d_dot = std::move(a.d_dot);
      out.bundle.sigma_ddot = std::move(a.sigma_ddot);
      out.bundle.lambda_dot = jet.eigenvalues_dot;
      out.bundle.lambda_ddot = jet.eigenvalues_ddot;
      out.bundle.symplectic_dot = jet.symplectic_dot;
      out.bundle.tier = DerivativeTier::generator;
      out.jet = std::move(jet);
      break;
    }
    case DerivativeTier::analytic: {
      out.state = impl.evaluate(eps);
      AnalyticDerivatives a = impl.provider(eps);
      if (a.sigma_dot.rows() != out.state.covariance().rows() ||
          a.d_dot.size() != out.state.displacement().size()) {
        throw StructuralError("analytic derivatives have the wrong size");
      }
      out.bundle.sigma_dot = std::move(a.sigma_dot);
      out.bundle.d_dot = std::move(a.d_dot);
      out.bundle.sigma_ddot = std::move(a.sigma_ddot);
      out.bundle.tier = DerivativeTier::analytic;
      if (a.williamson) {
        out.bundle.lambda_dot = a.williamson->eigenvalues_dot;
        out.bundle.lambda_ddot = a.williamson->eigenvalues_ddot;
        out.bundle.symplectic_dot = a.williamson->symplectic_dot;
        out.jet = std::move(a.williamson);
      }
      break;
    }
    case DerivativeTier::finite_difference: {
      const double h = cfg.first_step(eps);
      const double h2 = cfg.second_step(eps);
      require_stencil(impl.domain, eps, h);
      require_stencil(impl.domain, eps, h2);
      out.state = impl.evaluate(eps);
      const GaussianState plus = impl.evaluate(eps + h);
      const GaussianState minus = impl.evaluate(eps - h);
      out.bundle.sigma_dot =
          project_covariance_like((plus.covariance() - minus.covariance()) / (2.0 * h));
      out.bundle.d_dot =
          project_displacement_like((plus.displacement() - minus.displacement()) / (2.0 * h));
      const GaussianState plus2 = impl.evaluate(eps + h2);
      const GaussianState minus2 = impl.evaluate(eps - h2);
      out.bundle.sigma_ddot = project_covariance_like(
          (plus2.covariance() - 2.0 * out.state.covariance() + minus2.covariance()) / (h2 * h2));
      out.bundle.tier = DerivativeTier::finite_difference;
      break;
    }
  }
  return out;
}

std::shared_ptr<Impl> clone_header(const Impl& src) {
  auto out = std::make_shared<Impl>();
  out->tier = src.tier;
  out->domain = src.domain;
  out->modes = src.modes;
  return out;
}

// Groups of indices whose values lie within tol of each other (chained).
std::vector<std::vector<int>> value_clusters(const RVector& values, double tol) {
  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return values(a) > values(b); });
  std::vector<std::vector<int>> out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k == 0 || std::abs(values(order[k - 1]) - values(order[k])) >= tol) out.emplace_back();
    out.back().push_back(order[k]);
  }
  return out;
}

}  // namespace

StateFamily StateFamily::finite_difference(Evaluator evaluate, Interval domain) {
  auto impl = std::make_shared<Impl>();
  impl->tier = DerivativeTier::finite_difference;
  impl->domain = domain;
  impl->evaluate = std::move(evaluate);
  const double probe = domain.contains(0.0) ? 0.0 : (std::isfinite(domain.lo) ? domain.lo : domain.hi);
  impl->modes = impl->evaluate(probe).modes();
  return StateFamily(std::move(impl));
}

StateFamily StateFamily::analytic(Evaluator evaluate, AnalyticProvider provider, Interval domain) {
  auto impl = std::make_shared<Impl>();
  impl->tier = DerivativeTier::analytic;
  impl->domain = domain;
  impl->evaluate = std::move(evaluate);
  impl->provider = std::move(provider);
  const double probe = domain.contains(0.0) ? 0.0 : (std::isfinite(domain.lo) ? domain.lo : domain.hi);
  impl->modes = impl->evaluate(probe).modes();
  return StateFamily(std::move(impl));
}

StateFamily StateFamily::generated(const GaussianState& base, const CMatrix& generator,
                                   const CVector& drift,
                                   std::optional<WilliamsonFactors> base_factors) {
  const int n = base.modes();
  if (generator.rows() != 2 * n || generator.cols() != 2 * n) {
    throw StructuralError("generator size does not match the base state");
  }
  if (algebra_defect(generator) > 1e-10 * std::max(1.0, generator.norm())) {
    throw StructuralError("generator is not an element of the symplectic algebra");
  }
  if (drift.size() != 0 && drift.size() != 2 * n) {
    throw StructuralError("drift length must equal 2N");
  }
  auto impl = std::make_shared<Impl>();
  impl->tier = DerivativeTier::generator;
  impl->modes = n;
  impl->base = base;
  impl->generator = generator;
  impl->drift = drift;
  if (base_factors) {
    if (base_factors->modes() != n) throw StructuralError("base Williamson factors have the wrong size");
    impl->base_factors = std::move(*base_factors);
    impl->base_factors.gauge.supplied = true;
  } else {
    impl->base_factors = williamson_decompose(base.covariance());
  }
  const SymplecticMatrix& s0 = impl->base_factors.symplectic;
  impl->p1 = s0.inverse() * generator * s0.full();
  return StateFamily(std::move(impl));
}

GaussianState StateFamily::evaluate(double eps) const {
  if (!impl_->domain.contains(eps)) throw DomainError("eps outside the family domain");
  if (impl_->tier == DerivativeTier::generator) {
    GaussianState state;
    generator_derivatives(*impl_, eps, &state, nullptr);
    return state;
  }
  return impl_->evaluate(eps);
}

DerivativeTier StateFamily::tier() const { return impl_->tier; }
int StateFamily::modes() const { return impl_->modes; }
const Interval& StateFamily::domain() const { return impl_->domain; }

StateFamily StateFamily::transformed(const SymplecticMatrix& t, const CVector& shift) const {
  if (t.modes() != modes()) throw StructuralError("mode count mismatch in transformation");
  auto src = impl_;
  auto out = clone_header(*src);
  out->evaluate = [src, t, shift](double eps) {
    return StateFamily(src).evaluate(eps).transformed(t, shift);
  };
  if (src->tier == DerivativeTier::finite_difference) {
    return StateFamily(std::move(out));
  }
  out->tier = DerivativeTier::analytic;
  out->provider = [src, t](double eps) {
    AnalyticDerivatives a;
    std::optional<WilliamsonJet> jet;
    if (src->tier == DerivativeTier::generator) {
      WilliamsonJet j;
      a = generator_derivatives(*src, eps, nullptr, &j);
      jet = std::move(j);
    } else {
      a = src->provider(eps);
      jet = a.williamson;
    }
    const CMatrix& m = t.full();
    a.sigma_dot = m * a.sigma_dot * m.adjoint();
    a.d_dot = m * a.d_dot;
    if (a.sigma_ddot) a.sigma_ddot = CMatrix(m * *a.sigma_ddot * m.adjoint());
    if (jet) {
      jet->symplectic = t * jet->symplectic;
      jet->symplectic_dot = m * jet->symplectic_dot;
    }
    a.williamson = std::move(jet);
    return a;
  };
  return StateFamily(std::move(out));
}

StateFamily StateFamily::scaled(double nu) const {
  if (!(nu > 0.0)) throw DomainError("scale factor must be positive");
  auto src = impl_;
  if (src->tier == DerivativeTier::generator) {
    auto out = std::make_shared<Impl>(*src);
    out->base = src->base.with_covariance(nu * src->base.covariance());
    out->base_factors.eigenvalues = nu * src->base_factors.eigenvalues;
    return StateFamily(std::move(out));
  }
  auto out = clone_header(*src);
  out->evaluate = [src, nu](double eps) {
    const GaussianState s = src->evaluate(eps);
    return s.with_covariance(nu * s.covariance());
  };
  if (src->tier == DerivativeTier::analytic) {
    out->provider = [src, nu](double eps) {
      AnalyticDerivatives a = src->provider(eps);
      a.sigma_dot *= nu;
      if (a.sigma_ddot) *a.sigma_ddot *= nu;
      if (a.williamson) {
        a.williamson->eigenvalues *= nu;
        if (a.williamson->eigenvalues_dot) *a.williamson->eigenvalues_dot *= nu;
        if (a.williamson->eigenvalues_ddot) *a.williamson->eigenvalues_ddot *= nu;
      }
      return a;
    };
  }
  return StateFamily(std::move(out));
}

std::pair<GaussianState, DerivativeBundle> evaluate_with_derivatives(const StateFamily& family,
                                                                     double eps,
                                                                     const FdConfig& cfg) {
  FullEvaluation full = evaluate_full(*family.impl_, eps, cfg);
  return {std::move(full.state), std::move(full.bundle)};
}

P1Blocks p1_blocks(const CMatrix& p1) {
  const int n = static_cast<int>(p1.rows() / 2);
  return {p1.topLeftCorner(n, n), p1.topRightCorner(n, n)};
}

P1Blocks p1_from_derivative(const SymplecticMatrix& s, const CMatrix& s_dot) {
  if (s_dot.rows() != s.full().rows() || s_dot.cols() != s.full().cols()) {
    throw StructuralError("dS/deps has the wrong size");
  }
  return p1_blocks(s.inverse() * s_dot);
}

RVector eigenvalue_first_derivatives(const WilliamsonFactors& factors, const CMatrix& sigma_dot,
                                     double tol_degen) {
  const int n = factors.modes();
  const CMatrix x = k_matrix(n) * factors.symplectic.full().leftCols(n);
  const CMatrix m = x.adjoint() * sigma_dot * x;
  RVector out(n);
  for (const auto& group : value_clusters(factors.eigenvalues, tol_degen)) {
    if (group.size() == 1) {
      out(group[0]) = m(group[0], group[0]).real();
      continue;
    }
    const int g = static_cast<int>(group.size());
    CMatrix sub(g, g);
    for (int a = 0; a < g; ++a) {
      for (int b = 0; b < g; ++b) sub(a, b) = m(group[a], group[b]);
    }
    sub = 0.5 * (sub + sub.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(sub, Eigen::EigenvaluesOnly);
    for (int a = 0; a < g; ++a) out(group[a]) = es.eigenvalues()(g - 1 - a);
  }
  return out;
}

RVector eigenvalue_second_derivatives(const WilliamsonFactors& factors, const CMatrix& sigma_dot,
                                      const CMatrix& sigma_ddot, double tol_degen) {
  const int n = factors.modes();
  const CMatrix x = k_matrix(n) * factors.symplectic.full();
  const CMatrix first = x.adjoint() * sigma_dot * x;
  const CMatrix second = x.adjoint() * sigma_ddot * x;
  const RVector& lam = factors.eigenvalues;

  std::vector<int> cluster_of(n);
  const auto groups = value_clusters(lam, tol_degen);
  for (std::size_t c = 0; c < groups.size(); ++c) {
    for (int i : groups[c]) cluster_of[i] = static_cast<int>(c);
  }

  RVector out(n);
  for (int i = 0; i < n; ++i) {
    double value = second(i, i).real();
    for (int k = 0; k < 2 * n; ++k) {
      const bool positive = k < n;
      if (positive && cluster_of[k] == cluster_of[i]) continue;
      const double mu = positive ? lam(k) : -lam(k - n);
      const double eta = positive ? 1.0 : -1.0;
      value += 2.0 * eta * std::norm(first(k, i)) / (lam(i) - mu);
    }
    out(i) = value;
  }
  return out;
}

namespace {

// Column phases e^{i phi} aligning `other` to `reference` column by column.
CMatrix align_gauge(const SymplecticMatrix& reference, const SymplecticMatrix& other) {
  const int n = reference.modes();
  const CMatrix& r = reference.full();
  const CMatrix& o = other.full();
  CMatrix aligned = o;
  for (int i = 0; i < n; ++i) {
    const Complex overlap = o.col(i).dot(r.col(i));
    const Complex phase = std::abs(overlap) > 0.0 ? overlap / std::abs(overlap) : Complex(1.0);
    aligned.col(i) *= phase;
    aligned.col(i + n) *= std::conj(phase);
  }
  return aligned;
}

std::optional<P1Blocks> fd_p1(const Impl& impl, double eps, const WilliamsonFactors& at,
                              const FdConfig& cfg, const Tolerances& tol, std::string& why) {
  if (at.gauge.degenerate()) {
    why = "degenerate symplectic spectrum; FD of S would differentiate gauge noise";
    return std::nullopt;
  }
  const double h = cfg.first_step(eps);
  if (!impl.domain.contains(eps - h) || !impl.domain.contains(eps + h)) {
    why = "FD stencil leaves the family domain";
    return std::nullopt;
  }
  const WilliamsonFactors plus = williamson_decompose(impl.evaluate(eps + h).covariance(), tol);
  const WilliamsonFactors minus = williamson_decompose(impl.evaluate(eps - h).covariance(), tol);
  if (plus.gauge.degenerate() || minus.gauge.degenerate()) {
    why = "degenerate symplectic spectrum at a stencil point";
    return std::nullopt;
  }
  const CMatrix s_dot =
      (align_gauge(at.symplectic, plus.symplectic) - align_gauge(at.symplectic, minus.symplectic)) /
      (2.0 * h);
  P1Blocks p = p1_from_derivative(at.symplectic, s_dot);
  p.r = 0.5 * (p.r - p.r.adjoint()).eval();
  p.q = 0.5 * (p.q + p.q.transpose()).eval();
  return p;
}

}  // namespace

struct LocalExpansionBuilder {
  static LocalExpansion build(const StateFamily& family, double eps, const FdConfig& cfg,
                              const Tolerances& tol) {
    const Impl& impl = *family.impl_;
    FullEvaluation full = evaluate_full(impl, eps, cfg);
    LocalExpansion out;
    out.state = std::move(full.state);
    out.derivatives = std::move(full.bundle);

    if (full.jet) {
      out.williamson.symplectic = full.jet->symplectic;
      out.williamson.eigenvalues = full.jet->eigenvalues;
      out.williamson.gauge.supplied = true;
      out.williamson.gauge.degenerate_blocks = degenerate_clusters(
          [&] {
            RVector sorted = full.jet->eigenvalues;
            std::sort(sorted.data(), sorted.data() + sorted.size(), std::greater<>());
            return sorted;
          }(),
          tol.degen);
      if (impl.tier == DerivativeTier::generator) {
        out.p1 = p1_blocks(impl.p1);
      } else {
        out.p1 = p1_from_derivative(full.jet->symplectic, full.jet->symplectic_dot);
      }
    } else {
      out.williamson = williamson_decompose(out.state.covariance(), tol);
      out.p1 = fd_p1(impl, eps, out.williamson, cfg, tol, out.p1_unavailable);
    }

    if (!out.derivatives.lambda_dot) {
      out.derivatives.lambda_dot =
          eigenvalue_first_derivatives(out.williamson, out.derivatives.sigma_dot, tol.degen);
    }
    return out;
  }
};

LocalExpansion expand(const StateFamily& family, double eps, const FdConfig& cfg,
                      const Tolerances& tol) {
  return LocalExpansionBuilder::build(family, eps, cfg, tol);
}

P1Blocks p1_matrix(const StateFamily& family, double eps, const FdConfig& cfg,
                   const Tolerances& tol) {
  LocalExpansion local = expand(family, eps, cfg, tol);
  if (!local.p1) throw UnsupportedDerivativeError(local.p1_unavailable);
  return *local.p1;
}

RVector eigenvalue_second_derivatives(const StateFamily& family, double eps,
                                      const LocalExpansion& local, const FdConfig& cfg,
                                      const Tolerances& tol) {
  if (local.derivatives.lambda_ddot) return *local.derivatives.lambda_ddot;
  if (local.derivatives.sigma_ddot && local.derivatives.tier != DerivativeTier::finite_difference) {
    return eigenvalue_second_derivatives(local.williamson, local.derivatives.sigma_dot,
                                         *local.derivatives.sigma_ddot, tol.degen);
  }
  const double h = cfg.second_step(eps);
  require_stencil(family.domain(), eps, h);
  const RVector plus = symplectic_eigenvalues(family.evaluate(eps + h).covariance(), tol);
  const RVector mid = symplectic_eigenvalues(local.state.covariance(), tol);
  const RVector minus = symplectic_eigenvalues(family.evaluate(eps - h).covariance(), tol);
  const RVector sorted_ddot = (plus - 2.0 * mid + minus) / (h * h);

  // Map the descending FD values onto the ordering used by local.williamson.
  const RVector& lam = local.williamson.eigenvalues;
  std::vector<int> order(lam.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return lam(a) > lam(b); });
  RVector out(lam.size());
  for (std::size_t k = 0; k < order.size(); ++k) out(order[k]) = sorted_ddot(static_cast<Eigen::Index>(k));
  return out;
}

}  // namespace gqfi
