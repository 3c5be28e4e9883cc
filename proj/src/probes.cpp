#include "gqfi/probes.hpp"

#include <cmath>
#include <numbers>

#include "gqfi/errors.hpp"

namespace gqfi {

void ProbeSpec::validate() const {
  if (modes.empty()) throw DomainError("probe needs at least one mode");
  for (const auto& m : modes) {
    if (!(m.n_th >= 0.0)) throw DomainError("thermal occupation must be non-negative");
    if (!std::isfinite(m.r) || !std::isfinite(m.theta) || !std::isfinite(m.d_abs) ||
        !std::isfinite(m.d_phase)) {
      throw DomainError("probe parameters must be finite");
    }
  }
  if (two_mode_squeezing != 0.0 && modes.size() != 2) {
    throw DomainError("two-mode squeezing needs exactly two modes");
  }
}

std::string_view to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::squeeze: return "squeeze";
    case ChannelKind::rotate: return "rotate";
    case ChannelKind::displace: return "displace";
    case ChannelKind::two_mode_squeeze: return "two_mode_squeeze";
  }
  return "unknown";
}

namespace {

void check_mode(int modes, int mode) {
  if (mode < 0 || mode >= modes) throw DomainError("channel mode index out of range");
}

}  // namespace

CMatrix ChannelSpec::generator(int modes) const {
  check_mode(modes, mode);
  switch (kind) {
    case ChannelKind::squeeze: return squeeze_generator(modes, mode);
    case ChannelKind::rotate: return rotation_generator(modes, mode);
    case ChannelKind::displace: return CMatrix::Zero(2 * modes, 2 * modes);
    case ChannelKind::two_mode_squeeze:
      check_mode(modes, mode_b);
      if (mode_b == mode) throw DomainError("two-mode squeezer needs two distinct modes");
      return two_mode_squeeze_generator(modes, mode, mode_b);
  }
  throw DomainError("unknown channel kind");
}

CVector ChannelSpec::drift(int modes) const {
  if (kind != ChannelKind::displace) return CVector();
  check_mode(modes, mode);
  CVector v = CVector::Zero(2 * modes);
  v(mode) = direction;
  v(mode + modes) = std::conj(direction);
  return v;
}

SymplecticMatrix probe_symplectic(const ProbeSpec& spec) {
  spec.validate();
  const int n = spec.count();
  SymplecticMatrix s = SymplecticMatrix::identity(n);
  for (int i = 0; i < n; ++i) {
    const ModeProbe& m = spec.modes[static_cast<std::size_t>(i)];
    s = s * rotation(n, i, m.theta) * squeezer(n, i, m.r);
  }
  if (spec.two_mode_squeezing != 0.0) s = s * two_mode_squeezer(n, 0, 1, spec.two_mode_squeezing);
  return s;
}

WilliamsonFactors probe_williamson(const ProbeSpec& spec) {
  WilliamsonFactors f;
  f.symplectic = probe_symplectic(spec);
  f.eigenvalues.resize(spec.count());
  for (int i = 0; i < spec.count(); ++i) {
    f.eigenvalues(i) = spec.modes[static_cast<std::size_t>(i)].lambda();
  }
  f.gauge.supplied = true;
  return f;
}

GaussianState build_probe(const ProbeSpec& spec) {
  const WilliamsonFactors f = probe_williamson(spec);
  CVector means(spec.count());
  for (int i = 0; i < spec.count(); ++i) {
    means(i) = spec.modes[static_cast<std::size_t>(i)].displacement();
  }
  CMatrix sigma = f.reconstruct();
  sigma = 0.5 * (sigma + sigma.adjoint()).eval();
  return GaussianState::from_mode_means(means, std::move(sigma));
}

StateFamily apply_channel_family(const ProbeSpec& spec, const ChannelSpec& channel) {
  const int n = spec.count();
  return StateFamily::generated(build_probe(spec), channel.generator(n), channel.drift(n),
                                probe_williamson(spec));
}

StateFamily apply_channel_family(const GaussianState& state, const ChannelSpec& channel) {
  const int n = state.modes();
  return StateFamily::generated(state, channel.generator(n), channel.drift(n));
}

double probe_photon_number(const ModeProbe& p) {
  const double sh = std::sinh(p.r);
  return p.d_abs * p.d_abs + p.n_th + (1.0 + 2.0 * p.n_th) * sh * sh;
}

double squeezing_channel_qfi_closed(const ModeProbe& p) {
  const double l = p.lambda();
  const double ch = std::cosh(p.r), sh = std::sinh(p.r);
  const double squeeze_part =
      4.0 * l * l / (l * l + 1.0) *
      (std::pow(ch, 4) + std::pow(sh, 4) - 2.0 * std::cos(4.0 * p.theta) * ch * ch * sh * sh);
  const double disp_part = 4.0 * p.d_abs * p.d_abs / l *
                           (std::cosh(2.0 * p.r) +
                            std::cos(2.0 * (p.theta - p.d_phase)) * std::sinh(2.0 * p.r));
  return squeeze_part + disp_part;
}

double squeezing_channel_qfi_optimal(double lambda, double r, double d_abs) {
  const double c = std::cosh(2.0 * r);
  return 4.0 * lambda * lambda / (lambda * lambda + 1.0) * c * c +
         4.0 / lambda * d_abs * d_abs * std::exp(2.0 * r);
}

double enhancement_squeezing_for_orders(double k) {
  if (!(k >= 0.0)) throw DomainError("order count must be non-negative");
  return std::asinh(std::sqrt((std::pow(10.0, 0.5 * k) - 1.0) / 2.0));
}

std::string_view to_string(OptimumStatus status) {
  switch (status) {
    case OptimumStatus::interior_maximum: return "interior_maximum";
    case OptimumStatus::boundary: return "boundary";
    case OptimumStatus::increasing_without_bound: return "increasing_without_bound";
  }
  return "unknown";
}

ThermalOptimum optimal_thermal_occupation(double r, double d_abs) {
  if (!(r >= 0.0) || !(d_abs >= 0.0)) throw DomainError("r and |d| must be non-negative");
  const double ch = std::cosh(2.0 * r);
  const double rhs = d_abs * d_abs * std::exp(2.0 * r) / (2.0 * ch * ch);
  auto f = [](double l) { return l * l * l / ((l * l + 1.0) * (l * l + 1.0)); };
  auto qfi = [&](double l) { return squeezing_channel_qfi_optimal(l, r, d_abs); };
  constexpr double kUpper = 1e6;
  const double peak = std::sqrt(3.0);

  ThermalOptimum out;
  // f rises on [1, sqrt 3] and falls after; H increases exactly where f > rhs.
  if (rhs >= f(peak)) {
    out.lambda = 1.0;
    out.status = OptimumStatus::boundary;
  } else if (rhs <= f(kUpper)) {
    out.lambda = kUpper;
    out.status = OptimumStatus::increasing_without_bound;
  } else {
    double lo = peak, hi = kUpper;
    while (hi - lo > 1e-12 * hi) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) > rhs ? lo : hi) = mid;
    }
    const double root = 0.5 * (lo + hi);
    // With f(1) <= rhs the boundary is a competing local maximum.
    if (f(1.0) <= rhs && qfi(1.0) > qfi(root)) {
      out.lambda = 1.0;
      out.status = OptimumStatus::boundary;
    } else {
      out.lambda = root;
      out.status = OptimumStatus::interior_maximum;
    }
  }
  out.residual = std::abs(f(out.lambda) - rhs);
  out.qfi = qfi(out.lambda);
  return out;
}

double qfi_max_photon_budget(double n, double n_th, double n_d) {
  constexpr double kSlack = 1e-12;
  if (!(n_th >= 0.0) || !(n_d >= 0.0) || n_th + n_d > n + kSlack) {
    throw DomainError("photon budget needs 0 <= n_th, n_d and n_th + n_d <= n");
  }
  const double rest = std::max(0.0, n - n_d - n_th);
  const double a = 1.0 + 2.0 * n - 2.0 * n_d;
  const double b = 1.0 + 2.0 * n_th;
  return 2.0 * a * a / (1.0 + 2.0 * n_th * (1.0 + n_th)) +
         4.0 * n_d * (a + 2.0 * std::sqrt(rest) * std::sqrt(1.0 + n - n_d + n_th)) / (b * b);
}

BudgetOptimum photon_budget_argmax(double n, double step) {
  if (!(n >= 0.0) || !(step > 0.0)) throw DomainError("invalid photon budget search");
  BudgetOptimum best{0.0, 0.0, qfi_max_photon_budget(n, 0.0, 0.0)};
  auto scan = [&](double th_lo, double th_hi, double d_lo, double d_hi, double h) {
    const long steps_th = static_cast<long>(std::floor((th_hi - th_lo) / h + 1e-9));
    const long steps_d = static_cast<long>(std::floor((d_hi - d_lo) / h + 1e-9));
    for (long i = 0; i <= steps_th; ++i) {
      const double th = th_lo + static_cast<double>(i) * h;
      for (long j = 0; j <= steps_d; ++j) {
        const double d = d_lo + static_cast<double>(j) * h;
        if (th + d > n + 1e-12) break;
        const double v = qfi_max_photon_budget(n, th, d);
        if (v > best.value) best = {th, d, v};
      }
    }
  };
  scan(0.0, n, 0.0, n, step);
  for (double h = step / 10.0; h >= step * 1e-3; h /= 10.0) {
    const double th = best.n_th, d = best.n_d;
    scan(std::max(0.0, th - 10.0 * h), std::min(n, th + 10.0 * h), std::max(0.0, d - 10.0 * h),
         std::min(n, d + 10.0 * h), h);
  }
  return best;
}

std::vector<std::array<double, 2>> ellipse_export(const GaussianState& state, int n_points) {
  if (state.modes() != 1) throw DomainError("ellipse export needs a one-mode state");
  if (n_points < 3) throw DomainError("ellipse export needs at least three points");
  const RealGaussianState real = to_real(state);
  const Eigen::SelfAdjointEigenSolver<RMatrix> es(real.covariance);
  const RMatrix root = es.operatorSqrt();
  std::vector<std::array<double, 2>> out;
  out.reserve(static_cast<std::size_t>(n_points));
  for (int k = 0; k < n_points; ++k) {
    const double t = 2.0 * std::numbers::pi * k / n_points;
    const Eigen::Vector2d p = real.displacement + root * Eigen::Vector2d(std::cos(t), std::sin(t));
    out.push_back({p(0), p(1)});
  }
  return out;
}

double ellipse_area(const std::vector<std::array<double, 2>>& points) {
  const std::size_t n = points.size();
  if (n < 3) throw DomainError("ellipse area needs at least three points");
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = points[i];
    const auto& b = points[(i + 1) % n];
    twice += a[0] * b[1] - b[0] * a[1];
  }
  const double polygon = 0.5 * std::abs(twice);
  const double m = static_cast<double>(n);
  return polygon / (m / (2.0 * std::numbers::pi) * std::sin(2.0 * std::numbers::pi / m));
}

}  // namespace gqfi
