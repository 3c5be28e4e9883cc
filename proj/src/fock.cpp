#include "gqfi/fock.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "gqfi/errors.hpp"

namespace gqfi {

namespace {

constexpr double kThermalCut = 1e-13;
constexpr double kSparseCut = 1e-16;

CMatrix annihilation(int w) {
  CMatrix a = CMatrix::Zero(w, w);
  for (int n = 1; n < w; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

CMatrix squeeze_op(int w, double r) {
  if (r == 0.0) return CMatrix::Identity(w, w);
  const CMatrix a = annihilation(w);
  const CMatrix a2 = a * a;
  return (0.5 * r * (a2 - a2.adjoint())).exp();
}

CMatrix rotation_op(int w, double theta) {
  CVector diag(w);
  for (int n = 0; n < w; ++n) diag(n) = std::polar(1.0, -theta * n);
  return diag.asDiagonal();
}

CMatrix displacement_op(int w, Complex alpha) {
  if (alpha == Complex(0.0)) return CMatrix::Identity(w, w);
  const CMatrix a = annihilation(w);
  return (alpha * a.adjoint() - std::conj(alpha) * a).exp();
}

// exp(r (a1 a2 - a1^+ a2^+)) on the truncated two-mode space, index n1 * w + n2.
// The generator conserves n1 - n2, so it is exponentiated one sector at a time.
class TwoModeSqueezeOp {
 public:
  TwoModeSqueezeOp(int w, double r) : w_(w) {
    for (int m = -(w - 1); m <= w - 1; ++m) {
      std::vector<int> idx;
      for (int k = 0; k < w; ++k) {
        const int n1 = m >= 0 ? k + m : k;
        const int n2 = m >= 0 ? k : k - m;
        if (n1 >= w || n2 >= w) break;
        idx.push_back(n1 * w + n2);
      }
      const int s = static_cast<int>(idx.size());
      RMatrix g = RMatrix::Zero(s, s);
      for (int k = 0; k + 1 < s; ++k) {
        const int n1 = m >= 0 ? k + m : k;
        const int n2 = m >= 0 ? k : k - m;
        const double amp = r * std::sqrt(static_cast<double>(n1 + 1) * (n2 + 1));
        g(k, k + 1) = amp;   // a1 a2 lowers state k + 1 to k
        g(k + 1, k) = -amp;  // -a1^+ a2^+ raises state k to k + 1
      }
      indices_.push_back(std::move(idx));
      blocks_.push_back(g.exp().cast<Complex>());
    }
  }

  // Image of the basis state |n1, n2>, which lies in a single sector.
  template <typename Column>
  void basis_image(int n1, int n2, Column&& out) const {
    const std::size_t b = static_cast<std::size_t>(n1 - n2 + w_ - 1);
    const int k = std::min(n1, n2);
    const auto& idx = indices_[b];
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out(idx[i]) = blocks_[b](static_cast<Eigen::Index>(i), k);
    }
  }

  void apply(CMatrix& columns) const {
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const auto& idx = indices_[b];
      const int s = static_cast<int>(idx.size());
      CMatrix gathered(s, columns.cols());
      for (int i = 0; i < s; ++i) gathered.row(i) = columns.row(idx[i]);
      gathered = blocks_[b] * gathered;
      for (int i = 0; i < s; ++i) columns.row(idx[i]) = gathered.row(i);
    }
  }

 private:
  int w_;
  std::vector<std::vector<int>> indices_;
  std::vector<CMatrix> blocks_;
};

std::vector<double> thermal_weights(double n_th, int w) {
  std::vector<double> p(static_cast<std::size_t>(w), 0.0);
  if (n_th == 0.0) {
    p[0] = 1.0;
    return p;
  }
  const double q = n_th / (1.0 + n_th);
  double v = 1.0 / (1.0 + n_th);
  for (int k = 0; k < w; ++k) {
    p[static_cast<std::size_t>(k)] = v;
    v *= q;
  }
  return p;
}

CMatrix mode_unitary(const ModeProbe& m, int w, const std::optional<ChannelSpec>& channel,
                     int mode, double eps) {
  CMatrix u = displacement_op(w, m.displacement()) * rotation_op(w, m.theta) * squeeze_op(w, m.r);
  if (channel && channel->mode == mode) {
    switch (channel->kind) {
      case ChannelKind::squeeze: u = squeeze_op(w, eps) * u; break;
      case ChannelKind::rotate: u = rotation_op(w, eps) * u; break;
      case ChannelKind::displace: u = displacement_op(w, eps * channel->direction) * u; break;
      case ChannelKind::two_mode_squeeze: break;
    }
  }
  return u;
}

struct RawBuild {
  CMatrix v;
  std::vector<std::pair<int, int>> cols;
  double deficit = 0.0;
};

RawBuild build_once(const ProbeSpec& spec, const std::optional<ChannelSpec>& channel, double eps,
                    int n, int w) {
  const int modes = spec.count();
  RawBuild out;
  CMatrix& v = out.v;
  if (modes == 1) {
    const std::vector<double> p = thermal_weights(spec.modes[0].n_th, w);
    const CMatrix u = mode_unitary(spec.modes[0], w, channel, 0, eps);
    for (int k = 0; k < w; ++k) {
      if (p[static_cast<std::size_t>(k)] > kThermalCut) out.cols.emplace_back(k, 0);
    }
    v.resize(n, static_cast<Eigen::Index>(out.cols.size()));
    for (std::size_t c = 0; c < out.cols.size(); ++c) {
      const int k = out.cols[c].first;
      v.col(static_cast<Eigen::Index>(c)) = u.col(k).head(n) * std::sqrt(p[static_cast<std::size_t>(k)]);
    }
  } else {
    const std::vector<double> p1 = thermal_weights(spec.modes[0].n_th, w);
    const std::vector<double> p2 = thermal_weights(spec.modes[1].n_th, w);
    auto& cols = out.cols;
    for (int k1 = 0; k1 < w; ++k1) {
      for (int k2 = 0; k2 < w; ++k2) {
        if (p1[static_cast<std::size_t>(k1)] * p2[static_cast<std::size_t>(k2)] > kThermalCut) {
          cols.emplace_back(k1, k2);
        }
      }
    }
    const Eigen::Index ncols = static_cast<Eigen::Index>(cols.size());
    CMatrix work = CMatrix::Zero(static_cast<Eigen::Index>(w) * w, ncols);
    if (spec.two_mode_squeezing != 0.0) {
      const TwoModeSqueezeOp tms(w, spec.two_mode_squeezing);
      for (Eigen::Index c = 0; c < ncols; ++c) tms.basis_image(cols[c].first, cols[c].second, work.col(c));
    } else {
      for (Eigen::Index c = 0; c < ncols; ++c) work(cols[c].first * w + cols[c].second, c) = 1.0;
    }

    const CMatrix u1 = mode_unitary(spec.modes[0], w, channel, 0, eps);
    const CMatrix u2 = mode_unitary(spec.modes[1], w, channel, 1, eps);
    for (Eigen::Index c = 0; c < ncols; ++c) {
      // Before U1 (x) U2 each column lives on one n1 - n2 diagonal, so
      // U2 M U1^T reduces to a product over the nonzero amplitudes.
      const double floor = kSparseCut * work.col(c).cwiseAbs().maxCoeff();
      std::vector<Eigen::Index> nz;
      for (Eigen::Index i = 0; i < work.rows(); ++i) {
        if (std::abs(work(i, c)) > floor) nz.push_back(i);
      }
      const Eigen::Index s = static_cast<Eigen::Index>(nz.size());
      CMatrix left(w, s), right(w, s);
      for (Eigen::Index k = 0; k < s; ++k) {
        const Eigen::Index n1 = nz[static_cast<std::size_t>(k)] / w;
        const Eigen::Index n2 = nz[static_cast<std::size_t>(k)] % w;
        left.col(k) = u2.col(n2) * work(nz[static_cast<std::size_t>(k)], c);
        right.col(k) = u1.col(n1);
      }
      // Column-major view: element (n2, n1) holds the amplitude of |n1, n2>.
      Eigen::Map<CMatrix> mt(work.col(c).data(), w, w);
      mt.noalias() = left * right.transpose();
    }
    if (channel && channel->kind == ChannelKind::two_mode_squeeze) {
      if (channel->mode == channel->mode_b) throw DomainError("two-mode squeezer needs two modes");
      TwoModeSqueezeOp(w, eps).apply(work);
    }
    v.resize(static_cast<Eigen::Index>(n) * n, ncols);
    for (Eigen::Index c = 0; c < ncols; ++c) {
      const double amp = std::sqrt(p1[static_cast<std::size_t>(cols[c].first)] *
                                   p2[static_cast<std::size_t>(cols[c].second)]);
      for (int n1 = 0; n1 < n; ++n1) {
        for (int n2 = 0; n2 < n; ++n2) v(n1 * n + n2, c) = work(n1 * w + n2, c) * amp;
      }
    }
  }
  const double trace = v.squaredNorm();
  out.deficit = 1.0 - trace;
  v /= std::sqrt(trace);
  return out;
}

int working_dim(int n) { return n + n / 2 + 20; }
int reduced_working_dim(int n) { return n + n / 4 + 10; }

int initial_cutoff(const ProbeSpec& spec, const std::optional<ChannelSpec>& channel, double eps) {
  const GaussianState g = channel ? apply_channel_family(spec, *channel).evaluate(eps)
                                  : build_probe(spec);
  const int modes = g.modes();
  double worst = 0.0;
  for (int i = 0; i < modes; ++i) {
    const double nbar =
        0.5 * (g.covariance()(i, i).real() - 1.0) + std::norm(g.displacement()(i));
    worst = std::max(worst, nbar + 10.0 * std::sqrt(nbar * nbar + nbar));
  }
  return static_cast<int>(std::ceil(worst)) + 12;
}

// ||A A^+ - B B^+||_F <= ||A - B||_F (||A||_F + ||B||_F) with the columns of B
// aligned to those of A by thermal index; unmatched columns count as zero.
double drift_bound(const RawBuild& a, const RawBuild& b) {
  std::map<std::pair<int, int>, Eigen::Index> where;
  for (std::size_t c = 0; c < b.cols.size(); ++c) where[b.cols[c]] = static_cast<Eigen::Index>(c);
  double diff = 0.0;
  for (std::size_t c = 0; c < a.cols.size(); ++c) {
    const auto it = where.find(a.cols[c]);
    const auto col = a.v.col(static_cast<Eigen::Index>(c));
    if (it == where.end()) {
      diff += col.squaredNorm();
    } else {
      diff += (col - b.v.col(it->second)).squaredNorm();
      where.erase(it);
    }
  }
  for (const auto& [key, c] : where) diff += b.v.col(c).squaredNorm();
  return std::sqrt(diff) * (a.v.norm() + b.v.norm());
}

// Applies the annihilation operator of one mode to every column.
CMatrix lower(const CMatrix& v, int mode, int n, int modes) {
  CMatrix out = CMatrix::Zero(v.rows(), v.cols());
  if (modes == 1) {
    for (int k = 1; k < n; ++k) out.row(k - 1) = std::sqrt(static_cast<double>(k)) * v.row(k);
    return out;
  }
  for (int n1 = 0; n1 < n; ++n1) {
    for (int n2 = 0; n2 < n; ++n2) {
      const int k = mode == 0 ? n1 : n2;
      if (k == 0) continue;
      const int target = mode == 0 ? (n1 - 1) * n + n2 : n1 * n + n2 - 1;
      out.row(target) = std::sqrt(static_cast<double>(k)) * v.row(n1 * n + n2);
    }
  }
  return out;
}

// tr(x^+ y), the Hilbert-Schmidt pairing of two factors.
Complex hs_pair(const CMatrix& x, const CMatrix& y) { return (x.conjugate().cwiseProduct(y)).sum(); }

}  // namespace

CMatrix FockDensityMatrix::dense() const {
  CMatrix rho = CMatrix::Zero(factor.rows(), factor.rows());
  rho.selfadjointView<Eigen::Lower>().rankUpdate(factor);
  return rho.selfadjointView<Eigen::Lower>();
}

FockDensityMatrix fock_build(const ProbeSpec& spec, const CutoffConfig& cfg,
                             const std::optional<ChannelSpec>& channel, double eps) {
  spec.validate();
  const int modes = spec.count();
  if (modes > 2) throw DomainError("the Fock oracle supports one or two modes");
  const int cap = modes == 1 ? cfg.max_single_mode : cfg.max_two_mode;
  int n = cfg.n_max > 0 ? cfg.n_max : std::min(cap, initial_cutoff(spec, channel, eps));
  if (n < 2) throw DomainError("cutoff must be at least 2");

  for (;;) {
    RawBuild big = build_once(spec, channel, eps, n, working_dim(n));
    FockDensityMatrix out;
    out.modes = modes;
    out.cutoff = n;
    out.trace_deficit = big.deficit;
    bool ok = big.deficit <= cfg.cutoff_tol;
    if (cfg.auto_grow && ok) {
      const RawBuild small = build_once(spec, channel, eps, n, reduced_working_dim(n));
      out.drift = drift_bound(big, small);
      ok = out.drift <= cfg.cutoff_tol;
    }
    out.factor = std::move(big.v);
    if (ok || !cfg.auto_grow) {
      if (!ok) {
        std::ostringstream os;
        os << "trace deficit " << out.trace_deficit << " at cutoff " << n
           << " exceeds the tolerance";
        throw ConvergenceError(os.str(), out.trace_deficit);
      }
      return out;
    }
    if (n >= cap) {
      std::ostringstream os;
      os << "cutoff cap " << cap << " reached with trace deficit " << out.trace_deficit
         << " and drift " << out.drift;
      throw ConvergenceError(os.str(), std::max(out.trace_deficit, out.drift));
    }
    n = std::min(cap, n + std::max(8, n / 2));
  }
}

GaussianState fock_moments(const FockDensityMatrix& rho) {
  const int modes = rho.modes;
  std::vector<CMatrix> lowered;
  for (int i = 0; i < modes; ++i) lowered.push_back(lower(rho.factor, i, rho.cutoff, modes));

  CVector means(modes);
  for (int i = 0; i < modes; ++i) means(i) = hs_pair(rho.factor, lowered[static_cast<std::size_t>(i)]);
  CMatrix x(modes, modes), y(modes, modes);
  for (int i = 0; i < modes; ++i) {
    for (int j = 0; j < modes; ++j) {
      const CMatrix& ai = lowered[static_cast<std::size_t>(i)];
      const CMatrix& aj = lowered[static_cast<std::size_t>(j)];
      const Complex adag_a = hs_pair(aj, ai) - std::conj(means(j)) * means(i);
      const Complex a_a = hs_pair(rho.factor, lower(aj, i, rho.cutoff, modes)) - means(i) * means(j);
      x(i, j) = 2.0 * adag_a + (i == j ? 1.0 : 0.0);
      y(i, j) = 2.0 * a_a;
    }
  }
  CMatrix sigma(2 * modes, 2 * modes);
  sigma << x, y, y.conjugate(), x.conjugate();
  sigma = 0.5 * (sigma + sigma.adjoint()).eval();
  return GaussianState::from_mode_means(means, std::move(sigma));
}

double uhlmann_fidelity_fock(const FockDensityMatrix& a, const FockDensityMatrix& b) {
  if (a.factor.rows() != b.factor.rows() || a.modes != b.modes) {
    throw DomainError("density matrices have different shapes");
  }
  // sqrt(rho_a) = A W for a partial isometry W, so sqrt(rho_a) sqrt(rho_b)
  // and A^+ B share their singular values.
  const CMatrix overlap = a.factor.adjoint() * b.factor;
  const double s = Eigen::JacobiSVD<CMatrix>(overlap).singularValues().sum();
  return s * s;
}

double uhlmann_fidelity_dense(const CMatrix& rho1, const CMatrix& rho2) {
  if (rho1.rows() != rho2.rows() || rho1.rows() != rho1.cols() || rho2.rows() != rho2.cols()) {
    throw DomainError("density matrices have different shapes");
  }
  constexpr double kNegTol = 1e-8;
  const Eigen::SelfAdjointEigenSolver<CMatrix> ea(rho1);
  if (ea.eigenvalues().minCoeff() < -kNegTol) throw DomainError("first density matrix is not PSD");
  const RVector& p = ea.eigenvalues();
  const double pmax = p.maxCoeff();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > 1e-14 * pmax) keep.push_back(i);
  }
  const Eigen::Index k = static_cast<Eigen::Index>(keep.size());
  CMatrix vk(rho1.rows(), k);
  RVector root(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    vk.col(i) = ea.eigenvectors().col(keep[static_cast<std::size_t>(i)]);
    root(i) = std::sqrt(p(keep[static_cast<std::size_t>(i)]));
  }
  CMatrix m = root.asDiagonal() * (vk.adjoint() * rho2 * vk) * root.asDiagonal();
  m = 0.5 * (m + m.adjoint()).eval();
  const Eigen::SelfAdjointEigenSolver<CMatrix> em(m, Eigen::EigenvaluesOnly);
  if (em.eigenvalues().minCoeff() < -kNegTol) throw DomainError("second density matrix is not PSD");
  double s = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) s += std::sqrt(std::max(0.0, em.eigenvalues()(i)));
  return s * s;
}

FockQfi qfi_fock_fd(const ProbeSpec& spec, const ChannelSpec& channel, double eps, double step,
                    const CutoffConfig& cfg) {
  if (!(step > 0.0)) throw DomainError("Fock finite-difference step must be positive");
  const FockDensityMatrix mid0 = fock_build(spec, cfg, channel, eps);
  CutoffConfig fixed = cfg;
  fixed.n_max = mid0.cutoff;
  fixed.auto_grow = false;
  const int cap = spec.count() == 1 ? cfg.max_single_mode : cfg.max_two_mode;

  for (;;) {
    try {
      const FockDensityMatrix mid = fock_build(spec, fixed, channel, eps);
      auto quotient = [&](double h) {
        const double fp = uhlmann_fidelity_fock(mid, fock_build(spec, fixed, channel, eps + h));
        const double fm = uhlmann_fidelity_fock(mid, fock_build(spec, fixed, channel, eps - h));
        const double qp = 8.0 * (1.0 - std::sqrt(std::min(1.0, fp))) / (h * h);
        const double qm = 8.0 * (1.0 - std::sqrt(std::min(1.0, fm))) / (h * h);
        return 0.5 * (qp + qm);
      };
      FockQfi out;
      out.value_step = quotient(step);
      out.value_double_step = quotient(2.0 * step);
      out.value = (4.0 * out.value_step - out.value_double_step) / 3.0;
      out.cutoff = fixed.n_max;
      out.trace_deficit = mid.trace_deficit;
      return out;
    } catch (const ConvergenceError&) {
      if (!cfg.auto_grow || fixed.n_max >= cap) throw;
      fixed.n_max = std::min(cap, fixed.n_max + std::max(8, fixed.n_max / 2));
    }
  }
}

}  // namespace gqfi
