#include "gqfi/williamson.hpp"

#include <cmath>
#include <sstream>

#include "gqfi/errors.hpp"

namespace gqfi {
namespace {

struct HermitianSqrt {
  CMatrix root;
};

HermitianSqrt positive_sqrt(const CMatrix& sigma) {
  const CMatrix h = 0.5 * (sigma + sigma.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  if (es.info() != Eigen::Success) throw NumericalError("eigen-solver failed on covariance");
  const RVector& w = es.eigenvalues();
  if (w(0) <= 0.0) {
    std::ostringstream os;
    os << "covariance is not positive definite (smallest eigenvalue " << w(0) << ")";
    throw UnphysicalStateError(os.str());
  }
  return {es.eigenvectors() * w.cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint()};
}

struct SymplecticSpectrum {
  CMatrix sqrt_sigma;
  RVector raw;       // ascending eigenvalues of sigma^{1/2} K sigma^{1/2}
  CMatrix vectors;   // matching eigenvectors
  RVector lambda;    // descending, paired average
};

SymplecticSpectrum spectrum(const CMatrix& sigma, const Tolerances& tol) {
  if (sigma.rows() == 0 || sigma.rows() != sigma.cols() || sigma.rows() % 2 != 0) {
    throw StructuralError("covariance must be a nonempty 2N x 2N matrix");
  }
  const int n = static_cast<int>(sigma.rows() / 2);
  SymplecticSpectrum out;
  out.sqrt_sigma = positive_sqrt(sigma).root;
  CMatrix m = out.sqrt_sigma * k_matrix(n) * out.sqrt_sigma;
  m = 0.5 * (m + m.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m);
  if (es.info() != Eigen::Success) throw NumericalError("eigen-solver failed on sigma^1/2 K sigma^1/2");
  out.raw = es.eigenvalues();
  out.vectors = es.eigenvectors();
  out.lambda.resize(n);
  for (int i = 0; i < n; ++i) {
    const double pos = out.raw(2 * n - 1 - i);
    const double neg = out.raw(i);
    if (std::abs(pos + neg) > tol.pair * std::max(1.0, pos) || pos <= 0.0) {
      std::ostringstream os;
      os << "eigenvalues of K sigma do not pair as +-lambda (" << pos << ", " << neg << ")";
      throw StructuralError(os.str());
    }
    out.lambda(i) = 0.5 * (pos - neg);
  }
  return out;
}

}  // namespace

RVector symplectic_eigenvalues(const CMatrix& sigma, const Tolerances& tol) {
  return spectrum(sigma, tol).lambda;
}

std::pair<double, double> symplectic_eigenvalues_two_mode(const CMatrix& sigma) {
  if (sigma.rows() != 4 || sigma.cols() != 4) {
    throw StructuralError("two-mode closed form needs a 4 x 4 covariance");
  }
  const CMatrix a = k_matrix(2) * sigma;
  const double tr_a2 = real_trace(a * a);
  const double det_a = a.determinant().real();
  double disc = tr_a2 * tr_a2 - 16.0 * det_a;
  if (disc < 0.0) {
    if (disc < -1e-10 * tr_a2 * tr_a2) {
      throw NumericalError("negative discriminant in two-mode symplectic eigenvalues");
    }
    disc = 0.0;
  }
  const double root = std::sqrt(disc);
  const double hi = 0.5 * std::sqrt(tr_a2 + root);
  const double lo_arg = tr_a2 - root;
  if (lo_arg < 0.0) throw NumericalError("negative argument in two-mode symplectic eigenvalues");
  const double lo = 0.5 * std::sqrt(lo_arg);
  return {hi, lo};
}

std::vector<std::pair<int, int>> degenerate_clusters(const RVector& values, double tol) {
  std::vector<std::pair<int, int>> out;
  const int n = static_cast<int>(values.size());
  int start = 0;
  for (int i = 1; i <= n; ++i) {
    const bool breaks = i == n || std::abs(values(i) - values(i - 1)) >= tol;
    if (breaks) {
      if (i - start > 1) out.emplace_back(start, i);
      start = i;
    }
  }
  return out;
}

CMatrix WilliamsonFactors::diagonal() const {
  const int n = modes();
  RVector diag(2 * n);
  diag << eigenvalues, eigenvalues;
  return diag.cast<Complex>().asDiagonal();
}

CMatrix WilliamsonFactors::reconstruct() const {
  const CMatrix& s = symplectic.full();
  return s * diagonal() * s.adjoint();
}

WilliamsonFactors williamson_decompose(const CMatrix& sigma, const Tolerances& tol) {
  const SymplecticSpectrum sp = spectrum(sigma, tol);
  const int n = static_cast<int>(sp.lambda.size());
  const CMatrix k = k_matrix(n);

  // Column i <-> +lambda_i: eigenvector index 2n-1-i of the ascending spectrum.
  CMatrix cols(2 * n, n);
  for (int i = 0; i < n; ++i) {
    const int idx = 2 * n - 1 - i;
    cols.col(i) = sp.sqrt_sigma * sp.vectors.col(idx) / std::sqrt(sp.raw(idx));
  }

  WilliamsonFactors out;
  out.eigenvalues = sp.lambda;
  out.gauge.degenerate_blocks = degenerate_clusters(sp.lambda, tol.degen);

  for (const auto& [first, last] : out.gauge.degenerate_blocks) {
    for (int j = first; j < last; ++j) {
      for (int i = first; i < j; ++i) {
        const Complex overlap = cols.col(i).dot(k * cols.col(j));
        cols.col(j) -= overlap * cols.col(i);
      }
      const double norm2 = cols.col(j).dot(k * cols.col(j)).real();
      if (norm2 <= 0.0) throw NumericalError("K-norm lost positivity in degenerate block");
      cols.col(j) /= std::sqrt(norm2);
    }
  }

  // Phase gauge: largest-magnitude alpha entry real positive, lowest row on ties.
  for (int i = 0; i < n; ++i) {
    const auto alpha_col = cols.col(i).head(n);
    const double max_abs = alpha_col.cwiseAbs().maxCoeff();
    int pivot = 0;
    for (int r = 0; r < n; ++r) {
      if (std::abs(alpha_col(r)) >= max_abs * (1.0 - 1e-12)) {
        pivot = r;
        break;
      }
    }
    const Complex phase = alpha_col(pivot) / std::abs(alpha_col(pivot));
    cols.col(i) *= std::conj(phase);
    cols(pivot, i) = std::abs(cols(pivot, i));
  }

  const CMatrix alpha = cols.topRows(n);
  const CMatrix beta = cols.bottomRows(n).conjugate();
  out.symplectic = SymplecticMatrix::from_blocks(alpha, beta);

  const double scale = std::max(1.0, sigma.norm());
  const double recon = (out.reconstruct() - sigma).norm();
  if (recon > tol.recon_rel * scale) {
    std::ostringstream os;
    os << "Williamson reconstruction error " << recon << " exceeds tolerance";
    throw NumericalError(os.str());
  }
  return out;
}

}  // namespace gqfi
