#include "gqfi/fidelity.hpp"

#include <cmath>

#include "gqfi/errors.hpp"

namespace gqfi {

namespace {

constexpr double kClamp = 1e-12;

double clamped_sqrt(double x, const char* what) {
  if (x < -kClamp * std::max(1.0, std::abs(x))) {
    throw NumericalError(std::string("negative square-root argument in ") + what);
  }
  return std::sqrt(std::max(0.0, x));
}

}  // namespace

FidelityBreakdown two_mode_fidelity(const GaussianState& a, const GaussianState& b) {
  if (a.modes() != 2 || b.modes() != 2) {
    throw StructuralError("two-mode fidelity needs two two-mode states");
  }
  const CMatrix k = k_matrix(2);
  const CMatrix id = CMatrix::Identity(4, 4);
  const CMatrix& s1 = a.covariance();
  const CMatrix& s2 = b.covariance();

  FidelityBreakdown out;
  const CMatrix sum = s1 + s2;
  out.delta = sum.determinant().real();
  out.gamma = (id + k * s1 * k * s2).determinant().real();
  out.lambda = (s1 + k).determinant().real() * (s2 + k).determinant().real();

  const CVector dd = a.displacement() - b.displacement();
  const double exponent = dd.dot(sum.partialPivLu().solve(dd)).real();
  out.displacement_factor = std::exp(-exponent);

  // s - sqrt(s^2 - delta) rewritten as delta / (s + sqrt(s^2 - delta)).
  const double s = clamped_sqrt(out.gamma, "Gamma") + clamped_sqrt(out.lambda, "Lambda");
  const double root = clamped_sqrt(s * s - out.delta, "s^2 - Delta");
  if (!(out.delta > 0.0)) throw NumericalError("det(sigma1 + sigma2) is not positive");
  out.value = 4.0 * out.displacement_factor * (s + root) / out.delta;
  return out;
}

double bures_qfi_fd(const StateFamily& family, double eps, double step) {
  if (!(step > 0.0)) throw DomainError("Bures step must be positive");
  if (!family.domain().contains(eps - step) || !family.domain().contains(eps + step)) {
    throw DomainError("Bures stencil leaves the family domain");
  }
  const GaussianState mid = family.evaluate(eps);
  const double fp = two_mode_fidelity(mid, family.evaluate(eps + step)).value;
  const double fm = two_mode_fidelity(mid, family.evaluate(eps - step)).value;
  const double qp = 8.0 * (1.0 - std::sqrt(std::min(1.0, fp))) / (step * step);
  const double qm = 8.0 * (1.0 - std::sqrt(std::min(1.0, fm))) / (step * step);
  return 0.5 * (qp + qm);
}

}  // namespace gqfi
