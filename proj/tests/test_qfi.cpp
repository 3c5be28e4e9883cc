#include <gtest/gtest.h>

#include <cmath>

#include "gqfi/errors.hpp"
#include "gqfi/qfi.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

namespace gqfi {
namespace {

using testing::Rng;

double oracle(const testing::AnalyticFamilySpec& f, double eps) {
  return testing::real_form_qfi(f.state(eps).covariance(), f.sigma_dot(eps), f.d_dot());
}

// Pure family S(eps) S(eps)^+ with moving displacement.
testing::AnalyticFamilySpec pure_family(int n, Rng& rng) {
  auto f = testing::random_analytic_family(n, rng, 1.0, 1.0);
  f.l0.setOnes();
  f.l1.setZero();
  f.l2.setZero();
  return f;
}

double pure_reference(const testing::AnalyticFamilySpec& f, double eps) {
  const CMatrix sigma = f.state(eps).covariance();
  const CMatrix x = sigma.inverse() * f.sigma_dot(eps);
  const CVector dd = f.d_dot();
  return 0.25 * (x * x).trace().real() + 2.0 * (dd.adjoint() * sigma.inverse() * dd)(0).real();
}

TEST(Methods, NamesRoundTrip) {
  for (QfiMethod m : {QfiMethod::two_mode_covariance, QfiMethod::two_mode_williamson,
                      QfiMethod::series, QfiMethod::multimode_williamson, QfiMethod::isothermal,
                      QfiMethod::pure_point, QfiMethod::regularized, QfiMethod::bures_fd,
                      QfiMethod::fock_fd}) {
    EXPECT_EQ(method_from_string(to_string(m)), m);
  }
  EXPECT_FALSE(method_from_string("nonsense").has_value());
}

TEST(PointFormulas, CoherentDisplacementGivesFour) {
  CVector d(2);
  d << 1.0, 1.0;
  EXPECT_NEAR(displacement_term(CMatrix::Identity(2, 2), d), 4.0, 1e-15);
}

TEST(PointFormulas, SteinMatchesRealFormOracle) {
  Rng rng(41);
  for (int trial = 0; trial < 40; ++trial) {
    const auto f = testing::random_analytic_family(1 + trial % 4, rng, 1.05, 4.0);
    const double expect = oracle(f, 0.0);
    EXPECT_NEAR(stein_qfi(f.state(0.0).covariance(), f.sigma_dot(0.0), f.d_dot()), expect,
                1e-9 * expect);
  }
}

TEST(TwoMode, AllClosedFormsAgreeWithOracle) {
  Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = testing::random_analytic_family(2, rng, 1.05, 4.0);
    const StateFamily fam = f.family();
    const double expect = oracle(f, 0.1);
    EXPECT_NEAR(qfi_two_mode(fam, 0.1).value, expect, 1e-8 * expect) << trial;
    EXPECT_NEAR(qfi_two_mode_williamson(fam, 0.1).value, expect, 1e-8 * expect) << trial;
    EXPECT_NEAR(qfi_multimode_williamson(fam, 0.1).value, expect, 1e-8 * expect) << trial;
  }
}

TEST(TwoMode, FiniteDifferenceTierStaysClose) {
  Rng rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = testing::random_analytic_family(2, rng, 1.2, 3.0);
    const StateFamily fam = f.fd_family();
    const double expect = oracle(f, 0.0);
    EXPECT_NEAR(qfi_two_mode(fam, 0.0).value, expect, 1e-6 * expect);
    EXPECT_NEAR(qfi_multimode_williamson(fam, 0.0).value, expect, 1e-5 * expect);
  }
}

TEST(TwoMode, RejectsOtherModeCounts) {
  Rng rng(44);
  const auto f = testing::random_analytic_family(3, rng, 1.2, 3.0);
  EXPECT_THROW(qfi_two_mode(f.family(), 0.0), ApplicabilityError);
  EXPECT_THROW(qfi_two_mode_williamson(f.family(), 0.0), ApplicabilityError);
}

TEST(TwoMode, RejectsPureModes) {
  Rng rng(45);
  auto f = testing::random_analytic_family(2, rng, 1.2, 3.0);
  f.l0(1) = 1.0;
  f.l1(1) = 0.0;
  EXPECT_THROW(qfi_two_mode(f.family(), 0.0), PurityError);
}

TEST(Multimode, AgreesWithOracleUpToFourModes) {
  Rng rng(46);
  for (int trial = 0; trial < 40; ++trial) {
    const auto f = testing::random_analytic_family(1 + trial % 4, rng, 1.05, 4.0);
    const double expect = oracle(f, 0.05);
    EXPECT_NEAR(qfi_multimode_williamson(f.family(), 0.05).value, expect, 1e-8 * expect);
    EXPECT_NEAR(qfi_multimode_williamson(f.family(false), 0.05).value, expect, 1e-5 * expect);
  }
}

TEST(Series, WithinReportedBound) {
  Rng rng(47);
  for (int trial = 0; trial < 40; ++trial) {
    const auto f = testing::random_analytic_family(1 + trial % 4, rng, 1.05, 4.0);
    const QfiEstimate e = qfi_series(f.family(), 0.0);
    ASSERT_TRUE(e.error_bound.has_value());
    ASSERT_TRUE(e.diagnostics.truncation_order.has_value());
    const double expect = oracle(f, 0.0);
    // The oracle carries its own rounding; allow for it on top of the bound.
    EXPECT_LE(std::abs(e.value - expect), *e.error_bound + 1e-12 * expect) << trial;
  }
}

TEST(Series, RemainderBoundIsSoundAgainstDirectTail) {
  Rng rng(48);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = testing::random_analytic_family(1 + trial % 4, rng, 1.05, 4.0);
    const CMatrix sigma = f.state(0.0).covariance();
    const CMatrix sd = f.sigma_dot(0.0);
    const double lmin = symplectic_eigenvalues(sigma).minCoeff();
    const long total = static_cast<long>(std::ceil(40.0 / std::log10(lmin))) + 40;
    const std::vector<double> terms = series_terms(sigma, sd, total);
    for (long m = 1; m <= 30; ++m) {
      double tail = 0.0;
      for (long k = total; k > m; --k) tail += terms[static_cast<std::size_t>(k - 1)];
      EXPECT_LE(0.5 * tail, series_remainder_bound(sigma, sd, m)) << trial << " M=" << m;
    }
  }
}

TEST(Series, FixedOrderAndPurity) {
  Rng rng(49);
  const auto f = testing::random_analytic_family(2, rng, 1.5, 3.0);
  QfiOptions opts;
  opts.max_order = 3;
  EXPECT_EQ(qfi_series(f.family(), 0.0, opts).diagnostics.truncation_order, 3);
  const auto p = pure_family(2, rng);
  EXPECT_THROW(qfi_series(p.family(), 0.0), PurityError);
  EXPECT_TRUE(std::isinf(series_remainder_bound(p.state(0.0).covariance(), p.sigma_dot(0.0), 5)));
}

TEST(Series, HardCapRaisesConvergenceError) {
  Rng rng(50);
  auto f = testing::random_analytic_family(1, rng, 1.0 + 1e-7, 1.0 + 1e-7);
  QfiOptions opts;
  opts.hard_cap = 100;
  EXPECT_THROW(qfi_series(f.family(), 0.0, opts), ConvergenceError);
}

TEST(Isothermal, MatchesOracleForEqualTemperatures) {
  Rng rng(51);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 3;
    auto f = testing::random_analytic_family(n, rng, 1.2, 3.0);
    f.l0.setConstant(f.l0(0));
    f.l1.setZero();
    f.l2.setZero();
    const double expect = oracle(f, 0.0);
    EXPECT_NEAR(qfi_isothermal(f.family(), 0.0).value, expect, 1e-8 * expect);
  }
}

TEST(Isothermal, RejectsUnequalSpectrum) {
  Rng rng(52);
  auto f = testing::random_analytic_family(2, rng, 1.2, 3.0);
  f.l0 << 1.5, 2.5;
  EXPECT_THROW(qfi_isothermal(f.family(), 0.0), ApplicabilityError);
}

TEST(Isothermal, RejectsMovingTemperature) {
  Rng rng(53);
  auto f = testing::random_analytic_family(1, rng, 1.5, 1.5);
  f.l1 << 0.3;
  EXPECT_THROW(qfi_isothermal(f.family(), 0.0), ApplicabilityError);
}

TEST(PurePoint, StaysPureFamiliesMatchClosedForm) {
  Rng rng(54);
  for (int trial = 0; trial < 30; ++trial) {
    const auto f = pure_family(1 + trial % 3, rng);
    const double expect = pure_reference(f, 0.0);
    EXPECT_NEAR(qfi_pure_point(f.family(), 0.0).value, expect, 1e-9 * expect);
    QfiOptions zero;
    zero.convention = PureConvention::zero;
    EXPECT_NEAR(qfi_pure_point(f.family(), 0.0, zero).value, expect, 1e-9 * expect);
    EXPECT_NEAR(qfi_regularized(f.family(), 0.0).value, expect, 1e-9 * expect);
    EXPECT_NEAR(qfi_multimode_williamson(f.family(), 0.0).value, expect, 1e-9 * expect);
  }
}

TEST(PurePoint, LimitOfMixedOracle) {
  Rng rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    const auto f = pure_family(2, rng);
    const double nu = 1.0 + 1e-7;
    const double limit = testing::real_form_qfi(nu * f.state(0.0).covariance(),
                                                nu * f.sigma_dot(0.0), f.d_dot());
    EXPECT_NEAR(qfi_pure_point(f.family(), 0.0).value, limit, 1e-5 * limit);
  }
}

TEST(PurePoint, RejectsMixedStates) {
  Rng rng(56);
  const auto f = testing::random_analytic_family(2, rng, 1.2, 3.0);
  EXPECT_THROW(qfi_pure_point(f.family(), 0.0), ApplicabilityError);
}

// lambda_1(eps) = 1 + eps^2 on one mode, the rest fixed and mixed.
testing::AnalyticFamilySpec thermalizing(int n, Rng& rng) {
  auto f = testing::random_analytic_family(n, rng, 1.5, 3.0);
  f.l0(0) = 1.0;
  f.l1(0) = 0.0;
  f.l2(0) = 1.0;
  for (int i = 1; i < n; ++i) {
    f.l1(i) = 0.0;
    f.l2(i) = 0.0;
  }
  return f;
}

TEST(Regularized, ThermalizationAddsSecondDerivative) {
  Rng rng(57);
  for (int n = 1; n <= 3; ++n) {
    const auto f = thermalizing(n, rng);
    const QfiEstimate reg = qfi_regularized(f.family(), 0.0);
    QfiOptions zero;
    zero.convention = PureConvention::zero;
    const double symplectic_part = qfi_regularized(f.family(), 0.0, zero).value;
    EXPECT_NEAR(reg.value, 2.0 + symplectic_part, 1e-9 * reg.value);
    EXPECT_EQ(reg.diagnostics.route, "regularized:analytic");
    const QfiEstimate lad = qfi_regularized_ladder(f.family(), 0.0);
    EXPECT_NEAR(lad.value, reg.value, 1e-6 * reg.value) << "n=" << n;
    EXPECT_EQ(lad.diagnostics.nu_path.size(), 7u);
  }
}

TEST(Regularized, SymplecticPartIsNuLimitOfOracle) {
  Rng rng(58);
  const auto f = thermalizing(2, rng);
  QfiOptions zero;
  zero.convention = PureConvention::zero;
  const double part = qfi_regularized(f.family(), 0.0, zero).value;
  const double nu = 1.0 + 1e-7;
  const double limit =
      testing::real_form_qfi(nu * f.state(0.0).covariance(), nu * f.sigma_dot(0.0), f.d_dot());
  EXPECT_NEAR(part, limit, 1e-5 * limit);
}

TEST(Regularized, FallsBackToLadderWithoutP1) {
  Rng rng(59);
  auto f = thermalizing(3, rng);
  f.l0(1) = f.l0(2) = 2.0;
  const StateFamily fam = f.fd_family();
  const QfiEstimate e = qfi_regularized(fam, 0.0);
  EXPECT_EQ(e.diagnostics.route, "regularized:nu_ladder");
  EXPECT_FALSE(e.diagnostics.warnings.empty());
  const double expect = qfi_regularized(f.family(), 0.0).value;
  EXPECT_NEAR(e.value, expect, 1e-4 * expect);
}

TEST(Auto, RoutesByStructure) {
  Rng rng(60);
  EXPECT_EQ(qfi_auto(pure_family(2, rng).family(), 0.0).method, QfiMethod::isothermal);
  auto one = testing::random_analytic_family(1, rng, 1.5, 1.5);
  one.l1.setZero();
  one.l2.setZero();
  EXPECT_EQ(qfi_auto(one.family(), 0.0).method, QfiMethod::isothermal);
  const auto two = testing::random_analytic_family(2, rng, 1.2, 3.0);
  const QfiEstimate e2 = qfi_auto(two.family(), 0.0);
  EXPECT_EQ(e2.method, QfiMethod::two_mode_covariance);
  EXPECT_EQ(e2.diagnostics.route.rfind("auto:", 0), 0u);
  const auto three = testing::random_analytic_family(3, rng, 1.2, 3.0);
  EXPECT_EQ(qfi_auto(three.family(), 0.0).method, QfiMethod::multimode_williamson);
  EXPECT_EQ(qfi_auto(thermalizing(2, rng).family(), 0.0).method, QfiMethod::regularized);
}

TEST(Auto, FallsThroughToSeriesOnDegenerateFdSpectrum) {
  Rng rng(61);
  auto f = testing::random_analytic_family(3, rng, 1.5, 3.0);
  f.l0 << 2.0, 2.0, 1.5;
  f.l1.setZero();
  f.l2.setZero();
  const QfiEstimate e = qfi_auto(f.fd_family(), 0.0);
  EXPECT_EQ(e.method, QfiMethod::series);
  const double expect = oracle(f, 0.0);
  EXPECT_NEAR(e.value, expect, 1e-6 * expect);
}

TEST(Invariance, EpsIndependentUnitariesLeaveQfiUnchanged) {
  Rng rng(62);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + trial % 3;
    const auto f = testing::random_analytic_family(n, rng, 1.1, 3.0);
    const SymplecticMatrix t = testing::random_symplectic(n, rng, 0.5);
    const CVector shift = testing::paired(testing::random_mode_means(n, rng));
    const double a = qfi_auto(f.family(), 0.0).value;
    const double b = qfi_auto(f.family().transformed(t, shift), 0.0).value;
    EXPECT_NEAR(a, b, 1e-8 * a);
    EXPECT_GE(a, 0.0);
  }
}

TEST(Bures, AgreesWithClosedFormOnTwoModes) {
  Rng rng(63);
  const auto f = testing::random_analytic_family(2, rng, 1.2, 3.0);
  const double expect = oracle(f, 0.0);
  EXPECT_NEAR(qfi_bures(f.family(), 0.0).value, expect, 1e-4 * expect);
  EXPECT_THROW(qfi_bures(testing::random_analytic_family(1, rng, 1.2, 2.0).family(), 0.0),
               ApplicabilityError);
}

TEST(ByMethod, FockNeedsProbe) {
  EXPECT_THROW(qfi_by_method(QfiMethod::fock_fd,
                             StateFamily::generated(GaussianState::vacuum(1), squeeze_generator(1, 0)),
                             0.0),
               ApplicabilityError);
}

}  // namespace
}  // namespace gqfi
