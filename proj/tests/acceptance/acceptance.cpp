// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "gqfi/cli/commands.hpp"
#include "gqfi/fidelity.hpp"
#include "gqfi/fock.hpp"
#include "gqfi/probes.hpp"
#include "gqfi/qfi.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

namespace {

using namespace gqfi;
using testing::Rng;

constexpr double kPi = std::numbers::pi;

// Collects the first few failure messages of a criterion.
class Check {
 public:
  void require(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (notes_.size() < 3) notes_.push_back(what);
  }
  bool ok() const { return failures_ == 0; }
  std::string summary() const {
    std::ostringstream os;
    os << failures_ << " failure(s)";
    for (const auto& n : notes_) os << "; " << n;
    return os.str();
  }

 private:
  int failures_ = 0;
  std::vector<std::string> notes_;
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

void vacuum_probe(Check& c) {
  const double closed = squeezing_channel_qfi_closed(ModeProbe{});
  const StateFamily fam = apply_channel_family(ProbeSpec{}, ChannelSpec{});
  const double reg = qfi_regularized(fam, 0.0).value;
  const double fock = qfi_fock_fd(ProbeSpec{}, ChannelSpec{}, 0.0).value;
  c.require(std::abs(closed - 2.0) <= 1e-12, "closed form " + num(closed));
  c.require(std::abs(closed - reg) <= 1e-9, "regularized " + num(reg));
  c.require(rel(fock, 2.0) <= 5e-3, "fock " + num(fock));
}

void optimal_probe(Check& c) {
  Rng rng(1001);
  for (int trial = 0; trial < 20; ++trial) {
    const double lambda = testing::uniform(rng, 1.0, 5.0);
    const double r = testing::uniform(rng, 0.0, 1.5);
    const double d = testing::uniform(rng, 0.0, 2.0);
    const double hmax = squeezing_channel_qfi_optimal(lambda, r, d);
    const double law = 4 * lambda * lambda / (lambda * lambda + 1) * std::pow(std::cosh(2 * r), 2) +
                       4 / lambda * d * d * std::exp(2 * r);
    c.require(rel(hmax, law) <= 1e-12, "law mismatch");
    ModeProbe m{0.5 * (lambda - 1.0), r, 0.0, d, 0.0};
    double best = -1.0, best_theta = 0.0, best_phi = 0.0;
    const int steps = 40;
    for (int i = 0; i <= steps; ++i) {
      for (int k = 0; k <= steps; ++k) {
        m.theta = kPi * i / steps;
        m.d_phase = kPi * k / steps;
        const double h = squeezing_channel_qfi_closed(m);
        if (h > best + 1e-12 * std::abs(best)) {
          best = h;
          best_theta = m.theta;
          best_phi = m.d_phase;
        }
      }
    }
    m.theta = m.d_phase = kPi / 4;
    c.require(rel(squeezing_channel_qfi_closed(m), hmax) <= 1e-6, "value at (pi/4, pi/4)");
    c.require(rel(best, hmax) <= 1e-6, "grid max " + num(best) + " vs " + num(hmax));
    c.require(std::abs(best_theta - kPi / 4) < 1e-12 && std::abs(best_phi - kPi / 4) < 1e-12,
              "argmax at " + num(best_theta) + ", " + num(best_phi));
  }
}

void enhancement(Check& c) {
  const double ratio =
      squeezing_channel_qfi_optimal(1.0, 1.46, 0.0) / squeezing_channel_qfi_optimal(1.0, 0.0, 0.0);
  c.require(rel(ratio, std::pow(std::cosh(2.92), 2)) <= 1e-10, "ratio " + num(ratio));
  c.require(std::abs(ratio - 86.5) < 0.1, "ratio not ~86.5");
  c.require(ratio > 80.0 && ratio < 100.0, "ratio not of the stated order");
  for (double k = 0.25; k <= 6.0 + 1e-12; k += 0.25) {
    const double r = enhancement_squeezing_for_orders(k);
    const double gain = squeezing_channel_qfi_optimal(1.0, r, 0.0) / 2.0;
    c.require(rel(gain, std::pow(10.0, k)) <= 1e-10, "gain at k=" + num(k));
    if (k >= 2.0) c.require(rel(0.35 + 0.58 * k, r) <= 0.02, "linear fit at k=" + num(k));
  }
}

void heisenberg(Check& c) {
  for (double n : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const double h = qfi_max_photon_budget(n, 0.0, 0.0);
    c.require(h == 2.0 * (1.0 + 2.0 * n) * (1.0 + 2.0 * n), "H_max(" + num(n) + ") = " + num(h));
    const BudgetOptimum b = photon_budget_argmax(n, 1e-2);
    c.require(b.n_th == 0.0 && b.n_d == 0.0, "argmax at n=" + num(n));
  }
}

void cross_method(Check& c) {
  Rng rng(1005);
  for (int trial = 0; trial < 200; ++trial) {
    const auto f = testing::random_analytic_family(2, rng, 1.05, 4.0);
    const StateFamily fam = f.family();
    const double eps = testing::uniform(rng, -0.1, 0.1);
    const double a = qfi_two_mode(fam, eps).value;
    const double b = qfi_two_mode_williamson(fam, eps).value;
    const double m = qfi_multimode_williamson(fam, eps).value;
    const QfiEstimate s = qfi_series(fam, eps);
    const double worst = std::max({rel(a, b), rel(a, m), rel(b, m)});
    c.require(worst <= 1e-8, "pairwise " + num(worst) + " at trial " + std::to_string(trial));
    c.require(std::abs(s.value - m) <= *s.error_bound,
              "series off by " + num(std::abs(s.value - m)) + " > bound " + num(*s.error_bound));
  }
}

void remainder_soundness(Check& c) {
  Rng rng(1006);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = testing::random_analytic_family(1 + trial % 4, rng, 1.05, 4.0);
    const CMatrix sigma = f.state(0.0).covariance();
    const CMatrix sd = f.sigma_dot(0.0);
    const double lmin = symplectic_eigenvalues(sigma).minCoeff();
    // Enough terms that the neglected tail is below double resolution.
    const long total = static_cast<long>(std::ceil(40.0 / std::log10(lmin))) + 40;
    const std::vector<double> terms = series_terms(sigma, sd, total);
    for (long m = 1; m <= 30; ++m) {
      double tail = 0.0;
      for (long k = total; k > m; --k) tail += terms[static_cast<std::size_t>(k - 1)];
      const double bound = series_remainder_bound(sigma, sd, m);
      c.require(std::abs(0.5 * tail) <= bound,
                "M=" + std::to_string(m) + " tail " + num(0.5 * tail) + " > " + num(bound));
    }
  }
}

void fock_ground_truth(Check& c) {
  for (double r : {0.0, 0.4, 0.8}) {
    for (double n_th : {0.0, 0.25, 0.5}) {
      for (double d : {0.0, 1.0}) {
        for (double theta : {0.0, kPi / 4}) {
          ProbeSpec p;
          p.modes = {ModeProbe{n_th, r, theta, d, 0.0}};
          const double closed = squeezing_channel_qfi_closed(p.modes[0]);
          const double fock = qfi_fock_fd(p, ChannelSpec{}, 0.0).value;
          c.require(std::abs(closed - fock) <= std::max(1e-3, 1e-2 * closed),
                    "r=" + num(r) + " n_th=" + num(n_th) + " d=" + num(d) + " theta=" + num(theta) +
                        ": " + num(closed) + " vs " + num(fock));
        }
      }
    }
  }
  Rng rng(1007);
  auto random_probe = [&] {
    ProbeSpec p;
    p.modes.clear();
    for (int i = 0; i < 2; ++i) {
      p.modes.push_back(ModeProbe{testing::uniform(rng, 0.0, 0.3), testing::uniform(rng, 0.0, 0.4),
                                  testing::uniform(rng, 0.0, kPi), testing::uniform(rng, 0.0, 0.5),
                                  testing::uniform(rng, 0.0, 2.0 * kPi)});
    }
    p.two_mode_squeezing = testing::uniform(rng, 0.0, 0.3);
    return p;
  };
  for (int trial = 0; trial < 50; ++trial) {
    const ProbeSpec pa = random_probe();
    const ProbeSpec pb = random_probe();
    FockDensityMatrix a = fock_build(pa);
    FockDensityMatrix b = fock_build(pb);
    CutoffConfig same;
    same.n_max = std::max(a.cutoff, b.cutoff);
    same.auto_grow = false;
    if (a.cutoff != same.n_max) a = fock_build(pa, same);
    if (b.cutoff != same.n_max) b = fock_build(pb, same);
    const double gaussian = two_mode_fidelity(build_probe(pa), build_probe(pb)).value;
    const double fock = uhlmann_fidelity_fock(a, b);
    c.require(std::abs(gaussian - fock) <= 1e-6,
              "fidelity " + num(gaussian) + " vs " + num(fock));
  }
}

void regularization(Check& c) {
  Rng rng(1008);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 3;
    auto f = testing::random_analytic_family(n, rng, 1.5, 3.0);
    f.l0(0) = 1.0;
    f.l1.setZero();
    f.l2.setZero();
    f.l2(0) = 1.0;  // lambda_1 = 1 + eps^2
    const double reg = qfi_regularized(f.family(), 0.0).value;
    // The symplectic part comes from the same family with lambda_1 frozen at one.
    auto frozen = f;
    frozen.l2.setZero();
    const double part = qfi_regularized(frozen.family(), 0.0).value;
    c.require(rel(reg, 2.0 + part) <= 1e-9, "analytic " + num(reg) + " vs " + num(2.0 + part));
    const double lad = qfi_regularized_ladder(f.family(), 0.0).value;
    c.require(rel(lad, reg) <= 1e-6, "ladder " + num(lad) + " vs " + num(reg));
  }
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + trial % 3;
    auto f = testing::random_analytic_family(n, rng, 1.0, 1.0);
    f.l0.setOnes();
    f.l1.setZero();
    f.l2.setZero();
    const double eps = testing::uniform(rng, -0.2, 0.2);
    const CMatrix sigma = f.state(eps).covariance();
    const CMatrix x = sigma.inverse() * f.sigma_dot(eps);
    const CVector dd = f.d_dot();
    const double expect =
        0.25 * (x * x).trace().real() + 2.0 * (dd.adjoint() * sigma.inverse() * dd)(0).real();
    for (QfiMethod m : {QfiMethod::pure_point, QfiMethod::regularized}) {
      const double got = qfi_by_method(m, f.family(), eps).value;
      c.require(rel(got, expect) <= 1e-9, std::string(to_string(m)) + " " + num(got) + " vs " + num(expect));
    }
  }
}

void structural(Check& c) {
  Rng rng(1009);
  const int cases = 1000;
  for (int trial = 0; trial < cases; ++trial) {
    const int n = 1 + trial % 4;
    const GaussianState st = testing::random_state(n, rng, 1.0, 5.0, 0.5);
    const CMatrix& sigma = st.covariance();

    Eigen::ComplexEigenSolver<CMatrix> es(k_matrix(n) * sigma);
    std::vector<double> ev;
    for (int i = 0; i < 2 * n; ++i) ev.push_back(es.eigenvalues()(i).real());
    std::sort(ev.begin(), ev.end());
    double pair_err = 0.0;
    for (int i = 0; i < n; ++i) {
      pair_err = std::max(pair_err, std::abs(ev[static_cast<std::size_t>(i)] +
                                             ev[static_cast<std::size_t>(2 * n - 1 - i)]));
    }
    c.require(pair_err <= 1e-8 * ev.back(), "pairing " + num(pair_err));

    const WilliamsonFactors f = williamson_decompose(sigma);
    const double recon = (f.reconstruct() - sigma).norm() / sigma.norm();
    c.require(recon <= 1e-9, "reconstruction " + num(recon));

    const GaussianState back = to_complex(to_real(st));
    const double rt = (back.covariance() - sigma).norm() / sigma.norm() +
                      (back.displacement() - st.displacement()).norm() /
                          std::max(1.0, st.displacement().norm());
    c.require(rt <= 1e-12, "round trip " + num(rt));

    const auto fam = testing::random_analytic_family(n, rng, 1.05, 4.0);
    const SymplecticMatrix t = testing::random_symplectic(n, rng, 0.5);
    const CVector shift = testing::paired(testing::random_mode_means(n, rng));
    const double h = qfi_auto(fam.family(), 0.0).value;
    const double ht = qfi_auto(fam.family().transformed(t, shift), 0.0).value;
    c.require(h >= 0.0, "negative QFI " + num(h));
    c.require(rel(ht, h) <= 1e-8, "invariance " + num(rel(ht, h)));
  }
}

void cli_ellipse(Check& c) {
  std::ostringstream a, b, err;
  const cli::EllipseSpec spec = cli::default_ellipse();
  c.require(cli::cmd_ellipse(spec, a, err) == 0, "cmd_ellipse failed: " + err.str());
  c.require(cli::cmd_ellipse(spec, b, err) == 0, "second run failed");
  c.require(a.str() == b.str(), "repeated runs differ");

  std::map<int, std::vector<std::array<double, 2>>> sets;
  std::istringstream in(a.str());
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    sets[std::stoi(cells[0])].push_back({std::stod(cells[4]), std::stod(cells[5])});
  }
  c.require(sets.size() == 10, std::to_string(sets.size()) + " point sets");
  for (const auto& [id, pts] : sets) {
    const double area = ellipse_area(pts);
    c.require(std::abs(area - kPi) <= 1e-9, "set " + std::to_string(id) + " area " + num(area));
  }

  auto capture = [](const std::string& cmd) {
    std::string out;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return std::string("<popen failed>");
    char buf[4096];
    while (std::fgets(buf, sizeof(buf), pipe)) out += buf;
    pclose(pipe);
    return out;
  };
  const std::string cmd = std::string(GQFI_CLI_PATH) + " ellipse";
  const std::string p1 = capture(cmd), p2 = capture(cmd);
  c.require(p1 == p2, "binary runs differ");
  c.require(p1 == a.str(), "binary output differs from library call");
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<void(Check&)> run;
  };
  const std::vector<Criterion> criteria = {
      {"vacuum-probe squeezing QFI = 2 (closed, regularized, Fock)", vacuum_probe},
      {"optimal-probe law attained at (pi/4, pi/4)", optimal_probe},
      {"squeezing enhancement ratio and r(k)", enhancement},
      {"Heisenberg scaling and photon-budget argmax", heisenberg},
      {"two-mode cross-method equivalence on 200 families", cross_method},
      {"series remainder-bound soundness", remainder_soundness},
      {"Fock-oracle ground truth (QFI and fidelity)", fock_ground_truth},
      {"regularization at purity points", regularization},
      {"structural properties over 1000 cases", structural},
      {"CLI ellipse determinism and area", cli_ellipse},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].run(check);
    } catch (const std::exception& e) {
      check.require(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (check.ok() ? "PASS" : "FAIL") << " criterion " << (i + 1) << ": "
              << criteria[i].name;
    if (!check.ok()) std::cout << " -- " << check.summary();
    std::cout << " [" << num(secs) << " s]" << std::endl;
    failed += !check.ok();
  }
  return failed == 0 ? 0 : 1;
}
