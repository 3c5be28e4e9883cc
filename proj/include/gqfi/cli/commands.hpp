#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gqfi/fock.hpp"
#include "gqfi/probes.hpp"
#include "gqfi/qfi.hpp"

namespace gqfi::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 2,
  kComputationError = 3,
  kCrossCheckFailure = 4,
};

/// One batch job: a probe or an explicit state, the channel that encodes eps,
/// the methods to run and the eps grid.
struct JobSpec {
  std::optional<ProbeSpec> probe;
  std::optional<GaussianState> state;
  ChannelSpec channel;
  /// "auto", "all" or a single method name.
  std::string methods = "auto";
  std::vector<double> eps{0.0};
  QfiOptions options;
  CutoffConfig cutoff;
  double fock_step = 0.02;
  double xcheck_tol = 1e-3;
};

/// Methods run for `job`: the expansion of "all" or the single named method.
std::vector<std::string> resolve_methods(const JobSpec& job);

/// CSV rows eps,method,value,error_bound,lambda_min,route,warnings and, for
/// "all", an xcheck column with the largest pairwise relative deviation.
int cmd_qfi(const JobSpec& job, std::ostream& out, std::ostream& err);

/// One probe field swept over `values`, QFI at job.eps.front().
struct SweepSpec {
  std::string field;  ///< n_th, r, theta, d_abs, d_phase or two_mode_squeezing
  int mode = 0;
  std::vector<double> values;
};

/// CSV of (swept value, H).
int cmd_sweep(const JobSpec& job, const SweepSpec& sweep, std::ostream& out, std::ostream& err);

/// Ellipse point sets of the squeezing channel applied to a one-mode probe,
/// one set per (eps, theta).
struct EllipseSpec {
  ProbeSpec probe;
  std::vector<double> eps{0.0, 0.1};
  std::vector<double> thetas;
  int n_points = 100;
};

/// The default probe has r = 0.8 and the default angles are 0, pi/8, ..., pi/2.
EllipseSpec default_ellipse();

int cmd_ellipse(const EllipseSpec& spec, std::ostream& out, std::ostream& err);

/// Writes the family state at job.eps.front() as JSON.
int cmd_export_state(const JobSpec& job, bool real, std::ostream& out, std::ostream& err);

/// Full command line entry point.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gqfi::cli
