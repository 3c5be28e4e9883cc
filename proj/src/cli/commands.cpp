#include "gqfi/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "gqfi/cli/io.hpp"
#include "gqfi/errors.hpp"
#include "gqfi/williamson.hpp"

namespace gqfi::cli {

namespace {

enum class RowStatus { ok, skipped, error };

struct Row {
  double eps = 0.0;
  std::string method;
  RowStatus status = RowStatus::ok;
  double value = 0.0;
  std::optional<double> error_bound;
  double lambda_min = 0.0;
  std::string route;
  std::vector<std::string> warnings;
};

StateFamily make_family(const JobSpec& job) {
  if (job.state) return apply_channel_family(*job.state, job.channel);
  if (job.probe) return apply_channel_family(*job.probe, job.channel);
  throw InputError("a probe or a state is required");
}

// Runs fn(i) for i in [0, n) on a small pool; results are stored by index.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

double lambda_min_at(const StateFamily& family, double eps) {
  return symplectic_eigenvalues(family.evaluate(eps).covariance()).minCoeff();
}

Row compute_row(const JobSpec& job, const StateFamily& family, const std::string& method,
                double eps) {
  Row row;
  row.eps = eps;
  row.method = method;
  try {
    if (method == "fock_fd") {
      if (!job.probe) throw ApplicabilityError("the Fock oracle needs a probe description");
      const FockQfi f = qfi_fock_fd(*job.probe, job.channel, eps, job.fock_step, job.cutoff);
      row.value = f.value;
      row.lambda_min = lambda_min_at(family, eps);
      row.route = "fock:cutoff=" + std::to_string(f.cutoff);
      return row;
    }
    QfiEstimate est;
    if (method == "auto") {
      est = qfi_auto(family, eps, job.options);
    } else {
      const auto m = method_from_string(method);
      if (!m) throw InputError("unknown method '" + method + "'");
      est = qfi_by_method(*m, family, eps, job.options);
    }
    row.value = est.value;
    row.error_bound = est.error_bound;
    row.lambda_min = est.diagnostics.lambda_min;
    row.route = est.diagnostics.route;
    row.warnings = est.diagnostics.warnings;
  } catch (const ApplicabilityError& e) {
    row.status = RowStatus::skipped;
    row.route = "skipped";
    row.warnings = {e.what()};
  } catch (const DispatchError& e) {
    row.status = RowStatus::error;
    row.route = "error";
    row.warnings = e.failures();
    row.warnings.insert(row.warnings.begin(), e.what());
  } catch (const Error& e) {
    row.status = RowStatus::error;
    row.route = "error";
    row.warnings = {e.what()};
  }
  return row;
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

double max_relative_deviation(const std::vector<double>& values) {
  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t k = i + 1; k < values.size(); ++k) {
      const double scale = std::max(std::abs(values[i]), std::abs(values[k]));
      if (scale > 0.0) worst = std::max(worst, std::abs(values[i] - values[k]) / scale);
    }
  }
  return worst;
}

void write_row(std::ostream& out, const Row& row, const std::optional<double>& xcheck) {
  out << format_double(row.eps) << ',' << row.method << ',';
  if (row.status == RowStatus::ok) out << format_double(row.value);
  out << ',';
  if (row.status == RowStatus::ok && row.error_bound) out << format_double(*row.error_bound);
  out << ',';
  if (row.status == RowStatus::ok) out << format_double(row.lambda_min);
  out << ',' << csv_field(row.route) << ',' << csv_field(join(row.warnings, "; "));
  if (xcheck) out << ',' << format_double(*xcheck);
  out << '\n';
}

void set_probe_field(ProbeSpec& probe, const SweepSpec& sweep, double v) {
  if (sweep.field == "two_mode_squeezing") {
    probe.two_mode_squeezing = v;
    return;
  }
  if (sweep.mode < 0 || sweep.mode >= probe.count()) throw InputError("sweep mode out of range");
  ModeProbe& m = probe.modes[static_cast<std::size_t>(sweep.mode)];
  if (sweep.field == "n_th") {
    m.n_th = v;
  } else if (sweep.field == "r") {
    m.r = v;
  } else if (sweep.field == "theta") {
    m.theta = v;
  } else if (sweep.field == "d_abs") {
    m.d_abs = v;
  } else if (sweep.field == "d_phase") {
    m.d_phase = v;
  } else {
    throw InputError("unknown sweep field '" + sweep.field + "'");
  }
}

}  // namespace

std::vector<std::string> resolve_methods(const JobSpec& job) {
  if (job.methods != "all") {
    if (job.methods != "auto" && job.methods != "fock_fd" && !method_from_string(job.methods)) {
      throw InputError("unknown method '" + job.methods + "'");
    }
    return {job.methods};
  }
  std::vector<std::string> out;
  for (QfiMethod m : {QfiMethod::two_mode_covariance, QfiMethod::two_mode_williamson,
                      QfiMethod::series, QfiMethod::multimode_williamson, QfiMethod::isothermal,
                      QfiMethod::pure_point, QfiMethod::regularized, QfiMethod::bures_fd}) {
    out.emplace_back(to_string(m));
  }
  if (job.probe && job.probe->count() == 1) out.emplace_back(to_string(QfiMethod::fock_fd));
  return out;
}

int cmd_qfi(const JobSpec& job, std::ostream& out, std::ostream& err) {
  if (job.eps.empty()) throw InputError("the eps grid is empty");
  const std::vector<std::string> methods = resolve_methods(job);
  const bool all = job.methods == "all";
  const StateFamily family = make_family(job);

  std::vector<std::vector<Row>> rows(job.eps.size());
  parallel_for(job.eps.size(), [&](std::size_t i) {
    for (const std::string& m : methods) {
      rows[i].push_back(compute_row(job, family, m, job.eps[i]));
      if (!all && rows[i].back().status != RowStatus::ok) break;
    }
  });

  out << "eps,method,value,error_bound,lambda_min,route,warnings";
  if (all) out << ",xcheck";
  out << '\n';
  bool failed = false;
  bool xcheck_failed = false;
  for (const auto& point : rows) {
    std::optional<double> xcheck;
    if (all) {
      std::vector<double> values;
      for (const Row& r : point) {
        if (r.status == RowStatus::ok) values.push_back(r.value);
      }
      xcheck = max_relative_deviation(values);
      if (*xcheck > job.xcheck_tol) xcheck_failed = true;
    }
    for (const Row& r : point) {
      if (!all && r.status != RowStatus::ok) {
        out.flush();
        err << "error at eps=" << format_double(r.eps) << ": " << join(r.warnings, "; ") << '\n';
        return kComputationError;
      }
      write_row(out, r, xcheck);
      if (r.status == RowStatus::error) {
        failed = true;
        err << "error at eps=" << format_double(r.eps) << " (" << r.method
            << "): " << join(r.warnings, "; ") << '\n';
      }
    }
  }
  if (failed) return kComputationError;
  if (xcheck_failed) {
    err << "cross-check deviation exceeds " << format_double(job.xcheck_tol) << '\n';
    return kCrossCheckFailure;
  }
  return kOk;
}

int cmd_sweep(const JobSpec& job, const SweepSpec& sweep, std::ostream& out, std::ostream& err) {
  if (!job.probe) throw InputError("sweep needs a probe");
  if (sweep.values.empty()) throw InputError("the sweep grid is empty");
  if (job.methods == "all") throw InputError("sweep takes a single method");
  if (job.eps.empty()) throw InputError("the eps grid is empty");
  const std::string method = resolve_methods(job).front();
  {
    ProbeSpec check = *job.probe;
    set_probe_field(check, sweep, sweep.values.front());
  }

  std::vector<Row> rows(sweep.values.size());
  parallel_for(sweep.values.size(), [&](std::size_t i) {
    JobSpec local = job;
    set_probe_field(*local.probe, sweep, sweep.values[i]);
    try {
      local.probe->validate();
      rows[i] = compute_row(local, apply_channel_family(*local.probe, local.channel), method,
                            job.eps.front());
    } catch (const Error& e) {
      rows[i].status = RowStatus::error;
      rows[i].warnings = {e.what()};
    }
  });

  out << sweep.field << ",H\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].status != RowStatus::ok) {
      out.flush();
      err << "error at " << sweep.field << '=' << format_double(sweep.values[i]) << ": "
          << join(rows[i].warnings, "; ") << '\n';
      return kComputationError;
    }
    out << format_double(sweep.values[i]) << ',' << format_double(rows[i].value) << '\n';
  }
  return kOk;
}

EllipseSpec default_ellipse() {
  EllipseSpec spec;
  spec.probe.modes = {ModeProbe{0.0, 0.8, 0.0, 0.0, 0.0}};
  const double pi = std::numbers::pi;
  spec.thetas = {0.0, pi / 8.0, pi / 4.0, 3.0 * pi / 8.0, pi / 2.0};
  return spec;
}

int cmd_ellipse(const EllipseSpec& spec, std::ostream& out, std::ostream& err) {
  if (spec.probe.count() != 1) throw InputError("ellipse export needs a one-mode probe");
  if (spec.eps.empty() || spec.thetas.empty()) throw InputError("the ellipse grid is empty");
  if (spec.n_points < 3) throw InputError("at least three points per set are needed");
  out << "set,eps,theta,k,x,p\n";
  int set = 0;
  for (double eps : spec.eps) {
    for (double theta : spec.thetas) {
      ProbeSpec probe = spec.probe;
      probe.modes[0].theta = theta;
      try {
        const GaussianState state = apply_channel_family(probe, ChannelSpec{}).evaluate(eps);
        const auto points = ellipse_export(state, spec.n_points);
        for (std::size_t k = 0; k < points.size(); ++k) {
          out << set << ',' << format_double(eps) << ',' << format_double(theta) << ',' << k << ','
              << format_double(points[k][0]) << ',' << format_double(points[k][1]) << '\n';
        }
      } catch (const Error& e) {
        out.flush();
        err << "error at eps=" << format_double(eps) << ", theta=" << format_double(theta) << ": "
            << e.what() << '\n';
        return kComputationError;
      }
      ++set;
    }
  }
  return kOk;
}

int cmd_export_state(const JobSpec& job, bool real, std::ostream& out, std::ostream& err) {
  try {
    const GaussianState state = make_family(job).evaluate(job.eps.empty() ? 0.0 : job.eps.front());
    out << state_to_json(state, real).dump(2) << '\n';
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kComputationError;
  }
  return kOk;
}

namespace {

struct CommonFlags {
  std::string probe;
  std::string state;
  std::string channel;
  std::string method = "auto";
  std::vector<double> eps;
  std::string eps_range;
  std::optional<double> fd_step;
  std::optional<double> tol;
  std::optional<double> cutoff_tol;
  double fock_step = 0.02;
  double xcheck_tol = 1e-3;
  std::string convention = "paper";
  std::string out;
};

void add_common(CLI::App* app, CommonFlags& f, bool with_methods) {
  app->add_option("--probe", f.probe, "probe JSON file or inline object");
  app->add_option("--state", f.state, "state JSON file or inline object");
  app->add_option("--channel", f.channel, "channel JSON file or inline object (default squeeze)");
  if (with_methods) {
    app->add_option("--method,--methods", f.method, "auto, all or a method name");
  }
  app->add_option("--eps", f.eps, "parameter values")->delimiter(',');
  app->add_option("--eps-range", f.eps_range, "a:b:n grid appended to --eps");
  app->add_option("--fd-step", f.fd_step, "finite-difference step");
  app->add_option("--tol", f.tol, "series truncation tolerance");
  app->add_option("--cutoff-tol", f.cutoff_tol, "Fock truncation tolerance");
  app->add_option("--fock-step", f.fock_step, "Fock finite-difference step");
  app->add_option("--xcheck-tol", f.xcheck_tol, "cross-check relative tolerance");
  app->add_option("--pure-convention", f.convention, "paper or zero")
      ->check(CLI::IsMember({"paper", "zero"}));
  app->add_option("--out", f.out, "output file (default stdout)");
}

JobSpec job_from_flags(const CommonFlags& f) {
  JobSpec job;
  if (!f.probe.empty() && !f.state.empty()) throw InputError("give either --probe or --state");
  if (!f.probe.empty()) job.probe = probe_from_json(load_json(f.probe));
  if (!f.state.empty()) job.state = state_from_json(load_json(f.state));
  if (!job.probe && !job.state) job.probe = ProbeSpec{};
  if (!f.channel.empty()) job.channel = channel_from_json(load_json(f.channel));
  const int modes = job.state ? job.state->modes() : job.probe->count();
  try {
    job.channel.generator(modes);
  } catch (const Error& e) {
    throw InputError(std::string("invalid channel: ") + e.what());
  }
  job.methods = f.method;
  job.eps = f.eps;
  if (!f.eps_range.empty()) {
    const auto extra = parse_range(f.eps_range);
    job.eps.insert(job.eps.end(), extra.begin(), extra.end());
  }
  if (job.eps.empty()) job.eps = {0.0};
  if (f.fd_step) {
    if (!(*f.fd_step > 0.0)) throw InputError("--fd-step must be positive");
    job.options.fd.step_first = *f.fd_step;
    job.options.fd.step_second = *f.fd_step;
    job.options.bures_step = *f.fd_step;
  }
  if (f.tol) {
    if (!(*f.tol > 0.0)) throw InputError("--tol must be positive");
    job.options.series_tol = *f.tol;
  }
  if (f.cutoff_tol) job.cutoff.cutoff_tol = *f.cutoff_tol;
  job.fock_step = f.fock_step;
  job.xcheck_tol = f.xcheck_tol;
  job.options.convention = f.convention == "zero" ? PureConvention::zero : PureConvention::paper;
  return job;
}

// Buffers the command output and writes it to --out or to `out`.
int emit(const std::string& path, std::ostream& out, std::ostream& err,
         const std::function<int(std::ostream&)>& body) {
  if (path.empty()) return body(out);
  std::ostringstream buffer;
  const int code = body(buffer);
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    err << "cannot write " << path << '\n';
    return kInputError;
  }
  file << buffer.str();
  return code;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantum Fisher information of Gaussian state families"};
  app.require_subcommand(1);

  CommonFlags qfi_flags;
  CLI::App* qfi = app.add_subcommand("qfi", "QFI on an eps grid");
  add_common(qfi, qfi_flags, true);

  CommonFlags sweep_flags;
  std::string sweep_text;
  int sweep_mode = 0;
  CLI::App* sweep = app.add_subcommand("sweep", "QFI while one probe field varies");
  add_common(sweep, sweep_flags, true);
  sweep->add_option("--sweep", sweep_text, "field=a:b:n")->required();
  sweep->add_option("--sweep-mode", sweep_mode, "mode whose field is swept");

  std::string ellipse_probe;
  std::vector<double> ellipse_eps;
  std::vector<double> ellipse_thetas;
  int n_points = 100;
  std::string ellipse_out;
  CLI::App* ellipse = app.add_subcommand("ellipse", "covariance ellipses of the squeezing channel");
  ellipse->add_option("--probe", ellipse_probe, "one-mode probe (theta is overridden)");
  ellipse->add_option("--eps", ellipse_eps, "channel parameters")->delimiter(',');
  ellipse->add_option("--thetas", ellipse_thetas, "probe rotation angles")->delimiter(',');
  ellipse->add_option("--n-points", n_points, "points per set");
  ellipse->add_option("--out", ellipse_out, "output file (default stdout)");

  CommonFlags export_flags;
  bool export_real = false;
  CLI::App* exporter = app.add_subcommand("export-state", "write the state at eps as JSON");
  add_common(exporter, export_flags, false);
  exporter->add_flag("--real", export_real, "real quadrature representation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (qfi->parsed()) {
      const JobSpec job = job_from_flags(qfi_flags);
      return emit(qfi_flags.out, out, err, [&](std::ostream& o) { return cmd_qfi(job, o, err); });
    }
    if (sweep->parsed()) {
      const JobSpec job = job_from_flags(sweep_flags);
      const auto eq = sweep_text.find('=');
      if (eq == std::string::npos) throw InputError("--sweep must look like field=a:b:n");
      SweepSpec spec{sweep_text.substr(0, eq), sweep_mode, parse_range(sweep_text.substr(eq + 1))};
      return emit(sweep_flags.out, out, err,
                  [&](std::ostream& o) { return cmd_sweep(job, spec, o, err); });
    }
    if (ellipse->parsed()) {
      EllipseSpec spec = default_ellipse();
      if (!ellipse_probe.empty()) spec.probe = probe_from_json(load_json(ellipse_probe));
      if (!ellipse_eps.empty()) spec.eps = ellipse_eps;
      if (!ellipse_thetas.empty()) spec.thetas = ellipse_thetas;
      spec.n_points = n_points;
      return emit(ellipse_out, out, err,
                  [&](std::ostream& o) { return cmd_ellipse(spec, o, err); });
    }
    const JobSpec job = job_from_flags(export_flags);
    return emit(export_flags.out, out, err,
                [&](std::ostream& o) { return cmd_export_state(job, export_real, o, err); });
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kComputationError;
  }
}

}  // namespace gqfi::cli
