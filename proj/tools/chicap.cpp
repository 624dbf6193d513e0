// chicap: batch front end for the chi-capacity toolkit.
//
// Every subcommand reads and validates all of its inputs before computing and
// writes its output only after the computation succeeded. Errors go to stderr
// as one JSON object; exit status is 1 for invalid input, 2 for numerical
// failure.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "chicap/chicap.hpp"

namespace {

using chicap::io::json;

enum class LogLevel { error = 0, info = 1, debug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("CHICAP_LOG");
  if (!env) return LogLevel::error;
  const std::string v = env;
  if (v == "debug") return LogLevel::debug;
  if (v == "info") return LogLevel::info;
  return LogLevel::error;
}

void log(LogLevel level, const std::string& msg) {
  if (level <= log_level()) std::cerr << "[chicap] " << msg << '\n';
}

struct Args {
  std::string channel, ensemble, constraint, measure, out, format, report;
  double tol = 1e-6;
  int max_iter = 200;
  std::uint64_t seed = 0;
  long long nmax = 1000000;
  unsigned threads = 0;
  int trials = 100;
  int resolution = 10;
  bool linear_grid = false;
};

chicap::SolverOptions solver_options(const Args& a) {
  chicap::SolverOptions o;
  o.tol_gap = a.tol;
  o.max_outer_iters = a.max_iter;
  o.seed = a.seed;
  o.threads = a.threads;
  return o;
}

void emit(const Args& a, const std::string& text) {
  if (a.out.empty()) std::cout << text;
  else chicap::io::write_text_file(a.out, text);
}

std::string as_json_text(const json& j) { return chicap::io::dump(j) + "\n"; }

void require_format(const Args& a, std::initializer_list<const char*> allowed) {
  for (const char* f : allowed)
    if (a.format == f) return;
  throw chicap::InvalidArgument("format '" + a.format + "' is not supported by this subcommand");
}

int run_chi(Args a) {
  if (a.format.empty()) a.format = "json";
  require_format(a, {"json"});
  const chicap::Channel ch = chicap::io::channel_from_json(chicap::io::read_json_file(a.channel));
  const chicap::Ensemble e = chicap::io::ensemble_from_json(chicap::io::read_json_file(a.ensemble));
  if (e.dim() != ch.dim_in()) throw chicap::DimensionMismatch("ensemble dimension differs from channel input");
  const chicap::ChiForms f = chicap::chi_forms(ch, e);
  const chicap::ExtReal value = chicap::chi(ch, e);
  emit(a, as_json_text({{"chi", chicap::io::ext_to_json(value)},
                        {"relative_form", chicap::io::ext_to_json(f.relative_form)},
                        {"entropy_form", chicap::io::ext_to_json(f.entropy_form)}}));
  return 0;
}

std::optional<chicap::HConstraint> load_constraint(const Args& a) {
  if (a.constraint.empty()) return std::nullopt;
  return chicap::io::constraint_from_json(chicap::io::read_json_file(a.constraint));
}

int run_capacity(Args a) {
  if (a.format.empty()) a.format = "json";
  require_format(a, {"json", "csv"});
  const chicap::Channel ch = chicap::io::channel_from_json(chicap::io::read_json_file(a.channel));
  const auto h = load_constraint(a);
  const chicap::SolverOptions opts = solver_options(a);
  opts.validate();
  const chicap::CapacityReport r = chicap::solve_capacity(ch, h, opts);
  log(LogLevel::info, "capacity: converged after " + std::to_string(r.iterations) + " iterations");
  emit(a, a.format == "csv" ? chicap::io::trace_csv(r.trace) : as_json_text(chicap::io::report_to_json(r)));
  return 0;
}

int run_certify(Args a) {
  if (a.format.empty()) a.format = "json";
  require_format(a, {"json"});
  const chicap::Channel ch = chicap::io::channel_from_json(chicap::io::read_json_file(a.channel));
  const chicap::Ensemble e = chicap::io::ensemble_from_json(chicap::io::read_json_file(a.ensemble));
  const auto h = load_constraint(a);
  const chicap::SolverOptions opts = solver_options(a);
  opts.validate();
  const chicap::Certificate c = chicap::certify_optimality(ch, e, h, opts);
  emit(a, as_json_text(chicap::io::certificate_to_json(c)));
  return 0;
}

int run_counterexample(Args a) {
  if (a.format.empty()) a.format = "csv";
  require_format(a, {"json", "csv"});
  if (a.linear_grid && a.nmax > 1000000) throw chicap::InvalidArgument("--linear grids are limited to nmax <= 1000000");
  const chicap::counterexample::GapReport g = chicap::counterexample::gap_report(a.nmax, a.threads);
  std::vector<chicap::counterexample::CounterexamplePoint> points = g.points;
  if (a.linear_grid) {
    std::vector<long long> grid;
    for (long long n = 1; n <= a.nmax; ++n) grid.push_back(n);
    points = chicap::counterexample::h_sequence(a.nmax, grid, a.threads);
  }
  if (a.format == "csv") {
    if (!a.report.empty()) chicap::io::write_text_file(a.report, as_json_text(chicap::io::gap_report_to_json(g)));
    emit(a, chicap::io::counterexample_csv(points));
  } else {
    json j = chicap::io::gap_report_to_json(g);
    json pts = json::array();
    for (const auto& p : points)
      pts.push_back({{"n", p.n}, {"q_n", p.q_n}, {"h_value", p.h_value}, {"state_dim", p.state_dim}, {"residual", p.residual}});
    j["points"] = pts;
    emit(a, as_json_text(j));
  }
  return 0;
}

int run_discretize(Args a) {
  if (a.format.empty()) a.format = "json";
  require_format(a, {"json"});
  const chicap::SampledMeasure m = chicap::io::measure_from_json(chicap::io::read_json_file(a.measure));
  const chicap::Ensemble e = chicap::discretize(m, a.resolution);
  emit(a, as_json_text(chicap::io::ensemble_to_json(e)));
  return 0;
}

int run_identities(Args a) {
  if (a.format.empty()) a.format = "csv";
  require_format(a, {"json", "csv"});
  if (a.trials < 1) throw chicap::InvalidArgument("--trials must be positive");
  const auto results = chicap::identities::run_suites(a.seed, a.trials);
  bool ok = true;
  std::string text;
  if (a.format == "csv") {
    text = "suite,trials,max_residual,tolerance,status\n";
    for (const auto& r : results)
      text += r.name + ',' + std::to_string(r.trials) + ',' + chicap::io::format_double(r.max_residual) + ',' +
              chicap::io::format_double(r.tolerance) + ',' + (r.pass() ? "pass" : "FAIL") + '\n';
  } else {
    json arr = json::array();
    for (const auto& r : results)
      arr.push_back({{"suite", r.name}, {"trials", r.trials}, {"max_residual", r.max_residual}, {"tolerance", r.tolerance},
                     {"pass", r.pass()}});
    text = as_json_text({{"seed", a.seed}, {"suites", arr}});
  }
  for (const auto& r : results) ok = ok && r.pass();
  emit(a, text);
  return ok ? 0 : 2;
}

void print_error(const std::string& code, const std::string& cls, const std::string& message, const json& extra = {}) {
  json j = {{"error", code}, {"class", cls}, {"message", message}};
  if (!extra.is_null()) j["best_report"] = extra;
  std::cerr << chicap::io::dump(j, -1) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chi-capacity toolkit"};
  app.require_subcommand(1);
  Args a;

  const auto io_flags = [&](CLI::App* sub) {
    sub->add_option("--out", a.out, "Output path (default: stdout)");
    sub->add_option("--format", a.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  };
  const auto solver_flags = [&](CLI::App* sub) {
    sub->add_option("--tol", a.tol, "Certificate gap tolerance in bits");
    sub->add_option("--max-iter", a.max_iter, "Maximum outer iterations");
    sub->add_option("--seed", a.seed, "Seed for random probe starts");
    sub->add_option("--threads", a.threads, "Worker cap (0 = all cores)");
  };

  CLI::App* chi = app.add_subcommand("chi", "Holevo quantity of an ensemble");
  chi->add_option("--channel", a.channel)->required();
  chi->add_option("--ensemble", a.ensemble)->required();
  io_flags(chi);

  CLI::App* cap = app.add_subcommand("capacity", "Constrained chi-capacity");
  cap->add_option("--channel", a.channel)->required();
  cap->add_option("--constraint", a.constraint);
  io_flags(cap);
  solver_flags(cap);

  CLI::App* cert = app.add_subcommand("certify", "Maximal-distance optimality certificate");
  cert->add_option("--channel", a.channel)->required();
  cert->add_option("--ensemble", a.ensemble)->required();
  cert->add_option("--constraint", a.constraint);
  io_flags(cert);
  solver_flags(cert);

  CLI::App* cex = app.add_subcommand("counterexample", "Channel without an optimal ensemble");
  cex->add_option("--nmax", a.nmax, "Largest n on the grid")->check(CLI::PositiveNumber);
  cex->add_option("--report", a.report, "Also write the JSON gap report here (csv format)");
  cex->add_flag("--linear", a.linear_grid, "Use every n in [1, nmax] instead of powers of ten");
  cex->add_option("--threads", a.threads);
  io_flags(cex);

  CLI::App* disc = app.add_subcommand("discretize", "Reduce a sampled measure to a finite ensemble");
  disc->add_option("--measure", a.measure)->required();
  disc->add_option("--resolution", a.resolution, "Resolution n (cells of diameter < 1/n)");
  io_flags(disc);

  CLI::App* ids = app.add_subcommand("identities", "Randomized identity residual suites");
  ids->add_option("--seed", a.seed);
  ids->add_option("--trials", a.trials);
  io_flags(ids);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("UsageError", "validation", e.what());
    return 1;
  }

  try {
    if (*chi) return run_chi(a);
    if (*cap) return run_capacity(a);
    if (*cert) return run_certify(a);
    if (*cex) return run_counterexample(a);
    if (*disc) return run_discretize(a);
    if (*ids) return run_identities(a);
  } catch (const chicap::MaxItersExceeded& e) {
    print_error(e.code(), "numerical", e.what(), chicap::io::report_to_json(e.best_report()));
    return 2;
  } catch (const chicap::Error& e) {
    const bool validation = e.error_class() == chicap::ErrorClass::validation;
    print_error(e.code(), validation ? "validation" : "numerical", e.what());
    return validation ? 1 : 2;
  } catch (const std::exception& e) {
    print_error("InternalError", "numerical", e.what());
    return 2;
  }
  return 1;
}
