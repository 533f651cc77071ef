#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "otk/otk.hpp"

namespace {

std::string stem_of(const std::string& path) {
  std::size_t slash = path.find_last_of("/\\");
  std::size_t dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path;
  return path.substr(0, dot);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

// Grid syntax: comma-separated tokens, each a scalar or a range. Integer
// ranges are "a..b" (step 1) or "a..b..s"; real ranges require the
// explicit step form "a..b..s".
std::vector<int> parse_int_grid(const std::string& text) {
  std::vector<int> grid;
  for (const std::string& token : split(text, ',')) {
    if (token.empty()) throw otk::input_error("grid: empty token in '" + text + "'");
    std::size_t dots = token.find("..");
    try {
      if (dots == std::string::npos) {
        grid.push_back(std::stoi(token));
        continue;
      }
      std::string rest = token.substr(dots + 2);
      std::size_t dots2 = rest.find("..");
      int lo = std::stoi(token.substr(0, dots));
      int hi = dots2 == std::string::npos ? std::stoi(rest)
                                          : std::stoi(rest.substr(0, dots2));
      int step = dots2 == std::string::npos ? 1 : std::stoi(rest.substr(dots2 + 2));
      if (step < 1) throw otk::input_error("grid: step must be >= 1");
      if (hi < lo) throw otk::input_error("grid: descending range in '" + token + "'");
      for (int v = lo; v <= hi; v += step) grid.push_back(v);
    } catch (const std::invalid_argument&) {
      throw otk::input_error("grid: cannot parse '" + token + "'");
    } catch (const std::out_of_range&) {
      throw otk::input_error("grid: value out of range in '" + token + "'");
    }
  }
  return grid;
}

std::vector<double> parse_double_grid(const std::string& text) {
  std::vector<double> grid;
  for (const std::string& token : split(text, ',')) {
    if (token.empty()) throw otk::input_error("grid: empty token in '" + text + "'");
    std::size_t dots = token.find("..");
    if (dots == std::string::npos) {
      grid.push_back(otk::parse_double(token));
      continue;
    }
    std::string rest = token.substr(dots + 2);
    std::size_t dots2 = rest.find("..");
    if (dots2 == std::string::npos)
      throw otk::input_error("grid: real ranges need an explicit step, got '" +
                             token + "'");
    double lo = otk::parse_double(token.substr(0, dots));
    double hi = otk::parse_double(rest.substr(0, dots2));
    double step = otk::parse_double(rest.substr(dots2 + 2));
    if (!(step > 0.0)) throw otk::input_error("grid: step must be positive");
    if (hi < lo) throw otk::input_error("grid: descending range in '" + token + "'");
    for (double v = lo; v <= hi + 1e-12; v += step) grid.push_back(v);
  }
  return grid;
}

std::vector<otk::AlgorithmChoice> parse_algorithm_list(const std::string& text) {
  std::vector<otk::AlgorithmChoice> algorithms;
  for (const std::string& token : split(text, ','))
    algorithms.push_back(otk::parse_algorithm(token));
  if (algorithms.empty())
    throw otk::input_error("--algs: algorithm list is empty");
  return algorithms;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw otk::input_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<otk::AlgorithmChoice> default_algorithms(otk::Family family) {
  switch (family) {
    case otk::Family::trajectory:
      return {otk::parse_algorithm("IHT"), otk::parse_algorithm("HTP"),
              otk::parse_algorithm("ROTP"), otk::parse_algorithm("ROTP2"),
              otk::parse_algorithm("ROTP3")};
    case otk::Family::iterations_vs_ratio:
      return {otk::parse_algorithm("ROTP"), otk::parse_algorithm("ROTP2"),
              otk::parse_algorithm("ROTP3")};
    case otk::Family::success_frequency:
      return {otk::parse_algorithm("IHT"), otk::parse_algorithm("HTP"),
              otk::parse_algorithm("L1"), otk::parse_algorithm("ROTP"),
              otk::parse_algorithm("ROTP2"), otk::parse_algorithm("ROTP3")};
  }
  throw otk::input_error("default_algorithms: unknown family");
}

otk::ExperimentSpec family_defaults(otk::Family family) {
  otk::ExperimentSpec spec;
  spec.family = family;
  spec.algorithms = default_algorithms(family);
  switch (family) {
    case otk::Family::trajectory:
      spec.m = 100;
      spec.n = 200;
      spec.sparsity_grid = {24};
      spec.trials = 1;
      break;
    case otk::Family::iterations_vs_ratio:
      spec.n = 200;
      spec.beta_grid = {0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6};
      spec.trials = 10;
      break;
    case otk::Family::success_frequency:
      spec.m = 50;
      spec.n = 100;
      spec.sparsity_grid = {2, 4, 6, 8, 10, 12, 14};
      spec.trials = 10;
      spec.noise.measurement_scale = 0.01;
      break;
  }
  return spec;
}

// Shared flag set for the three experiment subcommands. Values land in
// this struct; presence is queried through the subcommand's count() so a
// config file and explicit flags compose (flags win).
struct ExperimentOptions {
  int m = 0;
  int n = 0;
  int k = 0;
  std::string k_grid;
  std::string beta_grid;
  int trials = 0;
  std::string algs;
  int max_iter = 0;
  double tol = 0.0;
  std::uint64_t seed = 0;
  double noise = 0.0;
  double signal_noise = 0.0;
  std::string out;
  std::string config;
  bool timings = false;
  int threads = 0;
  std::uint64_t guard = 0;
};

void add_common_flags(CLI::App* sub, ExperimentOptions& o, otk::Family family) {
  sub->add_option("--n", o.n, "signal dimension");
  sub->add_option("--trials", o.trials, "trials per grid point");
  sub->add_option("--algs", o.algs,
                  "comma-separated algorithms (IHT, HTP, OT, OTP, ROT, ROTP, "
                  "ROTP2, ROTP3, L1)");
  sub->add_option("--max-iter", o.max_iter, "outer iteration cap");
  sub->add_option("--tol", o.tol, "residual stopping tolerance");
  sub->add_option("--seed", o.seed, "master seed");
  sub->add_option("--noise", o.noise, "measurement noise scale");
  sub->add_option("--out", o.out, "report CSV path");
  sub->add_option("--config", o.config, "JSON config file (flags override it)");
  sub->add_flag("--timings", o.timings, "record wall-clock times (breaks byte-for-byte reproducibility)");
  sub->add_option("--threads", o.threads, "worker threads");
  sub->add_option("--guard", o.guard, "enumeration guard for OT/OTP");
  if (family != otk::Family::iterations_vs_ratio)
    sub->add_option("--m", o.m, "measurement count");
  if (family == otk::Family::trajectory)
    sub->add_option("--k", o.k, "sparsity level");
  if (family == otk::Family::success_frequency) {
    sub->add_option("--k-grid", o.k_grid, "sparsity grid, e.g. 2..14..2 or 5,8,11");
    sub->add_option("--signal-noise", o.signal_noise,
                    "signal perturbation scale (switches the target to the "
                    "best k-term approximation of the perturbed signal)");
  }
  if (family == otk::Family::iterations_vs_ratio)
    sub->add_option("--beta-grid", o.beta_grid,
                    "m/n grid, e.g. 0.3..0.6..0.05 or 0.3,0.4,0.5");
}

// count() by itself throws on options the subcommand never registered,
// and the three experiment subcommands register different subsets.
bool flag_given(const CLI::App* sub, const std::string& name) {
  const CLI::Option* opt = sub->get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

otk::ExperimentSpec build_spec(const CLI::App* sub, const ExperimentOptions& o,
                               otk::Family family) {
  otk::ExperimentSpec spec = family_defaults(family);
  if (!o.config.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(o.config));
    } catch (const nlohmann::json::exception& e) {
      throw otk::input_error(std::string("config: invalid JSON: ") + e.what());
    }
    if (j.is_object() && j.contains("family") &&
        otk::parse_family(j["family"].get<std::string>()) != family)
      throw otk::input_error("config: family '" +
                             j["family"].get<std::string>() +
                             "' does not match this subcommand");
    spec = otk::experiment_spec_from_json(j, std::move(spec));
    spec.family = family;
  }
  if (flag_given(sub, "--m")) spec.m = o.m;
  if (flag_given(sub, "--n")) spec.n = o.n;
  if (flag_given(sub, "--k")) spec.sparsity_grid = {o.k};
  if (flag_given(sub, "--k-grid")) spec.sparsity_grid = parse_int_grid(o.k_grid);
  if (flag_given(sub, "--beta-grid")) spec.beta_grid = parse_double_grid(o.beta_grid);
  if (flag_given(sub, "--trials")) spec.trials = o.trials;
  if (flag_given(sub, "--algs")) spec.algorithms = parse_algorithm_list(o.algs);
  if (flag_given(sub, "--max-iter")) spec.max_iterations = o.max_iter;
  if (flag_given(sub, "--tol")) spec.residual_tolerance = o.tol;
  if (flag_given(sub, "--seed")) spec.master_seed = o.seed;
  if (flag_given(sub, "--noise")) spec.noise.measurement_scale = o.noise;
  if (flag_given(sub, "--signal-noise")) spec.noise.signal_scale = o.signal_noise;
  if (flag_given(sub, "--timings")) spec.collect_timings = o.timings;
  if (flag_given(sub, "--threads")) spec.threads = o.threads;
  if (flag_given(sub, "--guard")) spec.ot_guard = o.guard;
  return spec;
}

std::vector<std::string> label_order(const otk::ExperimentSpec& spec) {
  std::vector<std::string> labels;
  for (const otk::AlgorithmChoice& a : spec.algorithms) {
    std::string label = otk::algorithm_label(a);
    bool seen = false;
    for (const std::string& l : labels) seen = seen || l == label;
    if (!seen) labels.push_back(label);
  }
  return labels;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw otk::input_error("cannot open '" + path + "'");
  out << text;
  if (!out) throw otk::input_error("write failed for '" + path + "'");
}

int run_traj(const CLI::App* sub, const ExperimentOptions& o) {
  otk::ExperimentSpec spec = build_spec(sub, o, otk::Family::trajectory);
  std::string out = o.out.empty() ? "otk_traj.csv" : o.out;
  otk::TrajectoryRun result = otk::run_trajectory(spec);
  otk::write_report_csv(out, result.report);

  std::vector<std::pair<std::string, std::string>> labeled_paths;
  for (const otk::TraceEntry& entry : result.traces) {
    std::string path = stem_of(out) + "_" + entry.algorithm + "_k" +
                       std::to_string(entry.k) + "_t" +
                       std::to_string(entry.trial) + "_trace.csv";
    otk::write_trace_csv(path, entry.trace);
    labeled_paths.emplace_back(entry.algorithm + " k=" + std::to_string(entry.k) +
                                   " trial " + std::to_string(entry.trial),
                               path);
  }
  if (!labeled_paths.empty())
    write_text_file(stem_of(out) + ".gp", otk::gnuplot_trace_script(labeled_paths));

  std::cout << "report: " << out << " (" << result.report.rows.size()
            << " rows)\n";
  for (const otk::ReportRow& row : result.report.rows)
    std::cout << row.algorithm << " k=" << row.k << " trial " << row.trial
              << ": iterations " << row.iterations << ", final residual "
              << otk::format_double(row.final_residual) << ", relative error "
              << otk::format_double(row.rel_error) << "\n";
  return 0;
}

int run_ratio(const CLI::App* sub, const ExperimentOptions& o) {
  otk::ExperimentSpec spec = build_spec(sub, o, otk::Family::iterations_vs_ratio);
  std::string out = o.out.empty() ? "otk_ratio.csv" : o.out;
  otk::ExperimentReport report = otk::run_iterations_vs_ratio(spec);
  otk::write_report_csv(out, report);
  write_text_file(stem_of(out) + ".gp",
                  otk::gnuplot_report_script(out, spec.family, label_order(spec)));

  std::map<std::pair<int, std::string>, std::pair<long, long>> sums;
  for (const otk::ReportRow& row : report.rows) {
    auto& cell = sums[{row.m, row.algorithm}];
    cell.first += row.iterations;
    cell.second += 1;
  }
  std::cout << "report: " << out << " (" << report.rows.size() << " rows)\n";
  for (const auto& [key, cell] : sums)
    std::cout << key.second << " m=" << key.first << ": mean iterations "
              << otk::format_double(static_cast<double>(cell.first) /
                                    static_cast<double>(cell.second))
              << "\n";
  return 0;
}

int run_phase(const CLI::App* sub, const ExperimentOptions& o) {
  otk::ExperimentSpec spec = build_spec(sub, o, otk::Family::success_frequency);
  std::string out = o.out.empty() ? "otk_phase.csv" : o.out;
  otk::ExperimentReport report = otk::run_success_frequency(spec);
  otk::write_report_csv(out, report);
  write_text_file(stem_of(out) + ".gp",
                  otk::gnuplot_report_script(out, spec.family, label_order(spec)));

  std::map<std::pair<int, std::string>, std::pair<long, long>> counts;
  for (const otk::ReportRow& row : report.rows) {
    auto& cell = counts[{row.k, row.algorithm}];
    cell.first += row.success ? 1 : 0;
    cell.second += 1;
  }
  std::cout << "report: " << out << " (" << report.rows.size() << " rows)\n";
  for (const auto& [key, cell] : counts)
    std::cout << key.second << " k=" << key.first << ": successes "
              << cell.first << "/" << cell.second << "\n";
  return 0;
}

struct RipOptions {
  int m = 12;
  int n = 8;
  int K = 0;
  int k = 0;
  std::uint64_t seed = 1;
  std::uint64_t guard = 1'000'000;
  bool normalize = false;
  std::string matrix;
  std::string out;
};

std::string join_support(const otk::SupportSet& s) {
  std::string text;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) text += ' ';
    text += std::to_string(s[i]);
  }
  return text;
}

int run_rip(const RipOptions& o) {
  if ((o.K > 0) == (o.k > 0))
    throw otk::input_error("rip: give exactly one of --K (single order) or "
                           "--k (orders k, 2k, 3k plus constants)");

  otk::Matrix A;
  if (!o.matrix.empty()) {
    A = otk::read_matrix_file(o.matrix);
  } else {
    if (o.m < 1 || o.n < 1) throw otk::input_error("rip: m and n must be >= 1");
    A = otk::gen_gaussian_matrix(o.m, o.n, o.seed);
    A /= std::sqrt(static_cast<double>(o.m));
  }
  if (o.normalize)
    for (otk::Index j = 0; j < A.cols(); ++j) {
      double norm = A.col(j).norm();
      if (norm == 0.0)
        throw otk::input_error("rip: cannot normalize a zero column");
      A.col(j) /= norm;
    }

  std::vector<std::vector<std::string>> rows;
  if (o.K > 0) {
    otk::RipEstimate est = otk::rip_constant_bruteforce(A, o.K, o.guard);
    std::cout << "delta_" << est.order << " = " << otk::format_double(est.delta)
              << " (witness support: " << join_support(est.witness_support)
              << ")\n";
    rows.push_back({"delta_" + std::to_string(est.order),
                    otk::format_double(est.delta)});
    rows.push_back({"witness_support", join_support(est.witness_support)});
  } else {
    int orders[3] = {o.k, 2 * o.k, 3 * o.k};
    double deltas[3] = {0.0, 0.0, 0.0};
    for (int i = 0; i < 3; ++i) {
      if (orders[i] > A.cols())
        throw otk::input_error("rip: order " + std::to_string(orders[i]) +
                               " exceeds the column count");
      otk::RipEstimate est = otk::rip_constant_bruteforce(A, orders[i], o.guard);
      deltas[i] = est.delta;
      std::cout << "delta_" << orders[i] << " = "
                << otk::format_double(est.delta) << " (witness support: "
                << join_support(est.witness_support) << ")\n";
      rows.push_back({"delta_" + std::to_string(orders[i]),
                      otk::format_double(est.delta)});
    }
    std::cout << "tau_star = " << otk::format_double(otk::tau_star()) << "\n";
    rows.push_back({"tau_star", otk::format_double(otk::tau_star())});
    if (deltas[1] < 1.0 && deltas[2] < 1.0 && deltas[0] <= deltas[1] &&
        deltas[1] <= deltas[2]) {
      otk::ConvergenceConstants c =
          otk::convergence_constants(deltas[0], deltas[1], deltas[2]);
      std::cout << "rho = " << otk::format_double(c.rho) << ", C = "
                << (c.c_defined ? otk::format_double(c.C) : "undefined (rho >= 1)")
                << "\n";
      std::cout << "varrho = " << otk::format_double(c.varrho)
                << ", C_rot = " << otk::format_double(c.c_rot) << "\n";
      std::cout << "varrho_pursuit = " << otk::format_double(c.varrho_pursuit)
                << ", C_star = " << otk::format_double(c.c_star) << "\n";
      rows.push_back({"rho", otk::format_double(c.rho)});
      rows.push_back({"C", otk::format_double(c.C)});
      rows.push_back({"varrho", otk::format_double(c.varrho)});
      rows.push_back({"C_rot", otk::format_double(c.c_rot)});
      rows.push_back({"varrho_pursuit", otk::format_double(c.varrho_pursuit)});
      rows.push_back({"C_star", otk::format_double(c.c_star)});
    } else {
      std::cout << "convergence constants undefined (delta >= 1 or ordering "
                   "violated)\n";
    }
  }

  if (!o.out.empty()) {
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw otk::input_error("cannot open '" + o.out + "'");
    f << otk::csv_row({"name", "value"});
    for (const auto& row : rows) f << otk::csv_row(row);
  }
  return 0;
}

struct SolveOptions {
  std::string matrix;
  std::string rhs;
  int k = 1;
  std::string alg = "ROTP";
  int max_iter = 50;
  double tol = 1e-8;
  std::uint64_t guard = 2'000'000;
  bool timings = false;
  std::string out;
  std::string export_solution;
};

int run_solve(const SolveOptions& o) {
  otk::Matrix A = otk::read_matrix_file(o.matrix);
  otk::Vector y = otk::read_vector_file(o.rhs);
  otk::ProblemInstance p(std::move(A), std::move(y), o.k);
  otk::AlgorithmChoice alg = otk::parse_algorithm(o.alg);

  if (alg.is_l1) {
    if (!o.out.empty())
      throw otk::input_error("solve: the L1 baseline records no trace");
    otk::L1Result r = otk::solve_l1_baseline_detailed(p);
    std::cout << "algorithm: L1\n"
              << "inner iterations: " << r.iterations << "\n"
              << "converged: " << (r.converged ? "yes" : "no") << "\n"
              << "final residual: "
              << otk::format_double(otk::residual_norm(p, r.x)) << "\n";
    if (!o.export_solution.empty()) otk::write_vector_file(o.export_solution, r.x);
    return 0;
  }

  otk::AlgorithmConfig cfg;
  cfg.variant = alg.variant;
  cfg.max_iterations = o.max_iter;
  cfg.residual_tolerance = o.tol;
  cfg.ot_guard = o.guard;
  cfg.collect_timings = o.timings;
  otk::RunResult result = otk::run(p, cfg);
  const otk::IterateRecord& last = result.trace.records.back();
  std::cout << "algorithm: " << otk::variant_name(alg.variant) << "\n"
            << "iterations: " << last.iteration << "\n"
            << "stop reason: " << otk::stop_reason_name(result.trace.reason)
            << "\n"
            << "final residual: " << otk::format_double(last.residual) << "\n"
            << "support: " << join_support(last.support) << "\n";
  if (!o.out.empty()) otk::write_trace_csv(o.out, result.trace);
  if (!o.export_solution.empty())
    otk::write_vector_file(o.export_solution, result.x);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "otk: optimal-k-thresholding sparse recovery - algorithms, analysis, "
      "and benchmark harness"};
  app.require_subcommand(1);

  ExperimentOptions traj_opts, ratio_opts, phase_opts;
  CLI::App* traj = app.add_subcommand(
      "traj", "residual trajectories on a shared instance");
  add_common_flags(traj, traj_opts, otk::Family::trajectory);
  CLI::App* ratio = app.add_subcommand(
      "ratio", "mean iterations to recovery across an m/n grid");
  add_common_flags(ratio, ratio_opts, otk::Family::iterations_vs_ratio);
  CLI::App* phase = app.add_subcommand(
      "phase", "success frequencies across a sparsity grid");
  add_common_flags(phase, phase_opts, otk::Family::success_frequency);

  RipOptions rip_opts;
  CLI::App* rip = app.add_subcommand(
      "rip", "brute-force restricted isometry constants");
  rip->add_option("--m", rip_opts.m, "rows of the generated matrix");
  rip->add_option("--n", rip_opts.n, "columns of the generated matrix");
  rip->add_option("--K", rip_opts.K, "single order to certify");
  rip->add_option("--k", rip_opts.k, "sparsity: certify orders k, 2k, 3k and "
                                     "evaluate the convergence constants");
  rip->add_option("--seed", rip_opts.seed, "generation seed");
  rip->add_option("--guard", rip_opts.guard, "support enumeration guard");
  rip->add_flag("--normalize", rip_opts.normalize, "normalize columns first");
  rip->add_option("--matrix", rip_opts.matrix,
                  "read the matrix from a file instead of generating one");
  rip->add_option("--out", rip_opts.out, "name,value CSV path");

  SolveOptions solve_opts;
  CLI::App* solve = app.add_subcommand("solve", "run one algorithm on files");
  solve->add_option("--matrix", solve_opts.matrix, "matrix file")->required();
  solve->add_option("--rhs", solve_opts.rhs, "measurement vector file")->required();
  solve->add_option("--k", solve_opts.k, "sparsity level")->required();
  solve->add_option("--alg", solve_opts.alg, "algorithm (default ROTP)");
  solve->add_option("--max-iter", solve_opts.max_iter, "outer iteration cap");
  solve->add_option("--tol", solve_opts.tol, "residual stopping tolerance");
  solve->add_option("--guard", solve_opts.guard, "enumeration guard for OT/OTP");
  solve->add_flag("--timings", solve_opts.timings, "record wall-clock times");
  solve->add_option("--out", solve_opts.out, "trace CSV path");
  solve->add_option("--export-solution", solve_opts.export_solution,
                    "write the final iterate to this file");

  try {
    app.parse(argc, argv);
    if (traj->parsed()) return run_traj(traj, traj_opts);
    if (ratio->parsed()) return run_ratio(ratio, ratio_opts);
    if (phase->parsed()) return run_phase(phase, phase_opts);
    if (rip->parsed()) return run_rip(rip_opts);
    if (solve->parsed()) return run_solve(solve_opts);
    return 2;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const otk::guard_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const otk::input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
