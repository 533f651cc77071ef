#pragma once

#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "otk/algorithms.hpp"
#include "otk/errors.hpp"
#include "otk/io.hpp"
#include "otk/model.hpp"
#include "otk/rng.hpp"
#include "otk/subsolvers.hpp"
#include "otk/thresholding.hpp"

namespace otk {

// Stream layout (part of the replay contract, see rng.hpp for the
// primitives). Family ids: trajectory = 1, ratio = 2, phase = 3. The key
// for trial t at grid point g is
//
//   trial_key = child(child(child(master_seed, family_id), g), t)
//
// and within a trial: matrix seed = child(trial_key, 0), signal seed =
// child(trial_key, 1), measurement-noise seed = child(trial_key, 2),
// signal-noise seed = child(trial_key, 3). The ratio family shares one
// signal across all trials of a grid point, drawn from
// child(child(child(master_seed, 2), g), 2^32); the slot 2^32 cannot
// collide with a trial index. Noise streams are only consumed when the
// corresponding scale is positive. Report rows store trial_key in the
// seed column, so any row is reproducible from the master seed and its
// coordinates alone.

enum class Family { trajectory, iterations_vs_ratio, success_frequency };

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::trajectory:
      return "trajectory";
    case Family::iterations_vs_ratio:
      return "iterations_vs_ratio";
    case Family::success_frequency:
      return "success_frequency";
  }
  throw input_error("family_name: unknown family");
}

inline Family parse_family(std::string_view name) {
  if (name == "trajectory") return Family::trajectory;
  if (name == "iterations_vs_ratio") return Family::iterations_vs_ratio;
  if (name == "success_frequency") return Family::success_frequency;
  throw input_error("parse_family: unknown family '" + std::string(name) + "'");
}

// The benchmark algorithms are the eight outer-iteration variants plus the
// one-shot l1 baseline, which has no outer trace; its iterations column
// counts inner splitting steps instead.
struct AlgorithmChoice {
  bool is_l1 = false;
  Variant variant = Variant::iht;
};

inline AlgorithmChoice parse_algorithm(std::string_view name) {
  std::string up(name);
  for (char& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (up == "L1") return {true, Variant::iht};
  return {false, parse_variant(name)};
}

inline std::string algorithm_label(const AlgorithmChoice& a) {
  return a.is_l1 ? "L1" : std::string(variant_name(a.variant));
}

struct ExperimentSpec {
  Family family = Family::trajectory;
  int m = 100;
  int n = 200;
  std::vector<double> beta_grid;   // ratio family only
  std::vector<int> sparsity_grid;  // trajectory and phase families
  int trials = 1;
  std::vector<AlgorithmChoice> algorithms;
  NoiseModel noise{};
  std::uint64_t master_seed = 0;
  double success_threshold = 1e-2;
  int max_iterations = 50;
  double residual_tolerance = 1e-8;
  QPSettings qp{};
  std::uint64_t ot_guard = 2'000'000;
  bool collect_timings = false;
  int threads = 1;
};

// m = floor(beta * n), nudged so decimal grid values like 0.3 that land a
// hair under an integer after rounding still floor to the intended m.
inline int ratio_measurements(double beta, int n) {
  return static_cast<int>(std::floor(beta * n + 1e-9));
}

inline void check_experiment_spec(const ExperimentSpec& spec) {
  if (spec.trials < 1) throw input_error("ExperimentSpec: trials must be >= 1");
  if (spec.algorithms.empty())
    throw input_error("ExperimentSpec: algorithm list is empty");
  if (!(spec.success_threshold >= 0.0))
    throw input_error("ExperimentSpec: success_threshold must be >= 0");
  if (spec.max_iterations < 1)
    throw input_error("ExperimentSpec: max_iterations must be >= 1");
  if (!(spec.residual_tolerance >= 0.0))
    throw input_error("ExperimentSpec: residual_tolerance must be >= 0");
  if (spec.threads < 1) throw input_error("ExperimentSpec: threads must be >= 1");
  check_qp_settings(spec.qp);
  check_noise(spec.noise);

  if (spec.family == Family::iterations_vs_ratio) {
    if (spec.n < 1) throw input_error("ExperimentSpec: n must be >= 1");
    if (spec.beta_grid.empty())
      throw input_error("ExperimentSpec: beta grid is empty");
    for (double beta : spec.beta_grid) {
      if (!(beta > 0.0 && beta < 1.0))
        throw input_error("ExperimentSpec: beta values must lie in (0, 1)");
      int m = ratio_measurements(beta, spec.n);
      if (m < 10)
        throw input_error(
            "ExperimentSpec: beta * n must be >= 10 so that k = floor(m/10) "
            ">= 1");
    }
  } else {
    if (spec.m < 1 || spec.n < 1)
      throw input_error("ExperimentSpec: m and n must be >= 1");
    if (spec.sparsity_grid.empty())
      throw input_error("ExperimentSpec: sparsity grid is empty");
    for (int k : spec.sparsity_grid)
      if (k < 1 || k > spec.n)
        throw input_error("ExperimentSpec: sparsity values must lie in [1, n]");
  }
  if (spec.family != Family::success_frequency && spec.noise.signal_scale != 0.0)
    throw input_error(
        "ExperimentSpec: signal noise applies only to the success_frequency "
        "family");
}

struct ReportRow {
  std::string family;
  std::string algorithm;
  int m = 0;
  int n = 0;
  int k = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  int iterations = 0;
  double final_residual = 0.0;
  double rel_error = 0.0;
  bool success = false;
  double wall_ms = 0.0;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
};

inline void write_report_csv(std::ostream& out, const ExperimentReport& report) {
  out << csv_row({"family", "algorithm", "m", "n", "k", "trial", "seed",
                  "iterations", "final_residual", "rel_error", "success",
                  "wall_ms"});
  for (const ReportRow& r : report.rows)
    out << csv_row({r.family, r.algorithm, std::to_string(r.m),
                    std::to_string(r.n), std::to_string(r.k),
                    std::to_string(r.trial), std::to_string(r.seed),
                    std::to_string(r.iterations), format_double(r.final_residual),
                    format_double(r.rel_error), r.success ? "1" : "0",
                    format_double(r.wall_ms)});
}

inline void write_report_csv(const std::string& path,
                             const ExperimentReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("write_report_csv: cannot open '" + path + "'");
  write_report_csv(out, report);
  if (!out) throw input_error("write_report_csv: write failed for '" + path + "'");
}

namespace detail {

inline constexpr std::uint64_t kFamilyIdTrajectory = 1;
inline constexpr std::uint64_t kFamilyIdRatio = 2;
inline constexpr std::uint64_t kFamilyIdPhase = 3;
inline constexpr std::uint64_t kSharedSignalSlot = std::uint64_t{1} << 32;

struct TrialSeeds {
  std::uint64_t trial_key = 0;
  std::uint64_t matrix = 0;
  std::uint64_t signal = 0;
  std::uint64_t measurement_noise = 0;
  std::uint64_t signal_noise = 0;
};

inline TrialSeeds trial_seeds(std::uint64_t master, std::uint64_t family_id,
                              std::uint64_t grid_index, std::uint64_t trial) {
  TrialSeeds s;
  s.trial_key = child_stream(
      child_stream(child_stream(master, family_id), grid_index), trial);
  s.matrix = child_stream(s.trial_key, 0);
  s.signal = child_stream(s.trial_key, 1);
  s.measurement_noise = child_stream(s.trial_key, 2);
  s.signal_noise = child_stream(s.trial_key, 3);
  return s;
}

inline void parallel_for(int count, int threads,
                         const std::function<void(int)>& body) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  int workers = std::min(threads, count);
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct SingleRun {
  int iterations = 0;
  double final_residual = 0.0;
  double rel_error = 0.0;
  bool success = false;
  double wall_ms = 0.0;
  IterateTrace trace;  // empty for the l1 baseline
  bool has_trace = false;
};

inline SingleRun run_one(const ProblemInstance& p, const AlgorithmChoice& alg,
                         const SparseSignal& reference,
                         const ExperimentSpec& spec,
                         double ground_truth_criterion, bool want_trace) {
  using Clock = std::chrono::steady_clock;
  Clock::time_point begin{};
  if (spec.collect_timings) begin = Clock::now();

  SingleRun out;
  double ref_norm = reference.values.norm();
  if (alg.is_l1) {
    L1Result r = solve_l1_baseline_detailed(p, spec.qp);
    out.iterations = r.iterations;
    out.final_residual = residual_norm(p, r.x);
    out.rel_error = (r.x - reference.values).norm() / ref_norm;
  } else {
    AlgorithmConfig cfg;
    cfg.variant = alg.variant;
    cfg.max_iterations = spec.max_iterations;
    cfg.residual_tolerance = spec.residual_tolerance;
    cfg.qp = spec.qp;
    cfg.ot_guard = spec.ot_guard;
    cfg.ground_truth_criterion = ground_truth_criterion;
    cfg.collect_timings = spec.collect_timings;
    RunResult rr = run(p, cfg, Vector::Zero(p.n()), &reference);
    const IterateRecord& last = rr.trace.records.back();
    out.iterations = last.iteration;
    out.final_residual = last.residual;
    out.rel_error = *last.error / ref_norm;
    if (want_trace) {
      out.trace = std::move(rr.trace);
      out.has_trace = true;
    }
  }
  out.success = out.rel_error <= spec.success_threshold;
  if (spec.collect_timings)
    out.wall_ms =
        std::chrono::duration<double, std::milli>(Clock::now() - begin).count();
  return out;
}

inline Vector noisy_measurements(const Matrix& A, const Vector& signal,
                                 double scale, std::uint64_t noise_seed) {
  Vector y = A * signal;
  if (scale > 0.0) {
    Rng rng(noise_seed);
    y += scale * gen_gaussian_vector(y.size(), rng);
  }
  return y;
}

}  // namespace detail

struct TraceEntry {
  std::string algorithm;
  int k = 0;
  int trial = 0;
  IterateTrace trace;
};

struct TrajectoryRun {
  ExperimentReport report;
  std::vector<TraceEntry> traces;
};

// One shared instance per (sparsity, trial); every algorithm runs on it
// from the zero vector. Runs go to the residual tolerance or the cap; the
// recovery criterion only ends a run at exact recovery, so traces show the
// full residual trajectory.
inline TrajectoryRun run_trajectory(const ExperimentSpec& spec) {
  if (spec.family != Family::trajectory)
    throw input_error("run_trajectory: spec.family must be trajectory");
  check_experiment_spec(spec);

  const int grid = static_cast<int>(spec.sparsity_grid.size());
  const int algs = static_cast<int>(spec.algorithms.size());
  const int items = grid * spec.trials;

  TrajectoryRun out;
  out.report.rows.resize(static_cast<std::size_t>(items) * algs);
  out.traces.resize(static_cast<std::size_t>(items) * algs);

  detail::parallel_for(items, spec.threads, [&](int item) {
    const int g = item / spec.trials;
    const int trial = item % spec.trials;
    const int k = spec.sparsity_grid[static_cast<std::size_t>(g)];
    detail::TrialSeeds seeds = detail::trial_seeds(
        spec.master_seed, detail::kFamilyIdTrajectory,
        static_cast<std::uint64_t>(g), static_cast<std::uint64_t>(trial));

    Matrix A = gen_gaussian_matrix(spec.m, spec.n, seeds.matrix);
    SparseSignal x_star = gen_sparse_signal(spec.n, k, seeds.signal);
    Vector y = detail::noisy_measurements(
        A, x_star.values, spec.noise.measurement_scale, seeds.measurement_noise);
    ProblemInstance p(std::move(A), std::move(y), k);

    for (int a = 0; a < algs; ++a) {
      const AlgorithmChoice& alg = spec.algorithms[static_cast<std::size_t>(a)];
      detail::SingleRun r =
          detail::run_one(p, alg, x_star, spec, 0.0, !alg.is_l1);
      std::size_t slot = static_cast<std::size_t>(item) * algs + a;
      ReportRow& row = out.report.rows[slot];
      row = {std::string(family_name(spec.family)), algorithm_label(alg),
             spec.m, spec.n, k, trial, seeds.trial_key, r.iterations,
             r.final_residual, r.rel_error, r.success, r.wall_ms};
      if (r.has_trace)
        out.traces[slot] = {algorithm_label(alg), k, trial, std::move(r.trace)};
    }
  });

  std::erase_if(out.traces,
                [](const TraceEntry& t) { return t.trace.records.empty(); });
  return out;
}

// For each beta: m = floor(beta n), k = floor(m / 10), one signal shared
// by all trials, a fresh matrix per trial. Rows record the iterations
// needed to meet the recovery criterion (max_iterations when capped).
inline ExperimentReport run_iterations_vs_ratio(const ExperimentSpec& spec) {
  if (spec.family != Family::iterations_vs_ratio)
    throw input_error(
        "run_iterations_vs_ratio: spec.family must be iterations_vs_ratio");
  check_experiment_spec(spec);

  const int grid = static_cast<int>(spec.beta_grid.size());
  const int algs = static_cast<int>(spec.algorithms.size());
  const int items = grid * spec.trials;

  std::vector<SparseSignal> shared;
  shared.reserve(static_cast<std::size_t>(grid));
  for (int g = 0; g < grid; ++g) {
    int m = ratio_measurements(spec.beta_grid[static_cast<std::size_t>(g)], spec.n);
    int k = m / 10;
    std::uint64_t seed = child_stream(
        child_stream(child_stream(spec.master_seed, detail::kFamilyIdRatio),
                     static_cast<std::uint64_t>(g)),
        detail::kSharedSignalSlot);
    shared.push_back(gen_sparse_signal(spec.n, k, seed));
  }

  ExperimentReport report;
  report.rows.resize(static_cast<std::size_t>(items) * algs);

  detail::parallel_for(items, spec.threads, [&](int item) {
    const int g = item / spec.trials;
    const int trial = item % spec.trials;
    const int m = ratio_measurements(spec.beta_grid[static_cast<std::size_t>(g)],
                                     spec.n);
    const int k = m / 10;
    detail::TrialSeeds seeds = detail::trial_seeds(
        spec.master_seed, detail::kFamilyIdRatio, static_cast<std::uint64_t>(g),
        static_cast<std::uint64_t>(trial));

    const SparseSignal& x_star = shared[static_cast<std::size_t>(g)];
    Matrix A = gen_gaussian_matrix(m, spec.n, seeds.matrix);
    Vector y = detail::noisy_measurements(
        A, x_star.values, spec.noise.measurement_scale, seeds.measurement_noise);
    ProblemInstance p(std::move(A), std::move(y), k);

    for (int a = 0; a < algs; ++a) {
      const AlgorithmChoice& alg = spec.algorithms[static_cast<std::size_t>(a)];
      detail::SingleRun r = detail::run_one(p, alg, x_star, spec,
                                            spec.success_threshold, false);
      report.rows[static_cast<std::size_t>(item) * algs + a] = {
          std::string(family_name(spec.family)), algorithm_label(alg), m,
          spec.n, k, trial, seeds.trial_key, r.iterations, r.final_residual,
          r.rel_error, r.success, r.wall_ms};
    }
  });
  return report;
}

// Success frequencies over a sparsity grid. With signal noise off the
// target is the k-sparse signal itself and y = A x* + eps theta; with
// signal noise on, the measured vector is x-tilde = x* + eps-tilde
// theta-tilde and the recovery target is the best k-term approximation of
// x-tilde. Rows are indexed by the sparsity actually generated.
inline ExperimentReport run_success_frequency(const ExperimentSpec& spec) {
  if (spec.family != Family::success_frequency)
    throw input_error(
        "run_success_frequency: spec.family must be success_frequency");
  check_experiment_spec(spec);

  const int grid = static_cast<int>(spec.sparsity_grid.size());
  const int algs = static_cast<int>(spec.algorithms.size());
  const int items = grid * spec.trials;

  ExperimentReport report;
  report.rows.resize(static_cast<std::size_t>(items) * algs);

  detail::parallel_for(items, spec.threads, [&](int item) {
    const int g = item / spec.trials;
    const int trial = item % spec.trials;
    const int k = spec.sparsity_grid[static_cast<std::size_t>(g)];
    detail::TrialSeeds seeds = detail::trial_seeds(
        spec.master_seed, detail::kFamilyIdPhase, static_cast<std::uint64_t>(g),
        static_cast<std::uint64_t>(trial));

    Matrix A = gen_gaussian_matrix(spec.m, spec.n, seeds.matrix);
    SparseSignal x_star = gen_sparse_signal(spec.n, k, seeds.signal);

    Vector measured = x_star.values;
    SparseSignal reference = x_star;
    if (spec.noise.signal_scale > 0.0) {
      Rng rng(seeds.signal_noise);
      measured += spec.noise.signal_scale * gen_gaussian_vector(spec.n, rng);
      reference = SparseSignal(hard_threshold(measured, k).vector, k);
    }
    Vector y = detail::noisy_measurements(
        A, measured, spec.noise.measurement_scale, seeds.measurement_noise);
    ProblemInstance p(std::move(A), std::move(y), k);

    for (int a = 0; a < algs; ++a) {
      const AlgorithmChoice& alg = spec.algorithms[static_cast<std::size_t>(a)];
      detail::SingleRun r = detail::run_one(p, alg, reference, spec,
                                            spec.success_threshold, false);
      report.rows[static_cast<std::size_t>(item) * algs + a] = {
          std::string(family_name(spec.family)), algorithm_label(alg), spec.m,
          spec.n, k, trial, seeds.trial_key, r.iterations, r.final_residual,
          r.rel_error, r.success, r.wall_ms};
    }
  });
  return report;
}

// Minimal gnuplot companions. Column numbers refer to the report schema;
// `smooth unique` averages the y values sharing an x coordinate, which
// turns per-trial rows into per-grid-point means.
inline std::string gnuplot_report_script(const std::string& report_csv,
                                         Family family,
                                         const std::vector<std::string>& labels) {
  std::string x, yexpr, ylabel;
  if (family == Family::iterations_vs_ratio) {
    x = "($3/$4)";
    yexpr = "$8";
    ylabel = "mean iterations";
  } else {
    x = "($5)";
    yexpr = "$11";
    ylabel = "success frequency";
  }
  std::string script;
  script += "set datafile separator ','\n";
  script += "set key outside\n";
  script += "set ylabel '" + ylabel + "'\n";
  script += "plot \\\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    script += "  '" + report_csv + "' using " + x + ":(strcol(2) eq '" +
              labels[i] + "' ? " + yexpr + " : NaN) smooth unique "
              "with linespoints title '" + labels[i] + "'";
    script += i + 1 < labels.size() ? ", \\\n" : "\n";
  }
  return script;
}

inline std::string gnuplot_trace_script(
    const std::vector<std::pair<std::string, std::string>>& labeled_paths) {
  std::string script;
  script += "set datafile separator ','\n";
  script += "set key outside\n";
  script += "set logscale y\n";
  script += "set xlabel 'iteration'\n";
  script += "set ylabel 'residual'\n";
  script += "plot \\\n";
  for (std::size_t i = 0; i < labeled_paths.size(); ++i) {
    script += "  '" + labeled_paths[i].second +
              "' using 1:2 with linespoints title '" + labeled_paths[i].first +
              "'";
    script += i + 1 < labeled_paths.size() ? ", \\\n" : "\n";
  }
  return script;
}

}  // namespace otk
