#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "otk/config.hpp"
#include "otk/experiments.hpp"

namespace {

otk::ExperimentSpec tiny_phase_spec() {
  otk::ExperimentSpec spec;
  spec.family = otk::Family::success_frequency;
  spec.m = 20;
  spec.n = 40;
  spec.sparsity_grid = {2, 4};
  spec.trials = 3;
  spec.algorithms = {otk::parse_algorithm("IHT"), otk::parse_algorithm("ROTP")};
  spec.noise.measurement_scale = 0.01;
  spec.master_seed = 99;
  return spec;
}

std::string report_text(const otk::ExperimentReport& report) {
  std::ostringstream out;
  otk::write_report_csv(out, report);
  return out.str();
}

}  // namespace

TEST_CASE("family and algorithm names parse both ways", "[experiments]") {
  for (otk::Family f : {otk::Family::trajectory, otk::Family::iterations_vs_ratio,
                        otk::Family::success_frequency})
    REQUIRE(otk::parse_family(otk::family_name(f)) == f);
  REQUIRE_THROWS_AS(otk::parse_family("unknown"), otk::input_error);

  otk::AlgorithmChoice l1 = otk::parse_algorithm("l1");
  REQUIRE(l1.is_l1);
  REQUIRE(otk::algorithm_label(l1) == "L1");
  otk::AlgorithmChoice rotp2 = otk::parse_algorithm("rotp2");
  REQUIRE_FALSE(rotp2.is_l1);
  REQUIRE(otk::algorithm_label(rotp2) == "ROTP2");
}

TEST_CASE("measurement counts from sampling ratios", "[experiments]") {
  // 0.3 * 200 sits a hair under 60 in floating point; the floor must not
  // lose the intended measurement count.
  REQUIRE(otk::ratio_measurements(0.3, 200) == 60);
  REQUIRE(otk::ratio_measurements(0.25, 200) == 50);
  REQUIRE(otk::ratio_measurements(0.35, 200) == 70);
  REQUIRE(otk::ratio_measurements(0.5, 101) == 50);
}

TEST_CASE("experiment specs are validated", "[experiments]") {
  otk::ExperimentSpec spec = tiny_phase_spec();
  REQUIRE_NOTHROW(otk::check_experiment_spec(spec));

  SECTION("dimensions") {
    spec.m = 0;
    REQUIRE_THROWS_AS(otk::check_experiment_spec(spec), otk::input_error);
  }
  SECTION("grid without entries") {
    spec.sparsity_grid.clear();
    REQUIRE_THROWS_AS(otk::check_experiment_spec(spec), otk::input_error);
  }
  SECTION("sparsity beyond the dimension") {
    spec.sparsity_grid = {41};
    REQUIRE_THROWS_AS(otk::check_experiment_spec(spec), otk::input_error);
  }
  SECTION("no algorithms") {
    spec.algorithms.clear();
    REQUIRE_THROWS_AS(otk::check_experiment_spec(spec), otk::input_error);
  }
  SECTION("ratio grid bounds") {
    otk::ExperimentSpec ratio;
    ratio.family = otk::Family::iterations_vs_ratio;
    ratio.n = 200;
    ratio.algorithms = {otk::parse_algorithm("ROTP")};
    ratio.beta_grid = {0.3, 1.0};
    REQUIRE_THROWS_AS(otk::check_experiment_spec(ratio), otk::input_error);
    ratio.beta_grid = {0.01};  // floor(0.01 * 200) = 2 < 10 measurements
    REQUIRE_THROWS_AS(otk::check_experiment_spec(ratio), otk::input_error);
    ratio.beta_grid = {0.3, 0.5};
    REQUIRE_NOTHROW(otk::check_experiment_spec(ratio));
  }
  SECTION("signal noise is a success-frequency knob") {
    otk::ExperimentSpec traj;
    traj.family = otk::Family::trajectory;
    traj.sparsity_grid = {4};
    traj.algorithms = {otk::parse_algorithm("IHT")};
    traj.noise.signal_scale = 0.001;
    REQUIRE_THROWS_AS(otk::check_experiment_spec(traj), otk::input_error);
  }
  SECTION("thread count must be positive") {
    spec.threads = 0;
    REQUIRE_THROWS_AS(otk::check_experiment_spec(spec), otk::input_error);
  }
}

TEST_CASE("report csv follows the frozen schema", "[experiments]") {
  otk::ExperimentReport report = otk::run_success_frequency(tiny_phase_spec());
  REQUIRE(report.rows.size() == 2 * 3 * 2);  // grid x trials x algorithms

  std::string text = report_text(report);
  REQUIRE(text.rfind("family,algorithm,m,n,k,trial,seed,iterations,"
                     "final_residual,rel_error,success,wall_ms\r\n", 0) == 0);

  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);  // header
  std::size_t data_rows = 0;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    REQUIRE(line.back() == '\r');
    std::size_t commas = 0;
    for (char c : line)
      if (c == ',') ++commas;
    REQUIRE(commas == 11);
    ++data_rows;
  }
  REQUIRE(data_rows == report.rows.size());

  for (const otk::ReportRow& row : report.rows) {
    REQUIRE(row.family == "success_frequency");
    REQUIRE((row.success == (row.rel_error <= 1e-2)));
    REQUIRE(row.wall_ms == 0.0);  // timings were not requested
  }
}

TEST_CASE("reports replay bitwise", "[experiments]") {
  otk::ExperimentSpec spec = tiny_phase_spec();
  std::string a = report_text(otk::run_success_frequency(spec));
  std::string b = report_text(otk::run_success_frequency(spec));
  REQUIRE(a == b);
}

TEST_CASE("extending the trial count preserves earlier trials", "[experiments]") {
  otk::ExperimentSpec spec = tiny_phase_spec();
  spec.trials = 2;
  otk::ExperimentReport small = otk::run_success_frequency(spec);
  spec.trials = 3;
  otk::ExperimentReport large = otk::run_success_frequency(spec);

  std::map<std::tuple<int, std::string, int>, otk::ReportRow> big_rows;
  for (const otk::ReportRow& r : large.rows)
    big_rows[{r.k, r.algorithm, r.trial}] = r;

  for (const otk::ReportRow& r : small.rows) {
    const otk::ReportRow& match = big_rows.at({r.k, r.algorithm, r.trial});
    REQUIRE(match.seed == r.seed);
    REQUIRE(match.iterations == r.iterations);
    REQUIRE(match.final_residual == r.final_residual);
    REQUIRE(match.rel_error == r.rel_error);
  }
}

TEST_CASE("report rows replay from their seed column", "[experiments]") {
  otk::ExperimentSpec spec = tiny_phase_spec();
  spec.algorithms = {otk::parse_algorithm("HTP")};
  otk::ExperimentReport report = otk::run_success_frequency(spec);

  // Second grid point, second trial.
  const otk::ReportRow* picked = nullptr;
  for (const otk::ReportRow& r : report.rows)
    if (r.k == 4 && r.trial == 1) picked = &r;
  REQUIRE(picked != nullptr);

  otk::detail::TrialSeeds seeds = otk::detail::trial_seeds(
      spec.master_seed, otk::detail::kFamilyIdPhase, 1, 1);
  REQUIRE(seeds.trial_key == picked->seed);

  otk::Matrix A = otk::gen_gaussian_matrix(spec.m, spec.n, seeds.matrix);
  otk::SparseSignal x_star = otk::gen_sparse_signal(spec.n, 4, seeds.signal);
  otk::Vector y = A * x_star.values;
  otk::Rng noise(seeds.measurement_noise);
  y += spec.noise.measurement_scale * otk::gen_gaussian_vector(spec.m, noise);
  otk::ProblemInstance p(std::move(A), std::move(y), 4);

  otk::AlgorithmConfig cfg;
  cfg.variant = otk::Variant::htp;
  cfg.max_iterations = spec.max_iterations;
  cfg.residual_tolerance = spec.residual_tolerance;
  cfg.ground_truth_criterion = spec.success_threshold;
  otk::RunResult rr = otk::run(p, cfg, otk::Vector::Zero(spec.n), &x_star);

  const otk::IterateRecord& last = rr.trace.records.back();
  REQUIRE(last.iteration == picked->iterations);
  REQUIRE(last.residual == picked->final_residual);
  REQUIRE(*last.error / x_star.values.norm() == picked->rel_error);
}

TEST_CASE("trajectory runs share the instance across algorithms", "[experiments]") {
  otk::ExperimentSpec spec;
  spec.family = otk::Family::trajectory;
  spec.m = 20;
  spec.n = 40;
  spec.sparsity_grid = {3};
  spec.trials = 2;
  spec.algorithms = {otk::parse_algorithm("IHT"), otk::parse_algorithm("HTP"),
                     otk::parse_algorithm("L1")};
  spec.master_seed = 7;

  otk::TrajectoryRun out = otk::run_trajectory(spec);
  REQUIRE(out.report.rows.size() == 6);
  // Traces exist for the iterative variants only.
  REQUIRE(out.traces.size() == 4);

  std::map<int, std::uint64_t> seed_by_trial;
  for (const otk::ReportRow& r : out.report.rows) {
    auto [it, inserted] = seed_by_trial.insert({r.trial, r.seed});
    if (!inserted) REQUIRE(it->second == r.seed);
  }

  for (const otk::TraceEntry& entry : out.traces) {
    REQUIRE(entry.trace.records.size() <=
            static_cast<std::size_t>(spec.max_iterations) + 1);
    REQUIRE(entry.trace.has_reference);
    // The run terminates on the residual, the cap, or exact recovery --
    // never on the loose recovery criterion, so traces stay complete.
    if (entry.trace.reason == otk::StopReason::ground_truth_criterion)
      REQUIRE(*entry.trace.records.back().error == 0.0);
  }
}

TEST_CASE("ratio runs share one signal per grid point", "[experiments]") {
  otk::ExperimentSpec spec;
  spec.family = otk::Family::iterations_vs_ratio;
  spec.n = 60;
  spec.beta_grid = {0.5};
  spec.trials = 2;
  spec.algorithms = {otk::parse_algorithm("HTP")};
  spec.master_seed = 31;

  otk::ExperimentReport report = otk::run_iterations_vs_ratio(spec);
  REQUIRE(report.rows.size() == 2);
  for (const otk::ReportRow& r : report.rows) {
    REQUIRE(r.m == 30);
    REQUIRE(r.k == 3);
  }
  // Different matrices per trial, so the outcomes differ almost surely,
  // yet both trials target the same shared signal by construction.
  std::uint64_t shared_seed = otk::child_stream(
      otk::child_stream(otk::child_stream(31, otk::detail::kFamilyIdRatio), 0),
      otk::detail::kSharedSignalSlot);
  otk::SparseSignal shared = otk::gen_sparse_signal(60, 3, shared_seed);

  otk::detail::TrialSeeds t0 = otk::detail::trial_seeds(
      31, otk::detail::kFamilyIdRatio, 0, 0);
  otk::Matrix A = otk::gen_gaussian_matrix(30, 60, t0.matrix);
  otk::ProblemInstance p(A, A * shared.values, 3);
  otk::AlgorithmConfig cfg;
  cfg.variant = otk::Variant::htp;
  cfg.ground_truth_criterion = spec.success_threshold;
  otk::RunResult rr = otk::run(p, cfg, otk::Vector::Zero(60), &shared);
  REQUIRE(rr.trace.records.back().iteration == report.rows[0].iterations);
}

TEST_CASE("signal perturbation retargets the reference", "[experiments]") {
  otk::ExperimentSpec spec = tiny_phase_spec();
  spec.trials = 2;
  spec.algorithms = {otk::parse_algorithm("ROTP")};
  spec.noise.measurement_scale = 0.01;
  spec.noise.signal_scale = 0.001;

  otk::ExperimentReport report = otk::run_success_frequency(spec);
  for (const otk::ReportRow& r : report.rows) {
    otk::detail::TrialSeeds seeds = otk::detail::trial_seeds(
        spec.master_seed, otk::detail::kFamilyIdPhase,
        static_cast<std::uint64_t>(r.k == 2 ? 0 : 1),
        static_cast<std::uint64_t>(r.trial));
    otk::SparseSignal x_star = otk::gen_sparse_signal(spec.n, r.k, seeds.signal);
    otk::Rng rng(seeds.signal_noise);
    otk::Vector measured =
        x_star.values + 0.001 * otk::gen_gaussian_vector(spec.n, rng);
    otk::SparseSignal target(otk::hard_threshold(measured, r.k).vector, r.k);
    // The target of the run is the best k-term approximation of the
    // perturbed signal, not the clean one.
    REQUIRE(target.values != x_star.values);
    REQUIRE((r.success == (r.rel_error <= spec.success_threshold)));
  }
}

TEST_CASE("noiseless easy regime recovers every trial", "[experiments]") {
  // ROTP only: the plain-gradient baselines can oscillate on unnormalized
  // Gaussian matrices even at low sparsity, which is the behavior the
  // trajectory family is there to expose.
  otk::ExperimentSpec spec;
  spec.family = otk::Family::success_frequency;
  spec.m = 40;
  spec.n = 80;
  spec.sparsity_grid = {2};
  spec.trials = 20;
  spec.algorithms = {otk::parse_algorithm("ROTP")};
  spec.master_seed = 3;

  otk::ExperimentReport report = otk::run_success_frequency(spec);
  REQUIRE(report.rows.size() == 20);
  for (const otk::ReportRow& r : report.rows) REQUIRE(r.success);
}

TEST_CASE("worker threads do not change the report", "[experiments]") {
  otk::ExperimentSpec spec = tiny_phase_spec();
  std::string serial = report_text(otk::run_success_frequency(spec));
  spec.threads = 4;
  std::string parallel = report_text(otk::run_success_frequency(spec));
  REQUIRE(serial == parallel);
}

TEST_CASE("config files round-trip", "[experiments]") {
  otk::ExperimentSpec spec = tiny_phase_spec();
  spec.qp.tolerance = 1e-7;
  spec.collect_timings = false;
  spec.success_threshold = 5e-3;

  std::string text = otk::experiment_spec_to_json(spec).dump(2);
  otk::ExperimentSpec back = otk::parse_experiment_config(text);

  REQUIRE(back.family == spec.family);
  REQUIRE(back.m == spec.m);
  REQUIRE(back.n == spec.n);
  REQUIRE(back.sparsity_grid == spec.sparsity_grid);
  REQUIRE(back.trials == spec.trials);
  REQUIRE(back.algorithms.size() == spec.algorithms.size());
  for (std::size_t i = 0; i < back.algorithms.size(); ++i)
    REQUIRE(otk::algorithm_label(back.algorithms[i]) ==
            otk::algorithm_label(spec.algorithms[i]));
  REQUIRE(back.noise.measurement_scale == spec.noise.measurement_scale);
  REQUIRE(back.noise.signal_scale == spec.noise.signal_scale);
  REQUIRE(back.master_seed == spec.master_seed);
  REQUIRE(back.success_threshold == spec.success_threshold);
  REQUIRE(back.qp.tolerance == spec.qp.tolerance);

  // Identical runs from the original and the round-tripped spec.
  REQUIRE(report_text(otk::run_success_frequency(spec)) ==
          report_text(otk::run_success_frequency(back)));
}

TEST_CASE("config parsing rejects malformed input", "[experiments]") {
  REQUIRE_THROWS_AS(otk::parse_experiment_config("{ not json"), otk::input_error);
  REQUIRE_THROWS_AS(otk::parse_experiment_config("{\"famly\": \"trajectory\"}"),
                    otk::input_error);
  REQUIRE_THROWS_WITH(
      otk::parse_experiment_config("{\"famly\": \"trajectory\"}"),
      Catch::Matchers::ContainsSubstring("famly"));
  REQUIRE_THROWS_AS(otk::parse_experiment_config("{\"family\": \"nope\"}"),
                    otk::input_error);
  REQUIRE_THROWS_AS(
      otk::parse_experiment_config("{\"qp\": {\"tol\": 1e-8}}"),
      otk::input_error);
  REQUIRE_THROWS_AS(
      otk::parse_experiment_config("{\"algorithms\": [\"OMP\"]}"),
      otk::input_error);
  REQUIRE_THROWS_AS(otk::parse_experiment_config("{\"m\": \"many\"}"),
                    otk::input_error);
}

TEST_CASE("config values override the provided base", "[experiments]") {
  otk::ExperimentSpec base = tiny_phase_spec();
  otk::ExperimentSpec out = otk::parse_experiment_config(
      "{\"trials\": 9, \"noise\": {\"signal_scale\": 0.002}}", base);
  REQUIRE(out.trials == 9);
  REQUIRE(out.noise.signal_scale == 0.002);
  // Untouched fields keep the base values.
  REQUIRE(out.m == base.m);
  REQUIRE(out.noise.measurement_scale == base.noise.measurement_scale);
  REQUIRE(out.family == base.family);
}

TEST_CASE("gnuplot companions reference the data", "[experiments]") {
  std::string phase = otk::gnuplot_report_script(
      "report.csv", otk::Family::success_frequency, {"IHT", "ROTP"});
  REQUIRE(phase.find("set datafile separator ','") != std::string::npos);
  REQUIRE(phase.find("smooth unique") != std::string::npos);
  REQUIRE(phase.find("'IHT'") != std::string::npos);
  REQUIRE(phase.find("'ROTP'") != std::string::npos);
  REQUIRE(phase.find("($5)") != std::string::npos);

  std::string ratio = otk::gnuplot_report_script(
      "report.csv", otk::Family::iterations_vs_ratio, {"ROTP2"});
  REQUIRE(ratio.find("($3/$4)") != std::string::npos);
  REQUIRE(ratio.find("mean iterations") != std::string::npos);

  std::string trace =
      otk::gnuplot_trace_script({{"IHT", "a.csv"}, {"HTP", "b.csv"}});
  REQUIRE(trace.find("set logscale y") != std::string::npos);
  REQUIRE(trace.find("'a.csv'") != std::string::npos);
  REQUIRE(trace.find("using 1:2") != std::string::npos);
}
