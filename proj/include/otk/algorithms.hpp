#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "otk/errors.hpp"
#include "otk/io.hpp"
#include "otk/model.hpp"
#include "otk/subsolvers.hpp"
#include "otk/thresholding.hpp"

namespace otk {

enum class Variant { iht, htp, ot, otp, rot, rotp, rotp2, rotp3 };

inline constexpr Variant kAllVariants[] = {
    Variant::iht, Variant::htp,   Variant::ot,    Variant::otp,
    Variant::rot, Variant::rotp, Variant::rotp2, Variant::rotp3};

inline std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::iht:
      return "IHT";
    case Variant::htp:
      return "HTP";
    case Variant::ot:
      return "OT";
    case Variant::otp:
      return "OTP";
    case Variant::rot:
      return "ROT";
    case Variant::rotp:
      return "ROTP";
    case Variant::rotp2:
      return "ROTP2";
    case Variant::rotp3:
      return "ROTP3";
  }
  throw input_error("variant_name: unknown variant");
}

inline Variant parse_variant(std::string_view name) {
  std::string up(name);
  for (char& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (Variant v : kAllVariants)
    if (up == variant_name(v)) return v;
  throw input_error("parse_variant: unknown algorithm '" + std::string(name) +
                    "' (expected one of IHT, HTP, OT, OTP, ROT, ROTP, ROTP2, ROTP3)");
}

struct AlgorithmConfig {
  Variant variant = Variant::iht;
  int max_iterations = 50;
  double residual_tolerance = 1e-8;
  QPSettings qp{};
  std::uint64_t ot_guard = 2'000'000;
  // Relative l2 recovery criterion, active only when run() is handed a
  // reference signal.
  double ground_truth_criterion = 1e-2;
  // Off by default so traces are bitwise reproducible.
  bool collect_timings = false;
};

inline void check_algorithm_config(const AlgorithmConfig& cfg) {
  if (cfg.max_iterations < 1)
    throw input_error("AlgorithmConfig: max_iterations must be >= 1");
  if (!(cfg.residual_tolerance >= 0.0))
    throw input_error("AlgorithmConfig: residual_tolerance must be >= 0");
  if (!(cfg.ground_truth_criterion >= 0.0))
    throw input_error("AlgorithmConfig: ground_truth_criterion must be >= 0");
  check_qp_settings(cfg.qp);
}

enum class StopReason {
  residual_tol,
  ground_truth_criterion,
  max_iterations,
  degenerate_input
};

inline std::string_view stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::residual_tol:
      return "residual_tol";
    case StopReason::ground_truth_criterion:
      return "ground_truth_criterion";
    case StopReason::max_iterations:
      return "max_iterations";
    case StopReason::degenerate_input:
      return "degenerate_input";
  }
  throw input_error("stop_reason_name: unknown reason");
}

struct IterateRecord {
  int iteration = 0;  // 0 is the starting point
  Vector iterate;
  double residual = 0.0;
  SupportSet support;
  std::optional<double> error;  // ||x^p - x_ref||_2, present iff a reference was given
  int inner_iterations = 0;
  bool tie = false;
  bool inner_converged = true;
  double wall_ms = 0.0;
};

struct IterateTrace {
  std::vector<IterateRecord> records;
  StopReason reason = StopReason::max_iterations;
  bool has_reference = false;
  double reference_norm = 0.0;
};

namespace detail {

struct StepResult {
  Vector x;
  int inner_iterations = 0;
  bool tie = false;
  bool inner_converged = true;
  bool degenerate = false;
};

inline StepResult iht_step_impl(const ProblemInstance& p, const Vector& x) {
  ThresholdResult t = hard_threshold(gradient_step(p, x), p.k);
  return {std::move(t.vector), 0, t.tie_flag, true, false};
}

inline StepResult htp_step_impl(const ProblemInstance& p, const Vector& x) {
  ThresholdResult t = hard_threshold(gradient_step(p, x), p.k);
  Vector ls = least_squares_on_support(p, t.support);
  return {std::move(ls), 0, t.tie_flag, true, false};
}

inline StepResult ot_step_impl(const ProblemInstance& p, const Vector& x,
                               std::uint64_t guard) {
  Vector u = gradient_step(p, x);
  if (u.isZero(0.0)) return {Vector::Zero(p.n()), 0, false, true, true};
  BinarySolution b = solve_binary_ot(p, u, guard);
  return {hadamard(u, b.indicator.bits), 0, false, true, false};
}

inline StepResult otp_step_impl(const ProblemInstance& p, const Vector& x,
                                std::uint64_t guard) {
  Vector u = gradient_step(p, x);
  if (u.isZero(0.0)) return {Vector::Zero(p.n()), 0, false, true, true};
  BinarySolution b = solve_binary_ot(p, u, guard);
  Vector selected = hadamard(u, b.indicator.bits);
  Vector ls = least_squares_on_support(p, support_of(selected));
  return {std::move(ls), 0, false, true, false};
}

// The optional carry holds one relaxation weight per compression stage,
// preserved across outer iterations. Successive outer iterates pose nearly
// identical inner QPs, so when the iteration-capped solver hands back a
// weight that is still short of its stationarity target, restarting the
// next QP from it resumes the descent instead of repeating it. Slots start
// empty and are consulted only once filled.
inline StepResult rot_step_impl(const ProblemInstance& p, const Vector& x,
                                const QPSettings& qp,
                                std::vector<Vector>* carry = nullptr) {
  Vector u = gradient_step(p, x);
  const Vector* warm = nullptr;
  if (carry) {
    carry->resize(1);
    if ((*carry)[0].size() == p.n()) warm = &(*carry)[0];
  }
  RelaxedWeight rw = solve_relaxed_ot(p, u, qp, warm);
  if (carry) (*carry)[0] = rw.w;
  if (rw.degenerate)
    return {Vector::Zero(p.n()), rw.iterations, false, rw.converged, true};
  ThresholdResult t = hard_threshold(hadamard(u, rw.w), p.k);
  return {std::move(t.vector), rw.iterations, t.tie_flag, rw.converged, false};
}

// Shared body of ROTP / ROTP2 / ROTP3: `compressions` sequential relaxed
// QPs, each over the vector produced by the previous one, then hard
// thresholding and least squares on the selected support.
inline StepResult rotp_multi_impl(const ProblemInstance& p, const Vector& x,
                                  const QPSettings& qp, int compressions,
                                  std::vector<Vector>* carry = nullptr) {
  Vector v = gradient_step(p, x);
  int inner = 0;
  bool converged = true;
  if (carry) carry->resize(static_cast<std::size_t>(compressions));
  for (int c = 0; c < compressions; ++c) {
    const Vector* warm = nullptr;
    if (carry && (*carry)[c].size() == p.n()) warm = &(*carry)[c];
    RelaxedWeight rw = solve_relaxed_ot(p, v, qp, warm);
    if (carry) (*carry)[c] = rw.w;
    inner += rw.iterations;
    converged = converged && rw.converged;
    if (rw.degenerate)
      return {Vector::Zero(p.n()), inner, false, converged, true};
    v = hadamard(v, rw.w);
  }
  ThresholdResult t = hard_threshold(v, p.k);
  Vector ls = least_squares_on_support(p, t.support);
  return {std::move(ls), inner, t.tie_flag, converged, false};
}

inline StepResult step(const ProblemInstance& p, const Vector& x,
                       const AlgorithmConfig& cfg,
                       std::vector<Vector>* carry = nullptr) {
  switch (cfg.variant) {
    case Variant::iht:
      return iht_step_impl(p, x);
    case Variant::htp:
      return htp_step_impl(p, x);
    case Variant::ot:
      return ot_step_impl(p, x, cfg.ot_guard);
    case Variant::otp:
      return otp_step_impl(p, x, cfg.ot_guard);
    case Variant::rot:
      return rot_step_impl(p, x, cfg.qp, carry);
    case Variant::rotp:
      return rotp_multi_impl(p, x, cfg.qp, 1, carry);
    case Variant::rotp2:
      return rotp_multi_impl(p, x, cfg.qp, 2, carry);
    case Variant::rotp3:
      return rotp_multi_impl(p, x, cfg.qp, 3, carry);
  }
  throw input_error("step: unknown variant");
}

}  // namespace detail

inline Vector iht_step(const ProblemInstance& p, const Vector& x) {
  return detail::iht_step_impl(p, x).x;
}

inline Vector htp_step(const ProblemInstance& p, const Vector& x) {
  return detail::htp_step_impl(p, x).x;
}

inline Vector ot_step(const ProblemInstance& p, const Vector& x,
                      std::uint64_t guard = 2'000'000) {
  return detail::ot_step_impl(p, x, guard).x;
}

inline Vector otp_step(const ProblemInstance& p, const Vector& x,
                       std::uint64_t guard = 2'000'000) {
  return detail::otp_step_impl(p, x, guard).x;
}

inline Vector rot_step(const ProblemInstance& p, const Vector& x,
                       const QPSettings& qp = {}) {
  return detail::rot_step_impl(p, x, qp).x;
}

inline Vector rotp_step(const ProblemInstance& p, const Vector& x,
                        const QPSettings& qp = {}) {
  return detail::rotp_multi_impl(p, x, qp, 1).x;
}

inline Vector rotp_multi_step(const ProblemInstance& p, const Vector& x,
                              const QPSettings& qp, int compressions) {
  if (compressions != 2 && compressions != 3)
    throw input_error("rotp_multi_step: compressions must be 2 or 3");
  return detail::rotp_multi_impl(p, x, qp, compressions).x;
}

struct RunResult {
  Vector x;
  IterateTrace trace;
};

// Outer iteration driver. Stopping criteria are checked in a fixed order
// after every iterate (the starting point included): the relative-error
// recovery criterion when a reference signal is supplied, then the
// residual tolerance, then the iteration cap. A degenerate compression
// (zero gradient-adjusted vector) ends the run immediately since every
// subsequent iterate would be the zero vector.
inline RunResult run(const ProblemInstance& p, const AlgorithmConfig& cfg,
                     const Vector& x0, const SparseSignal* reference = nullptr) {
  check_algorithm_config(cfg);
  if (x0.size() != p.n())
    throw input_error("run: x0 length does not match column count");

  IterateTrace trace;
  trace.has_reference = reference != nullptr;
  trace.reference_norm = reference ? reference->values.norm() : 0.0;

  auto record = [&](int iteration, const Vector& xi, double residual,
                    const detail::StepResult* s, double wall_ms) {
    IterateRecord r;
    r.iteration = iteration;
    r.iterate = xi;
    r.residual = residual;
    r.support = support_of(xi);
    if (reference) r.error = (xi - reference->values).norm();
    if (s) {
      r.inner_iterations = s->inner_iterations;
      r.tie = s->tie;
      r.inner_converged = s->inner_converged;
    }
    r.wall_ms = wall_ms;
    trace.records.push_back(std::move(r));
    return trace.records.back().error;
  };

  auto stop = [&](double residual,
                  const std::optional<double>& error) -> std::optional<StopReason> {
    if (error && *error <= cfg.ground_truth_criterion * trace.reference_norm)
      return StopReason::ground_truth_criterion;
    if (residual <= cfg.residual_tolerance) return StopReason::residual_tol;
    return std::nullopt;
  };

  Vector x = x0;
  double residual = residual_norm(p, x);
  if (auto reason = stop(residual, record(0, x, residual, nullptr, 0.0))) {
    trace.reason = *reason;
    return {std::move(x), std::move(trace)};
  }

  using Clock = std::chrono::steady_clock;
  std::vector<Vector> carry;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    Clock::time_point begin{};
    if (cfg.collect_timings) begin = Clock::now();
    detail::StepResult s = detail::step(p, x, cfg, &carry);
    double wall_ms = 0.0;
    if (cfg.collect_timings)
      wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - begin).count();

    x = std::move(s.x);
    residual = residual_norm(p, x);
    std::optional<double> error = record(it, x, residual, &s, wall_ms);
    if (s.degenerate) {
      trace.reason = StopReason::degenerate_input;
      return {std::move(x), std::move(trace)};
    }
    if (auto reason = stop(residual, error)) {
      trace.reason = *reason;
      return {std::move(x), std::move(trace)};
    }
  }
  trace.reason = StopReason::max_iterations;
  return {std::move(x), std::move(trace)};
}

inline RunResult run(const ProblemInstance& p, const AlgorithmConfig& cfg) {
  return run(p, cfg, Vector::Zero(p.n()));
}

inline void write_trace_csv(std::ostream& out, const IterateTrace& trace) {
  out << csv_row({"iteration", "residual", "support_size", "rel_error",
                  "inner_iters", "wall_ms"});
  for (const IterateRecord& r : trace.records) {
    std::string rel;
    if (r.error) rel = format_double(*r.error / trace.reference_norm);
    out << csv_row({std::to_string(r.iteration), format_double(r.residual),
                    std::to_string(r.support.size()), rel,
                    std::to_string(r.inner_iterations), format_double(r.wall_ms)});
  }
}

inline void write_trace_csv(const std::string& path, const IterateTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("write_trace_csv: cannot open '" + path + "'");
  write_trace_csv(out, trace);
  if (!out) throw input_error("write_trace_csv: write failed for '" + path + "'");
}

}  // namespace otk
