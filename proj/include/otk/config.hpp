#pragma once

#include <string>
#include <utility>

#include "json.hpp"

#include "otk/errors.hpp"
#include "otk/experiments.hpp"

namespace otk {

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj,
                                std::initializer_list<const char*> allowed,
                                const std::string& where) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known)
      throw input_error("config: unknown key '" + item.key() + "' in " + where);
  }
}

}  // namespace detail

inline ExperimentSpec experiment_spec_from_json(const nlohmann::json& j,
                                                ExperimentSpec base = {}) {
  if (!j.is_object()) throw input_error("config: top level must be an object");
  detail::reject_unknown_keys(
      j,
      {"family", "m", "n", "beta_grid", "sparsity_grid", "trials", "algorithms",
       "noise", "master_seed", "success_threshold", "max_iterations",
       "residual_tolerance", "qp", "ot_guard", "collect_timings", "threads"},
      "the top-level object");

  ExperimentSpec spec = std::move(base);
  try {
    if (j.contains("family")) spec.family = parse_family(j["family"].get<std::string>());
    if (j.contains("m")) spec.m = j["m"].get<int>();
    if (j.contains("n")) spec.n = j["n"].get<int>();
    if (j.contains("beta_grid"))
      spec.beta_grid = j["beta_grid"].get<std::vector<double>>();
    if (j.contains("sparsity_grid"))
      spec.sparsity_grid = j["sparsity_grid"].get<std::vector<int>>();
    if (j.contains("trials")) spec.trials = j["trials"].get<int>();
    if (j.contains("algorithms")) {
      spec.algorithms.clear();
      for (const auto& name : j["algorithms"])
        spec.algorithms.push_back(parse_algorithm(name.get<std::string>()));
    }
    if (j.contains("noise")) {
      const nlohmann::json& noise = j["noise"];
      if (!noise.is_object())
        throw input_error("config: 'noise' must be an object");
      detail::reject_unknown_keys(noise, {"measurement_scale", "signal_scale"},
                                  "'noise'");
      if (noise.contains("measurement_scale"))
        spec.noise.measurement_scale = noise["measurement_scale"].get<double>();
      if (noise.contains("signal_scale"))
        spec.noise.signal_scale = noise["signal_scale"].get<double>();
    }
    if (j.contains("master_seed"))
      spec.master_seed = j["master_seed"].get<std::uint64_t>();
    if (j.contains("success_threshold"))
      spec.success_threshold = j["success_threshold"].get<double>();
    if (j.contains("max_iterations"))
      spec.max_iterations = j["max_iterations"].get<int>();
    if (j.contains("residual_tolerance"))
      spec.residual_tolerance = j["residual_tolerance"].get<double>();
    if (j.contains("qp")) {
      const nlohmann::json& qp = j["qp"];
      if (!qp.is_object()) throw input_error("config: 'qp' must be an object");
      detail::reject_unknown_keys(
          qp, {"tolerance", "max_inner_iterations", "acceleration"}, "'qp'");
      if (qp.contains("tolerance"))
        spec.qp.tolerance = qp["tolerance"].get<double>();
      if (qp.contains("max_inner_iterations"))
        spec.qp.max_inner_iterations = qp["max_inner_iterations"].get<int>();
      if (qp.contains("acceleration"))
        spec.qp.acceleration = qp["acceleration"].get<bool>();
    }
    if (j.contains("ot_guard"))
      spec.ot_guard = j["ot_guard"].get<std::uint64_t>();
    if (j.contains("collect_timings"))
      spec.collect_timings = j["collect_timings"].get<bool>();
    if (j.contains("threads")) spec.threads = j["threads"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("config: ") + e.what());
  }
  return spec;
}

inline ExperimentSpec parse_experiment_config(const std::string& text,
                                              ExperimentSpec base = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("config: invalid JSON: ") + e.what());
  }
  return experiment_spec_from_json(j, std::move(base));
}

inline nlohmann::json experiment_spec_to_json(const ExperimentSpec& spec) {
  nlohmann::json j;
  j["family"] = std::string(family_name(spec.family));
  j["m"] = spec.m;
  j["n"] = spec.n;
  j["beta_grid"] = spec.beta_grid;
  j["sparsity_grid"] = spec.sparsity_grid;
  j["trials"] = spec.trials;
  std::vector<std::string> names;
  names.reserve(spec.algorithms.size());
  for (const AlgorithmChoice& a : spec.algorithms) names.push_back(algorithm_label(a));
  j["algorithms"] = names;
  j["noise"] = {{"measurement_scale", spec.noise.measurement_scale},
                {"signal_scale", spec.noise.signal_scale}};
  j["master_seed"] = spec.master_seed;
  j["success_threshold"] = spec.success_threshold;
  j["max_iterations"] = spec.max_iterations;
  j["residual_tolerance"] = spec.residual_tolerance;
  j["qp"] = {{"tolerance", spec.qp.tolerance},
             {"max_inner_iterations", spec.qp.max_inner_iterations},
             {"acceleration", spec.qp.acceleration}};
  j["ot_guard"] = spec.ot_guard;
  j["collect_timings"] = spec.collect_timings;
  j["threads"] = spec.threads;
  return j;
}

}  // namespace otk
