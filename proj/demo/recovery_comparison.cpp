// Small random benchmark: success frequencies of the thresholding family
// and the l1 baseline on noisy 40x80 instances at two sparsity levels.
// Uses the same deterministic harness as the CLI, so rerunning prints
// identical numbers.

#include <iostream>
#include <map>

#include "otk/otk.hpp"

int main() {
  otk::ExperimentSpec spec;
  spec.family = otk::Family::success_frequency;
  spec.m = 40;
  spec.n = 80;
  spec.sparsity_grid = {4, 8, 12};
  spec.trials = 5;
  spec.noise.measurement_scale = 0.01;
  spec.master_seed = 11;
  for (const char* name : {"IHT", "HTP", "L1", "ROTP", "ROTP2"})
    spec.algorithms.push_back(otk::parse_algorithm(name));

  otk::ExperimentReport report = otk::run_success_frequency(spec);

  std::map<std::string, std::map<int, int>> successes;
  for (const otk::ReportRow& row : report.rows)
    successes[row.algorithm][row.k] += row.success ? 1 : 0;

  std::cout << "success counts out of " << spec.trials
            << " noisy 40x80 trials\n\n";
  std::cout << "algorithm";
  for (int k : spec.sparsity_grid) std::cout << "\tk=" << k;
  std::cout << "\n";
  for (const auto& [algorithm, by_k] : successes) {
    std::cout << algorithm;
    for (int k : spec.sparsity_grid) {
      auto it = by_k.find(k);
      std::cout << "\t" << (it == by_k.end() ? 0 : it->second) << "/"
                << spec.trials;
    }
    std::cout << "\n";
  }
  return 0;
}
