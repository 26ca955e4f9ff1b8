#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "lamp/schedule.hpp"

namespace lamp::verify {

struct CheckResult {
  std::string name;
  bool pass = false;
  double max_dev = 0.0;   // worst observed deviation (or ratio, see detail)
  double tolerance = 0.0;
  std::string detail;
  double seconds = 0.0;
};

struct Options {
  std::size_t risk_trials = 100000;
  /// Schedule the schedule suite inspects; the default linear schedule if null.
  std::shared_ptr<const Schedule> schedule;
};

// Acceptance checks, one per criterion.
CheckResult ddim_one_m_equivalence();
CheckResult ps_decomposition();
CheckResult lamp_forms(std::size_t cases = 1000);
CheckResult gamma_zero_collapse();
CheckResult operator_oracles();
CheckResult diffpir_optimality();
CheckResult ddrm_regimes_sweep(std::size_t cases = 10000);
CheckResult variance_reduction(std::size_t n_trials = 100000);
CheckResult risk_comparison(std::size_t n_trials = 100000);
CheckResult end_to_end_oracle();
CheckResult nfe_accounting();
CheckResult determinism();

// Module invariant suites.
CheckResult schedule_suite(const Schedule& schedule);
CheckResult linops_suite();
CheckResult priors_suite();
CheckResult corrections_suite();
CheckResult samplers_suite();
CheckResult risk_suite(std::size_t n_trials);
CheckResult imaging_suite();

/// Runs every suite; max PS-decomposition deviation is tracked across all
/// sampler runs performed.
std::vector<CheckResult> run_all(const Options& opts = {});

void print_report(std::ostream& os, const std::vector<CheckResult>& results);
bool all_passed(const std::vector<CheckResult>& results);

}  // namespace lamp::verify
