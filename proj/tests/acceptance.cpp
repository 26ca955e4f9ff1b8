// Acceptance report: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (capped at 1 for ctest).

#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "lamp/verify.hpp"

namespace v = lamp::verify;

int main() {
  struct Criterion {
    int id;
    const char* title;
    double budget_s;  // 0 = no runtime bound
    std::function<v::CheckResult()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "DDIM / 1M equivalence", 1.0, [] { return v::ddim_one_m_equivalence(); }},
      {2, "PS decomposition at every step", 0.0, [] { return v::ps_decomposition(); }},
      {3, "LAMP triple-form agreement", 0.0, [] { return v::lamp_forms(1000); }},
      {4, "gamma=0 collapse and warm-up prefix", 0.0, [] { return v::gamma_zero_collapse(); }},
      {5, "operator dense oracles", 0.0, [] { return v::operator_oracles(); }},
      {6, "DiffPIR proximal optimality", 0.0, [] { return v::diffpir_optimality(); }},
      {7, "DDRM regimes", 0.0, [] { return v::ddrm_regimes_sweep(10000); }},
      {8, "variance reduction", 60.0, [] { return v::variance_reduction(100000); }},
      {9, "PS / LAMP risks", 0.0, [] { return v::risk_comparison(100000); }},
      {10, "end-to-end Gaussian oracle", 30.0, [] { return v::end_to_end_oracle(); }},
      {11, "NFE accounting", 0.0, [] { return v::nfe_accounting(); }},
      {12, "determinism", 0.0, [] { return v::determinism(); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const v::CheckResult r = c.check();
    const bool in_budget = c.budget_s == 0.0 || r.seconds < c.budget_s;
    const bool ok = r.pass && in_budget;
    if (!ok) ++failed;
    std::printf("%s  [%2d] %-38s max_dev=%.3g tol=%.3g time=%.2fs%s | %s\n", ok ? "PASS" : "FAIL", c.id,
                c.title, r.max_dev, r.tolerance, r.seconds,
                in_budget ? "" : " (over budget)", r.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
