#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace strata {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;  // measured quantities behind the verdict
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::uint64_t seed = 0;
  int threads = 0;
  std::vector<int> only;  // criterion ids to run; empty runs all
};

constexpr int acceptance_criteria = 10;

// Runs the criteria in order; on_result sees each result as soon as it is known.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts = {},
                                            const std::function<void(const CriterionResult&)>& on_result = {});

// "[PASS] 3 name (1.2 s): detail"
std::string format_result(const CriterionResult& r);

}  // namespace strata
