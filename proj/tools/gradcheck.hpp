#pragma once

#include <cstdint>
#include <ostream>

namespace dpne::tool {

struct GradcheckOptions {
  std::uint64_t seed = 0;
  int network_trials = 10;
  int dp_trials = 100;
  double tolerance = 1e-6;
  int dp_required = 95;
};

struct GradcheckReport {
  double rec = 0.0;
  double nonneg = 0.0;
  double decay = 0.0;
  double sparsity = 0.0;
  int dp_aligned = 0;
  int dp_descent = 0;
  int printed_aligned = 0;
  int dp_trials = 0;

  bool passed(const GradcheckOptions& o) const;
};

GradcheckReport run_gradcheck(const GradcheckOptions& options);

void print_report(std::ostream& out, const GradcheckReport& report, const GradcheckOptions& options);

}  // namespace dpne::tool
