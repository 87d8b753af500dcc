#include "swtl/metrics.hpp"

#include <cmath>

#include "swtl/stats.hpp"

namespace swtl {

MetricsRow compute_metrics(const std::vector<double>& estimates,
                           const std::vector<IntervalEstimate>& intervals, double truth) {
  if (estimates.size() < 2) throw DomainError("compute_metrics: need at least 2 replicates");
  if (intervals.size() != estimates.size()) {
    throw DomainError("compute_metrics: estimates/intervals length mismatch");
  }
  MetricsRow row;
  row.replicates = static_cast<int>(estimates.size());
  const double r = static_cast<double>(estimates.size());
  row.bias = mean(estimates) - truth;
  row.variance = sample_variance(estimates);
  row.rmse = std::sqrt(row.bias * row.bias + row.variance);
  int covered = 0, rejected = 0;
  for (const auto& ci : intervals) {
    covered += ci.contains(truth) ? 1 : 0;
    rejected += ci.contains(0.0) ? 0 : 1;
  }
  row.coverage = static_cast<double>(covered) / r;
  row.power = static_cast<double>(rejected) / r;
  row.mc_se_coverage = std::sqrt(row.coverage * (1.0 - row.coverage) / r);
  row.mc_se_bias = std::sqrt(row.variance / r);
  return row;
}

}  // namespace swtl
