#pragma once

#include <string>
#include <vector>

#include "swtl/inference.hpp"

namespace swtl {

struct MetricsRow {
  std::string block;
  std::string scenario;
  int J = 0;
  int grace = -1;          // -1 when not applicable
  double sigma_b2 = 0.0;
  std::string estimator;
  std::string variance_source;
  int replicates = 0;
  double bias = 0.0;
  double variance = 0.0;
  double rmse = 0.0;
  double coverage = 0.0;
  double power = 0.0;
  double mean_var_sandwich = 0.0;
  double mean_var_jackknife = 0.0;  // NaN when the jackknife was not run
  double mc_se_coverage = 0.0;
  double mc_se_bias = 0.0;
  int failures = 0;
};

/// Monte Carlo summary over replicates: bias, sample variance, rmse from
/// the moment identity, interval coverage of the truth and rejection of 0.
MetricsRow compute_metrics(const std::vector<double>& estimates,
                           const std::vector<IntervalEstimate>& intervals, double truth);

}  // namespace swtl
