#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "swtl/comparators.hpp"
#include "swtl/dgp.hpp"
#include "swtl/metrics.hpp"

namespace swtl {

enum class Block { I, II, III, IV, EPT };
enum class EstimatorKind { cvtmle, satmle, glmm, ipcw };

std::string to_string(Block b);
std::string to_string(EstimatorKind e);
std::string to_string(VarianceSource v);
Block block_from_string(const std::string& s);
EstimatorKind estimator_from_string(const std::string& s);
VarianceSource variance_source_from_string(const std::string& s);

struct BlockSpec {
  Block block = Block::I;
  std::vector<int> J_values{30};
  std::vector<int> grace_values{0, 1, 2, 3};          // Block III grid
  std::vector<double> sigma_b2_values{0.006, 0.034, 0.071, 0.160};  // Block IV grid
  std::string scenario;  // Block II: "i", "ii" or "iii"
  int replicates = 300;
  std::vector<EstimatorKind> estimators{EstimatorKind::cvtmle, EstimatorKind::glmm,
                                        EstimatorKind::ipcw};
  std::vector<VarianceSource> variance_sources{VarianceSource::sandwich,
                                               VarianceSource::jackknife};
  std::uint64_t seed = 0;
  std::string library = "minimal";  // or "full"
  std::vector<LearnerSpec> custom_learners;  // overrides the library tag when non-empty
  int folds = 10;
  int inner_folds = 5;
  double alpha = 0.05;
  double psi0 = -0.28;
  int n_j = 40;
  int T = 7;

  void validate() const;
};

struct ReplicateRecord {
  std::string block;
  std::string scenario;
  int J = 0;
  int grace = -1;
  double sigma_b2 = 0.0;
  int rep = 0;
  std::string estimator;
  double estimate = 0.0;
  double var_sandwich = 0.0;   // the estimator's primary analytic variance
  double var_jackknife = 0.0;  // NaN when not run
  double ci_low = 0.0;
  double ci_high = 0.0;
  int covered = 0;
  int rejected = 0;
  int failed = 0;
};

struct BlockResult {
  std::vector<ReplicateRecord> records;
  std::vector<MetricsRow> metrics;
};

/// Runs every grid cell and replicate of the spec; parallel over replicates
/// (capped by SWTL_THREADS) with a deterministic ordered reduction, so output
/// is byte-identical regardless of thread count.  A per-estimator failure
/// rate above 2% fails the run.
BlockResult run_block(const BlockSpec& spec);

/// One-dataset EPT oracle comparison (Table-4 structure).
struct EptRow {
  std::string estimator;
  double estimate = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool covers_oracle = false;
};
struct EptResult {
  double oracle = 0.0;
  std::vector<EptRow> rows;  // glmm, satmle (cv), ipcw
};
EptResult run_ept(std::uint64_t seed, const std::string& library = "minimal");

void write_records_csv(const std::vector<ReplicateRecord>& records, const std::string& path);
void write_metrics_csv(const std::vector<MetricsRow>& metrics, const std::string& path);

/// Thread cap: SWTL_THREADS when set, else hardware concurrency.
int thread_cap();

/// Runs tasks 0..n-1 on up to `threads` workers; tasks must write to
/// disjoint slots.  Rethrows the first task exception.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& task);

}  // namespace swtl
