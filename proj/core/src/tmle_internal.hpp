#pragma once

// Shared machinery between the full-sample and cross-validated TMLE paths.

#include <Eigen/Dense>
#include <vector>

#include "swtl/data.hpp"
#include "swtl/learners.hpp"
#include "swtl/tmle.hpp"

namespace swtl::detail {

struct Rows {
  std::vector<int> a;
  std::vector<int> delta;
  std::vector<int> cluster;
  std::vector<int> period;
  Eigen::VectorXd y_raw;
  std::vector<int> all;  // 0..n-1
  std::vector<int> obs;  // delta == 1
  std::vector<int> clusters;
  int T = 0;
  int n = 0;

  static Rows build(const TrialDataset& data);
};

/// Scaled outcome over all rows (0 where censored) plus the scale record.
std::pair<Eigen::VectorXd, OutcomeScale> scale_outcome_rows(const Rows& rows);

/// Truncated design propensity P(A=1 | t) per row.
Eigen::VectorXd design_ga1(const TrialDataset& data, const Rows& rows);

inline double clip_unit(double p) { return p < 0.005 ? 0.005 : (p > 0.995 ? 0.995 : p); }

struct FoldNuisance {
  // predictions at the requested rows (vectors aligned with those rows)
  Eigen::VectorXd qy_obs, qy1, qy0;
  Eigen::VectorXd qint1, qint0;
  Eigen::VectorXd gd_obs, gd1, gd0;
  TruncationBounds gd_bounds;
};

/// Train the three nuisance ensembles on the given clusters and predict at
/// predict_rows.  Gram caches (built over all clusters once per call site)
/// provide the gaussian fast path; pass nullptr to skip.
FoldNuisance fit_and_predict_nuisances(const MasterMatrix& mm, const Rows& rows,
                                       const Eigen::VectorXd& y_scaled,
                                       const EstimatorConfig& config,
                                       const std::vector<int>& train_clusters,
                                       const std::vector<int>& predict_rows,
                                       const ClusterGramX* gram_qy, const ClusterGramX* gram_qint,
                                       Rng rng);

struct TargetedState {
  // full-length vectors; entries outside the active rows stay untouched
  Eigen::VectorXd qy1, qy0, qint1, qint0;
  Eigen::VectorXd gd_obs, gd1, gd0;  // fixed during fluctuation
};

/// One pass of the two-stage nested fluctuation restricted to member_rows.
/// Offsets are the current targeted values, so passes compose.  Returns
/// cumulative updates into eps (y1, y0, s1, s0 order).
void fluctuation_pass(const Rows& rows, const Eigen::VectorXd& y_scaled,
                      const Eigen::VectorXd& ga1, const std::vector<int>& member_rows,
                      TargetedState& state, std::array<double, 4>& eps);

}  // namespace swtl::detail
