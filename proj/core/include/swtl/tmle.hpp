#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "swtl/data.hpp"
#include "swtl/learners.hpp"

namespace swtl {

struct EstimatorConfig {
  std::vector<LearnerSpec> outcome_library;  // shared by q_y and q_int
  std::vector<LearnerSpec> gdelta_library;
  bool gdelta_omit_s = false;  // Block II scenario (ii): censoring model without S
  int folds = 10;              // V; 0 applies the small-J default rule
  int inner_folds = 5;         // V' for the ensemble's nested CV
  Family outcome_family = Family::gaussian;

  static EstimatorConfig minimal(Family outcome_family);
  static EstimatorConfig full(Family outcome_family);
};

struct OutcomeScale {
  double min = 0.0;
  double range = 1.0;
};

/// Min-max scaling of the observed outcomes to [0,1], then clipped to
/// [0.005, 0.995] so logits stay finite.  Throws on constant input.
std::pair<std::vector<double>, OutcomeScale> scale_outcome(std::span<const double> y);

/// Clever covariates at one observation: h_s = 1/g_A(A_obs), h_y = h_s/g_Delta.
struct CleverCovariates {
  double h_y = 0.0;
  double h_s = 0.0;
};
CleverCovariates clever_covariates(double g_a_obs, double g_delta_obs);

/// Design-propensity truncation bound 1/(2(T-1)) (the g_A floor/cap used
/// whenever g_A enters a denominator).
double design_propensity_floor(int T);

/// Initial nuisance values tabulated per observation, on the scaled-outcome
/// scale, after truncation/clipping.
struct NuisanceTable {
  OutcomeScale scale;
  Eigen::VectorXd y_scaled;              // 0 where delta = 0 (never read there)
  Eigen::VectorXd qy_obs, qy1, qy0;      // clipped to [0.005, 0.995]
  Eigen::VectorXd qint1, qint0;          // clipped
  Eigen::VectorXd gd_obs, gd1, gd0;      // truncated
  Eigen::VectorXd ga1;                   // truncated design propensity P(A=1|t)
  TruncationBounds gd_bounds;
  double gd_trunc_fraction = 0.0;
};

struct FluctuationResult {
  // cumulative fluctuation parameters per arm (index 1 = treated, 0 = control)
  std::array<double, 2> eps_y{0.0, 0.0};
  std::array<double, 2> eps_s{0.0, 0.0};
  int iterations = 0;
  bool converged = true;
  double score_residual = 0.0;  // mean cluster EIC after targeting (scaled scale)
};

struct EicResult {
  Eigen::VectorXd d_star;             // per observation
  std::map<int, double> by_cluster;   // (J/N)-scaled cluster sums
  double mean = 0.0;                  // (1/J) sum of by_cluster = mean d_star
};

/// Per-observation efficient influence contributions and their cluster
/// aggregation.  Indicator-gated terms are exactly zero when the arm
/// indicator is zero, regardless of denominators.
EicResult eic(const std::vector<int>& cluster_of_row, const std::vector<int>& a,
              const std::vector<int>& delta, const Eigen::VectorXd& y,
              const Eigen::VectorXd& qy_star_obs, const Eigen::VectorXd& qy_star1,
              const Eigen::VectorXd& qy_star0, const Eigen::VectorXd& qint_star1,
              const Eigen::VectorXd& qint_star0, const Eigen::VectorXd& gd_obs,
              const Eigen::VectorXd& ga1, double psi1, double psi0);

/// Cluster-robust sandwich: [J(J-1)]^-1 sum_j (EIC_j - mean)^2.
double sandwich_variance(std::span<const double> eic_by_cluster);

struct TmleFit {
  double psi_hat = 0.0;  // original outcome units
  double psi1 = 0.0;
  double psi0 = 0.0;
  double var_sandwich = 0.0;
  std::map<int, double> eic_by_cluster;  // original outcome units
  FluctuationResult fluctuation;
  double score_residual = 0.0;  // original units
  int n_iter = 0;
  double gd_trunc_fraction = 0.0;
  // CV-TMLE extras (empty for the non-CV estimator)
  FoldPlan fold_plan;
  std::vector<std::array<double, 4>> fold_eps;  // per fold: eps_y1, eps_y0, eps_s1, eps_s0
  std::vector<std::string> warnings;
};

/// The surrogate-assisted TMLE on the full sample: Super Learner nuisances,
/// design-plug-in g_A, two-stage nested fluctuation, point estimate,
/// cluster EIC and sandwich variance.
TmleFit sa_tmle(const TrialDataset& data, const EstimatorConfig& config, Rng rng);

/// Plug-in G-computation estimate (no targeting): fit q_y and q_int, average
/// the counterfactual contrast.
double gcomp_estimate(const TrialDataset& data, const EstimatorConfig& config, Rng rng);

}  // namespace swtl
