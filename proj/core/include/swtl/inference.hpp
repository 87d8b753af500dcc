#pragma once

#include <optional>
#include <vector>

#include "swtl/cvtmle.hpp"
#include "swtl/tmle.hpp"

namespace swtl {

enum class VarianceSource { sandwich, jackknife };

struct IntervalEstimate {
  double center = 0.0;
  double half_width = 0.0;
  double level = 0.95;
  double df = std::numeric_limits<double>::infinity();
  VarianceSource source = VarianceSource::sandwich;

  double lower() const { return center - half_width; }
  double upper() const { return center + half_width; }
  bool contains(double x) const { return x >= lower() && x <= upper(); }
};

/// t interval with J-1 degrees of freedom.
IntervalEstimate t_interval(double psi_hat, double variance, int J, double alpha,
                            VarianceSource source = VarianceSource::sandwich);

/// Large-sample z interval.
IntervalEstimate z_interval(double psi_hat, double variance, double alpha,
                            VarianceSource source = VarianceSource::sandwich);

enum class TmleKind { sa, cv };

struct JackknifeResult {
  double variance = 0.0;
  IntervalEstimate interval;
  std::vector<int> deleted_cluster;
  std::vector<double> deletion_estimates;
};

/// Leave-one-cluster-out jackknife of the full estimator (nuisances and both
/// fluctuation steps refit per deletion; CV variant draws a fresh fold plan
/// per deletion from a deterministic sub-stream).  The interval is centered
/// at the full-sample estimate, which is computed when not supplied.
JackknifeResult jackknife(const TrialDataset& data, TmleKind kind, const EstimatorConfig& config,
                          Rng rng, double alpha = 0.05,
                          std::optional<double> center = std::nullopt);

struct CoverageBoundParams {
  int J = 2;
  double kappa = 0.0;
  double sigma = 1.0;
  double rho3 = 0.0;
  double gamma = 1.0;
  double c_f = 0.0;
  double alpha = 0.05;
};

struct CoverageBound {
  double lambda_be = 0.0;   // C_BE rho3 / sigma^3
  double lambda_t = 0.0;    // phi(z) z (z^2+1) / 2
  double lambda_v = 0.0;    // 4 kappa^2
  double be_term = 0.0;
  double t_term = 0.0;      // entered with a minus sign
  double v_term = 0.0;
  double remainder_term = 0.0;
  double total = 0.0;
};

constexpr double kBerryEsseenConstant = 0.4748;

/// Four-term finite-sample coverage bound
///   lambda_BE/sqrt(J) - lambda_t/(J-1) + lambda_V/sqrt(J-1) + c_F sqrt(J)/(J^gamma sigma).
CoverageBound be_bound(const CoverageBoundParams& params);

/// Minimum clusters for guaranteed coverage: ceil((C_BE k + 2k)^2 / eps^2),
/// floored at 2.
int j_min(double kappa, double epsilon);

struct SensitivityResult {
  double gamma_star = 0.0;
  bool gamma_star_defined = false;
  double slope = 0.0;  // bias(gamma) = gamma * slope
  double mar_coefficient = 0.0;
  double mar_se = 0.0;
  bool mar_aliased = false;

  double bias_at(double gamma) const { return gamma * slope; }
};

/// Tipping point under a constant MAR-violation gamma:
/// slope c = N^-1 sum (1-gd)/gd (1(A=1) - 1(A=0)); gamma* = psi_hat / c.
SensitivityResult tipping_point(const TrialDataset& data, double psi_hat,
                                const Eigen::VectorXd& gd_obs);

/// Augmented-regression MAR diagnostic: coefficient on
/// r = P(Delta=1|A,W,t) / P(Delta=1|S,A,W,t) in the complete-case outcome
/// regression, with a cluster-robust standard error.
SensitivityResult mar_diagnostic(const TrialDataset& data, const EstimatorConfig& config, Rng rng);

}  // namespace swtl
