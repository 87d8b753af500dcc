#pragma once

#include <cstdint>

#include "swtl/data.hpp"
#include "swtl/rng.hpp"

namespace swtl {

enum class OutcomeFamily { gaussian, bernoulli };

/// Named coefficients of the surrogate equation
///   S = a*A + w1*W1 + w2*W2 + lambda*lam(t) + b*b_j + Normal(0, sd^2).
struct SurrogateCoefs {
  double a = 0.8;
  double w1 = 0.4;
  double w2 = -0.3;
  double lambda = 0.5;
  double b = 0.6;
  double sd = 0.5;
};

/// Named coefficients of the observation-indicator logit
///   logit P(Delta=1) = intercept + late1*1(t>=T-1) + late2*1(t=T)
///                      + s*S + a*A + w3*W3 + y*Y.
/// The y term is 0 under surrogate-mediated MAR; setting it nonzero builds
/// the MAR-violated variant used by the sensitivity diagnostics.
struct CensoringCoefs {
  double intercept = 3.0;
  double late1 = -2.5;
  double late2 = -0.8;
  double s = 0.4;
  double a = 0.3;
  double w3 = -0.2;
  double y = 0.0;
};

/// Named coefficients of the outcome equation
///   Y = psi0*A + s*S + w1*W1 + w2*W2 + w3*W3 + lambda*lam(t) + b_j + Normal(0, sd^2).
struct OutcomeCoefs {
  double s = 0.5;
  double w1 = 0.4;
  double w2 = -0.2;
  double w3 = 0.6;
  double lambda = 0.8;
  double sd = 0.8;
};

struct DgpConfig {
  int J = 30;
  int T = 7;
  int n_j = 40;
  double psi0 = -0.28;
  double sigma_b2 = 0.034;
  int t_lag = 2;
  int t_grace = 1;
  OutcomeFamily outcome_family = OutcomeFamily::gaussian;
  SurrogateCoefs s_coefs;
  CensoringCoefs delta_coefs;
  OutcomeCoefs y_coefs;
  std::uint64_t seed = 0;

  void validate() const;
  std::uint64_t hash() const;

  /// Block I/II baseline at a given cluster count.
  static DgpConfig baseline(int J, std::uint64_t seed);
  /// Block III variant: t_lag = 3, grace in {0,1,2,3}.
  static DgpConfig block3(int grace, std::uint64_t seed);
  /// Block IV variant: baseline with sigma_b2 swept.
  static DgpConfig block4(double sigma_b2, std::uint64_t seed);
};

/// Non-linear secular trend lambda(t) = 0.5 sin(pi (t-1)/(T-1)) + 0.3 ((t-1)/(T-1))^2.
double secular_trend(int t, int T);

/// True ATE of a config: psi0 + (Y coef on S) x (S coef on A).
double true_ate(const DgpConfig& config);

TrialDataset simulate_trial(const DgpConfig& config);

/// Design-calibrated EPT preset: J=23, T=5, waves (6,6,6,5), 162 records per
/// cluster-period, binary surrogate and outcome, oracle ATE -0.0039.
TrialDataset ept_dataset(std::uint64_t seed);

/// EPT preset constants, calibrated offline against the four targets
/// (control positivity 5.0%, marginal risk ratio 0.90, wave-4 censoring
/// 86.5%, overall censoring 33.7%) and frozen here.  ept_true_ate_mc
/// re-verifies the stored oracle by Monte Carlo integration.
namespace ept {
constexpr int kJ = 23;
constexpr int kT = 5;
constexpr int kPerCluster = 162;
constexpr int kWaveSizes[4] = {6, 6, 6, 5};  // crossing at tau = 2,3,4,5
constexpr double kSigmaB = 0.15;
constexpr double kS0 = -1.5163474894;  // logit(0.18)
constexpr double kSA = 0.85;
constexpr double kSW1 = 0.30;
constexpr double kSB = 0.40;
constexpr double kY0 = -2.937920;
constexpr double kYTrend = -0.532;
constexpr double kYS = -0.25;
constexpr double kYA = -0.071174;
constexpr double kYW1 = 0.25;
constexpr double kD0 = 1.797137;
constexpr double kDW4 = -3.725061;
constexpr double kDW3 = -1.477228;
constexpr double kDS = 0.30;
constexpr double kOracleAte = -0.0039;
}  // namespace ept

/// Monte Carlo integration of the EPT preset's true ATE (probability
/// contrast with the binary surrogate integrated exactly per draw).
double ept_true_ate_mc(std::size_t draws, std::uint64_t seed);

}  // namespace swtl
