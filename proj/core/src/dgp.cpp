#include "swtl/dgp.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "swtl/stats.hpp"

namespace swtl {

namespace {
constexpr double kPi = 3.14159265358979323846;

std::uint64_t hash_combine(std::uint64_t h, double v) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(v));
  __builtin_memcpy(&bits, &v, sizeof(bits));
  h ^= bits + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  return h;
}
}  // namespace

void DgpConfig::validate() const {
  if (J < 2) throw DomainError("DgpConfig: J >= 2 required");
  if (T < 2) throw DomainError("DgpConfig: T >= 2 required");
  if (n_j < 1) throw DomainError("DgpConfig: n_j >= 1 required");
  if (sigma_b2 < 0.0) throw DomainError("DgpConfig: sigma_b2 >= 0 required");
  if (t_lag < 0) throw DomainError("DgpConfig: t_lag >= 0 required");
  if (t_grace < 0) throw DomainError("DgpConfig: t_grace >= 0 required");
  const double coefs[] = {psi0,
                          sigma_b2,
                          s_coefs.a,
                          s_coefs.w1,
                          s_coefs.w2,
                          s_coefs.lambda,
                          s_coefs.b,
                          s_coefs.sd,
                          delta_coefs.intercept,
                          delta_coefs.late1,
                          delta_coefs.late2,
                          delta_coefs.s,
                          delta_coefs.a,
                          delta_coefs.w3,
                          delta_coefs.y,
                          y_coefs.s,
                          y_coefs.w1,
                          y_coefs.w2,
                          y_coefs.w3,
                          y_coefs.lambda,
                          y_coefs.sd};
  for (double c : coefs) {
    if (!std::isfinite(c)) throw DomainError("DgpConfig: non-finite coefficient");
  }
}

std::uint64_t DgpConfig::hash() const {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  h = hash_combine(h, J);
  h = hash_combine(h, T);
  h = hash_combine(h, n_j);
  h = hash_combine(h, psi0);
  h = hash_combine(h, sigma_b2);
  h = hash_combine(h, t_lag);
  h = hash_combine(h, t_grace);
  h = hash_combine(h, static_cast<double>(outcome_family == OutcomeFamily::gaussian ? 0 : 1));
  h = hash_combine(h, s_coefs.a);
  h = hash_combine(h, s_coefs.w1);
  h = hash_combine(h, s_coefs.w2);
  h = hash_combine(h, s_coefs.lambda);
  h = hash_combine(h, s_coefs.b);
  h = hash_combine(h, s_coefs.sd);
  h = hash_combine(h, delta_coefs.intercept);
  h = hash_combine(h, delta_coefs.late1);
  h = hash_combine(h, delta_coefs.late2);
  h = hash_combine(h, delta_coefs.s);
  h = hash_combine(h, delta_coefs.a);
  h = hash_combine(h, delta_coefs.w3);
  h = hash_combine(h, delta_coefs.y);
  h = hash_combine(h, y_coefs.s);
  h = hash_combine(h, y_coefs.w1);
  h = hash_combine(h, y_coefs.w2);
  h = hash_combine(h, y_coefs.w3);
  h = hash_combine(h, y_coefs.lambda);
  h = hash_combine(h, y_coefs.sd);
  return h;
}

DgpConfig DgpConfig::baseline(int J, std::uint64_t seed) {
  DgpConfig c;
  c.J = J;
  c.seed = seed;
  return c;
}

DgpConfig DgpConfig::block3(int grace, std::uint64_t seed) {
  DgpConfig c;
  c.t_lag = 3;
  c.t_grace = grace;
  c.seed = seed;
  return c;
}

DgpConfig DgpConfig::block4(double sigma_b2, std::uint64_t seed) {
  DgpConfig c;
  c.sigma_b2 = sigma_b2;
  c.seed = seed;
  return c;
}

double secular_trend(int t, int T) {
  if (T < 2) throw DomainError("secular_trend: T >= 2 required");
  if (t < 1 || t > T) throw DomainError("secular_trend: t out of range");
  const double frac = static_cast<double>(t - 1) / static_cast<double>(T - 1);
  return 0.5 * std::sin(kPi * frac) + 0.3 * frac * frac;
}

double true_ate(const DgpConfig& config) { return config.psi0 + config.y_coefs.s * config.s_coefs.a; }

TrialDataset simulate_trial(const DgpConfig& config) {
  config.validate();
  TrialDataset data;
  data.num_periods = config.T;
  data.design = DesignLaw::uniform_crossover;
  data.observations.reserve(static_cast<std::size_t>(config.J) * config.T * config.n_j);

  const Rng master(config.seed);
  for (int j = 1; j <= config.J; ++j) {
    // one stream per cluster, so output does not depend on generation order
    Rng rc = master.fork("cluster", static_cast<std::uint64_t>(j));
    const int tau = static_cast<int>(rc.uniform_int(2, config.T));
    const double b = rc.normal(0.0, std::sqrt(config.sigma_b2));
    data.crossover_times[j] = tau;
    for (int t = 1; t <= config.T; ++t) {
      const int a = t >= tau ? 1 : 0;
      const double lam = secular_trend(t, config.T);
      for (int i = 0; i < config.n_j; ++i) {
        Observation o;
        o.cluster_id = j;
        o.period = t;
        o.a = a;
        o.w1 = rc.normal();
        o.w2 = rc.bernoulli(0.4) ? 1.0 : 0.0;
        o.w3 = rc.uniform();
        o.s = config.s_coefs.a * a + config.s_coefs.w1 * o.w1 + config.s_coefs.w2 * o.w2 +
              config.s_coefs.lambda * lam + config.s_coefs.b * b + rc.normal(0.0, config.s_coefs.sd);
        const double y_lin = config.psi0 * a + config.y_coefs.s * o.s + config.y_coefs.w1 * o.w1 +
                             config.y_coefs.w2 * o.w2 + config.y_coefs.w3 * o.w3 +
                             config.y_coefs.lambda * lam + b;
        double y;
        if (config.outcome_family == OutcomeFamily::gaussian) {
          y = y_lin + rc.normal(0.0, config.y_coefs.sd);
        } else {
          y = rc.bernoulli(expit(y_lin)) ? 1.0 : 0.0;
        }
        // structural gate: the outcome matures t_lag periods after t and the
        // administrative window closes t_grace periods after T
        if (t + config.t_lag > config.T + config.t_grace) {
          o.delta = 0;
        } else {
          const double logit_obs = config.delta_coefs.intercept +
                                   config.delta_coefs.late1 * (t >= config.T - 1 ? 1.0 : 0.0) +
                                   config.delta_coefs.late2 * (t == config.T ? 1.0 : 0.0) +
                                   config.delta_coefs.s * o.s + config.delta_coefs.a * a +
                                   config.delta_coefs.w3 * o.w3 + config.delta_coefs.y * y;
          o.delta = rc.bernoulli(expit(logit_obs)) ? 1 : 0;
        }
        o.y = o.delta == 1 ? y : std::numeric_limits<double>::quiet_NaN();
        data.observations.push_back(o);
      }
    }
  }
  data.dgp_truth = DgpTruth{true_ate(config), config.hash()};
  return data;
}

namespace {

double ept_p_s(double a, double w1, double b) {
  return expit(ept::kS0 + ept::kSA * a + ept::kSW1 * w1 + ept::kSB * b);
}

double ept_p_y(double a, double s, double w1, double b, int t) {
  return expit(ept::kY0 + ept::kYTrend * static_cast<double>(t - 1) / (ept::kT - 1) +
               ept::kYS * s + ept::kYA * a + ept::kYW1 * w1 + b);
}

}  // namespace

TrialDataset ept_dataset(std::uint64_t seed) {
  TrialDataset data;
  data.num_periods = ept::kT;
  data.design = DesignLaw::fixed_waves;
  data.observations.reserve(static_cast<std::size_t>(ept::kJ) * ept::kT * ept::kPerCluster);

  const Rng master(seed);
  // randomized wave allocation: a permutation of (2x6, 3x6, 4x6, 5x5)
  std::vector<int> taus;
  for (int w = 0; w < 4; ++w) {
    for (int k = 0; k < ept::kWaveSizes[w]; ++k) taus.push_back(w + 2);
  }
  Rng perm_rng = master.fork("waves");
  for (std::size_t i = taus.size() - 1; i > 0; --i) {
    const auto k = static_cast<std::size_t>(perm_rng.uniform_int(0, static_cast<std::int64_t>(i)));
    std::swap(taus[i], taus[k]);
  }

  for (int j = 1; j <= ept::kJ; ++j) {
    Rng rc = master.fork("cluster", static_cast<std::uint64_t>(j));
    const int tau = taus[static_cast<std::size_t>(j - 1)];
    const double b = rc.normal(0.0, ept::kSigmaB);
    data.crossover_times[j] = tau;
    for (int t = 1; t <= ept::kT; ++t) {
      const int a = t >= tau ? 1 : 0;
      for (int i = 0; i < ept::kPerCluster; ++i) {
        Observation o;
        o.cluster_id = j;
        o.period = t;
        o.a = a;
        o.w1 = rc.normal();
        o.w2 = rc.bernoulli(0.4) ? 1.0 : 0.0;
        o.w3 = rc.uniform();
        o.s = rc.bernoulli(ept_p_s(a, o.w1, b)) ? 1.0 : 0.0;
        const double y = rc.bernoulli(ept_p_y(a, o.s, o.w1, b, t)) ? 1.0 : 0.0;
        const double logit_obs = ept::kD0 + ept::kDW4 * (tau == 5 ? 1.0 : 0.0) +
                                 ept::kDW3 * ((tau == 4 && t >= 3) ? 1.0 : 0.0) + ept::kDS * o.s;
        o.delta = rc.bernoulli(expit(logit_obs)) ? 1 : 0;
        o.y = o.delta == 1 ? y : std::numeric_limits<double>::quiet_NaN();
        data.observations.push_back(o);
      }
    }
  }
  data.dgp_truth = DgpTruth{ept::kOracleAte, 0};
  return data;
}

double ept_true_ate_mc(std::size_t draws, std::uint64_t seed) {
  Rng rng(seed);
  double acc = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double w1 = rng.normal();
    const double b = rng.normal(0.0, ept::kSigmaB);
    const int t = static_cast<int>(rng.uniform_int(1, ept::kT));
    double contrast = 0.0;
    for (int a : {0, 1}) {
      const double ps = ept_p_s(a, w1, b);
      const double py = ps * ept_p_y(a, 1.0, w1, b, t) + (1.0 - ps) * ept_p_y(a, 0.0, w1, b, t);
      contrast += (a == 1 ? py : -py);
    }
    acc += contrast;
  }
  return acc / static_cast<double>(draws);
}

}  // namespace swtl
