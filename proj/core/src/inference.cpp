#include "swtl/inference.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "swtl/stats.hpp"
#include "tmle_internal.hpp"

namespace swtl {

IntervalEstimate t_interval(double psi_hat, double variance, int J, double alpha,
                            VarianceSource source) {
  if (J < 2) throw DomainError("t_interval: J >= 2 required");
  if (variance < 0.0) throw DomainError("t_interval: variance must be nonnegative");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("t_interval: alpha in (0,1) required");
  IntervalEstimate ci;
  ci.center = psi_hat;
  ci.level = 1.0 - alpha;
  ci.df = static_cast<double>(J - 1);
  ci.source = source;
  ci.half_width = variance == 0.0
                      ? 0.0
                      : t_quantile(1.0 - alpha / 2.0, static_cast<double>(J - 1)) * std::sqrt(variance);
  return ci;
}

IntervalEstimate z_interval(double psi_hat, double variance, double alpha, VarianceSource source) {
  if (variance < 0.0) throw DomainError("z_interval: variance must be nonnegative");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("z_interval: alpha in (0,1) required");
  IntervalEstimate ci;
  ci.center = psi_hat;
  ci.level = 1.0 - alpha;
  ci.source = source;
  ci.half_width = variance == 0.0 ? 0.0 : norm_quantile(1.0 - alpha / 2.0) * std::sqrt(variance);
  return ci;
}

JackknifeResult jackknife(const TrialDataset& data, TmleKind kind, const EstimatorConfig& config,
                          Rng rng, double alpha, std::optional<double> center) {
  const auto clusters = data.cluster_ids();
  const int J = static_cast<int>(clusters.size());
  if (J < 3) throw DomainError("jackknife: J >= 3 required");

  auto run = [&](const TrialDataset& d, Rng r) -> double {
    if (kind == TmleKind::sa) return sa_tmle(d, config, r).psi_hat;
    return cv_tmle(d, config, config.folds, r).psi_hat;
  };

  JackknifeResult res;
  res.deleted_cluster.reserve(static_cast<std::size_t>(J));
  res.deletion_estimates.reserve(static_cast<std::size_t>(J));
  for (int c : clusters) {
    try {
      const TrialDataset reduced = data.without_cluster(c);
      res.deletion_estimates.push_back(
          run(reduced, rng.fork("jackknife", static_cast<std::uint64_t>(c))));
      res.deleted_cluster.push_back(c);
    } catch (const std::exception& e) {
      throw DomainError("jackknife: deletion fit failed for cluster " + std::to_string(c) + ": " +
                        e.what());
    }
  }
  const double jd = static_cast<double>(J);
  double m = 0.0;
  for (double v : res.deletion_estimates) m += v;
  m /= jd;
  double ss = 0.0;
  for (double v : res.deletion_estimates) ss += (v - m) * (v - m);
  res.variance = (jd - 1.0) / jd * ss;

  const double psi_full = center.has_value() ? *center : run(data, rng.fork("full"));
  res.interval = t_interval(psi_full, res.variance, J, alpha, VarianceSource::jackknife);
  return res;
}

CoverageBound be_bound(const CoverageBoundParams& p) {
  if (p.J < 2) throw DomainError("be_bound: J >= 2 required");
  if (!(p.sigma > 0.0)) throw DomainError("be_bound: sigma > 0 required");
  if (!(p.gamma > 0.5)) throw DomainError("be_bound: gamma > 1/2 required");
  if (p.kappa < 0.0 || p.rho3 < 0.0 || p.c_f < 0.0) {
    throw DomainError("be_bound: kappa, rho3, c_f must be nonnegative");
  }
  if (!(p.alpha > 0.0 && p.alpha < 1.0)) throw DomainError("be_bound: alpha in (0,1) required");
  const double z = norm_quantile(1.0 - p.alpha / 2.0);
  const double jd = static_cast<double>(p.J);
  CoverageBound b;
  b.lambda_be = kBerryEsseenConstant * p.rho3 / (p.sigma * p.sigma * p.sigma);
  b.lambda_t = norm_pdf(z) * z * (z * z + 1.0) / 2.0;
  b.lambda_v = 4.0 * p.kappa * p.kappa;
  b.be_term = b.lambda_be / std::sqrt(jd);
  b.t_term = b.lambda_t / (jd - 1.0);
  b.v_term = b.lambda_v / std::sqrt(jd - 1.0);
  b.remainder_term = p.c_f * std::sqrt(jd) / (std::pow(jd, p.gamma) * p.sigma);
  b.total = b.be_term - b.t_term + b.v_term + b.remainder_term;
  return b;
}

int j_min(double kappa, double epsilon) {
  if (epsilon <= 0.0) throw DomainError("j_min: epsilon > 0 required");
  if (kappa < 0.0) throw DomainError("j_min: kappa >= 0 required");
  const double lambda_v_sqrt = 2.0 * kappa;
  const double num = kBerryEsseenConstant * kappa + lambda_v_sqrt;
  const double j_star = std::ceil(num * num / (epsilon * epsilon));
  return std::max(2, static_cast<int>(j_star));
}

SensitivityResult tipping_point(const TrialDataset& data, double psi_hat,
                                const Eigen::VectorXd& gd_obs) {
  const auto n = static_cast<Eigen::Index>(data.observations.size());
  if (gd_obs.size() != n) throw DomainError("tipping_point: g_delta length mismatch");
  double c = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = data.observations[static_cast<std::size_t>(i)];
    const double gd = std::max(gd_obs[i], 1e-4);
    c += (1.0 - gd) / gd * (o.a == 1 ? 1.0 : -1.0);
  }
  c /= static_cast<double>(n);
  SensitivityResult res;
  res.slope = c;
  if (std::fabs(c) > 1e-12) {
    res.gamma_star = psi_hat / c;
    res.gamma_star_defined = true;
  }
  return res;
}

SensitivityResult mar_diagnostic(const TrialDataset& data, const EstimatorConfig& config, Rng rng) {
  const detail::Rows rows = detail::Rows::build(data);
  if (rows.obs.empty()) throw DomainError("mar_diagnostic: no complete cases");
  const MasterMatrix mm = MasterMatrix::build(data);

  const FoldPlan inner = cluster_kfold(
      rows.clusters, std::min<int>(config.inner_folds, static_cast<int>(rows.clusters.size())),
      rng.fork("mar_folds"));

  NuisanceProblem prob;
  prob.mm = &mm;
  prob.rows = rows.all;
  prob.y.resize(rows.n);
  for (int i = 0; i < rows.n; ++i) prob.y[i] = rows.delta[static_cast<std::size_t>(i)];
  prob.family = Family::binomial;

  prob.include_s = false;
  const EnsembleFit g1_fit = super_learner(prob, config.gdelta_library, inner, rng.fork("g1"));
  prob.include_s = true;
  const EnsembleFit g2_fit = super_learner(prob, config.gdelta_library, inner, rng.fork("g2"));

  Eigen::VectorXd g1, g2;
  g1_fit.predict(mm, ArmView::observed, rows.all, g1);
  g2_fit.predict(mm, ArmView::observed, rows.all, g2);

  // augmented complete-case regression with the censoring ratio as a column
  const auto m = static_cast<Eigen::Index>(rows.obs.size());
  const int T = rows.T;
  const int p = 1 + 1 + 1 + 3 + 1 + (T - 1) + 1;  // intercept,s,a,w,tc,indicators,rhat
  Eigen::MatrixXd X(m, p);
  Eigen::VectorXd y(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const int i = rows.obs[static_cast<std::size_t>(k)];
    const auto& o = data.observations[static_cast<std::size_t>(i)];
    int col = 0;
    X(k, col++) = 1.0;
    X(k, col++) = o.s;
    X(k, col++) = o.a;
    X(k, col++) = o.w1;
    X(k, col++) = o.w2;
    X(k, col++) = o.w3;
    X(k, col++) = static_cast<double>(o.period - 1) / static_cast<double>(T - 1);
    for (int t = 2; t <= T; ++t) X(k, col++) = o.period == t ? 1.0 : 0.0;
    X(k, col++) = g1[i] / std::max(g2[i], 1e-4);
    y[k] = o.y;
  }
  const int rhat_col = p - 1;
  const GlmFit fit = fit_glm(X, y, Family::gaussian);

  SensitivityResult res;
  for (int acol : fit.aliased) {
    if (acol == rhat_col) {
      res.mar_aliased = true;
      return res;
    }
  }
  res.mar_coefficient = fit.beta[rhat_col];

  // cluster-robust sandwich on the OLS score
  std::vector<int> kept;
  for (int c = 0; c < p; ++c) {
    if (std::find(fit.aliased.begin(), fit.aliased.end(), c) == fit.aliased.end()) kept.push_back(c);
  }
  Eigen::MatrixXd Xk(m, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) Xk.col(static_cast<Eigen::Index>(c)) = X.col(kept[c]);
  const Eigen::VectorXd resid = y - X * fit.beta;
  const Eigen::MatrixXd bread =
      (Xk.transpose() * Xk).ldlt().solve(Eigen::MatrixXd::Identity(
          static_cast<Eigen::Index>(kept.size()), static_cast<Eigen::Index>(kept.size())));
  std::map<int, Eigen::VectorXd> score_by_cluster;
  for (Eigen::Index k = 0; k < m; ++k) {
    const int i = rows.obs[static_cast<std::size_t>(k)];
    const int c = rows.cluster[static_cast<std::size_t>(i)];
    auto [it, inserted] =
        score_by_cluster.try_emplace(c, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(kept.size())));
    it->second.noalias() += Xk.row(k).transpose() * resid[k];
  }
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(kept.size()),
                                               static_cast<Eigen::Index>(kept.size()));
  for (const auto& [c, u] : score_by_cluster) meat.noalias() += u * u.transpose();
  const Eigen::MatrixXd vcov = bread * meat * bread;
  Eigen::Index rhat_kept = -1;
  for (std::size_t c = 0; c < kept.size(); ++c) {
    if (kept[c] == rhat_col) rhat_kept = static_cast<Eigen::Index>(c);
  }
  res.mar_se = std::sqrt(std::max(vcov(rhat_kept, rhat_kept), 0.0));
  return res;
}

}  // namespace swtl
