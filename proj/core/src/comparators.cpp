#include "swtl/comparators.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "swtl/stats.hpp"
#include "tmle_internal.hpp"

namespace swtl {

namespace {

constexpr int kGlmmP = 6;  // intercept, a, t, w1, w2, w3

struct GlmmBlocks {
  // per-cluster complete-case sufficient statistics
  std::vector<Eigen::MatrixXd> xtx;
  std::vector<Eigen::VectorXd> xty;
  std::vector<Eigen::VectorXd> xt1;
  std::vector<double> yty, yt1, m;
  double n_total = 0.0;
};

GlmmBlocks glmm_blocks(const TrialDataset& data) {
  std::map<int, std::size_t> index;
  GlmmBlocks b;
  Eigen::VectorXd x(kGlmmP);
  for (const auto& o : data.observations) {
    if (o.delta != 1) continue;
    auto [it, inserted] = index.try_emplace(o.cluster_id, b.xtx.size());
    if (inserted) {
      b.xtx.push_back(Eigen::MatrixXd::Zero(kGlmmP, kGlmmP));
      b.xty.push_back(Eigen::VectorXd::Zero(kGlmmP));
      b.xt1.push_back(Eigen::VectorXd::Zero(kGlmmP));
      b.yty.push_back(0.0);
      b.yt1.push_back(0.0);
      b.m.push_back(0.0);
    }
    const std::size_t j = it->second;
    x << 1.0, static_cast<double>(o.a), static_cast<double>(o.period), o.w1, o.w2, o.w3;
    b.xtx[j].selfadjointView<Eigen::Lower>().rankUpdate(x);
    b.xty[j].noalias() += x * o.y;
    b.xt1[j] += x;
    b.yty[j] += o.y * o.y;
    b.yt1[j] += o.y;
    b.m[j] += 1.0;
    b.n_total += 1.0;
  }
  for (auto& g : b.xtx) g.triangularView<Eigen::Upper>() = g.transpose();
  if (b.m.size() < 2) throw DomainError("glmm_fit: need complete cases in at least 2 clusters");
  return b;
}

struct GlmmEval {
  double loglik = 0.0;
  double sigma_e2 = 0.0;
  Eigen::VectorXd beta;
  Eigen::MatrixXd xvx;  // X' V^-1 X at unit sigma_e2
};

// GLS profile at fixed theta using the Sherman-Morrison form
// V_j^-1 = I - theta/(1+theta m_j) 1 1'.
GlmmEval glmm_eval(const GlmmBlocks& b, double theta) {
  Eigen::MatrixXd xvx = Eigen::MatrixXd::Zero(kGlmmP, kGlmmP);
  Eigen::VectorXd xvy = Eigen::VectorXd::Zero(kGlmmP);
  double yvy = 0.0, logdet = 0.0;
  for (std::size_t j = 0; j < b.m.size(); ++j) {
    const double c = theta / (1.0 + theta * b.m[j]);
    xvx += b.xtx[j] - c * (b.xt1[j] * b.xt1[j].transpose());
    xvy += b.xty[j] - c * b.yt1[j] * b.xt1[j];
    yvy += b.yty[j] - c * b.yt1[j] * b.yt1[j];
    logdet += std::log1p(theta * b.m[j]);
  }
  GlmmEval ev;
  ev.xvx = xvx;
  ev.beta = xvx.ldlt().solve(xvy);
  const double rss = std::max(yvy - ev.beta.dot(xvy), 1e-300);
  ev.sigma_e2 = rss / b.n_total;
  ev.loglik = -0.5 * (b.n_total * std::log(ev.sigma_e2) + logdet + b.n_total);
  return ev;
}

}  // namespace

double glmm_profile_loglik(const TrialDataset& data, double theta) {
  return glmm_eval(glmm_blocks(data), theta).loglik;
}

GlmmFit glmm_fit(const TrialDataset& data) {
  const GlmmBlocks blocks = glmm_blocks(data);

  // golden-section maximization of the profile log-likelihood on log theta
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = -18.0, hi = 4.0;
  double x1 = hi - phi * (hi - lo);
  double x2 = lo + phi * (hi - lo);
  double f1 = glmm_eval(blocks, std::exp(x1)).loglik;
  double f2 = glmm_eval(blocks, std::exp(x2)).loglik;
  while (hi - lo > 1e-8) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = glmm_eval(blocks, std::exp(x2)).loglik;
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = glmm_eval(blocks, std::exp(x1)).loglik;
    }
  }
  const double theta = std::exp(0.5 * (lo + hi));
  const GlmmEval ev = glmm_eval(blocks, theta);

  GlmmFit fit;
  fit.theta = theta;
  fit.beta = ev.beta;
  fit.ate_hat = ev.beta[1];
  fit.sigma_e2 = ev.sigma_e2;
  fit.sigma_b2 = theta * ev.sigma_e2;
  fit.profile_loglik = ev.loglik;
  const Eigen::MatrixXd cov =
      ev.xvx.ldlt().solve(Eigen::MatrixXd::Identity(kGlmmP, kGlmmP)) * ev.sigma_e2;
  fit.se = std::sqrt(std::max(cov(1, 1), 0.0));
  return fit;
}

IpcwFit ipcw_estimate(const TrialDataset& data, const EstimatorConfig& config, Rng rng) {
  const detail::Rows rows = detail::Rows::build(data);
  if (rows.clusters.size() < 2) throw DomainError("ipcw_estimate: need at least 2 clusters");
  const MasterMatrix mm = MasterMatrix::build(data);

  const FoldPlan inner = cluster_kfold(
      rows.clusters, std::min<int>(config.inner_folds, static_cast<int>(rows.clusters.size())),
      rng.fork("ipcw_folds"));
  NuisanceProblem prob;
  prob.mm = &mm;
  prob.rows = rows.all;
  prob.y.resize(rows.n);
  for (int i = 0; i < rows.n; ++i) prob.y[i] = rows.delta[static_cast<std::size_t>(i)];
  prob.family = Family::binomial;
  prob.include_s = !config.gdelta_omit_s;
  const EnsembleFit gd_fit = super_learner(prob, config.gdelta_library, inner, rng.fork("gd"));
  Eigen::VectorXd gd;
  gd_fit.predict(mm, ArmView::observed, rows.all, gd);
  std::vector<double> gd_vals(gd.data(), gd.data() + gd.size());
  for (double& v : gd_vals) v = std::clamp(v, 0.0, 1.0);
  const TruncationBounds bounds = propensity_bounds(gd_vals);

  double sw1 = 0.0, sw0 = 0.0, swy1 = 0.0, swy0 = 0.0, max_w = 0.0, sw = 0.0, sw2 = 0.0;
  Eigen::VectorXd w(rows.n);
  for (int i = 0; i < rows.n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    const double wi = rows.delta[u] == 1 ? 1.0 / bounds.apply(gd_vals[u]) : 0.0;
    w[i] = wi;
    if (wi > 0.0) {
      max_w = std::max(max_w, wi);
      sw += wi;
      sw2 += wi * wi;
      if (rows.a[u] == 1) {
        sw1 += wi;
        swy1 += wi * rows.y_raw[i];
      } else {
        sw0 += wi;
        swy0 += wi * rows.y_raw[i];
      }
    }
  }
  if (sw1 <= 0.0) throw DomainError("ipcw_estimate: all-zero weights in the treated arm");
  if (sw0 <= 0.0) throw DomainError("ipcw_estimate: all-zero weights in the control arm");

  IpcwFit fit;
  fit.mu1 = swy1 / sw1;
  fit.mu0 = swy0 / sw0;
  fit.ate_hat = fit.mu1 - fit.mu0;
  fit.max_weight = max_w;
  fit.effective_sample_size = sw2 > 0.0 ? sw * sw / sw2 : 0.0;

  // linearized per-cluster scores, aggregated like the TMLE sandwich
  const double n = static_cast<double>(rows.n);
  const double wbar1 = sw1 / n;
  const double wbar0 = sw0 / n;
  std::map<int, double> score;
  for (int i = 0; i < rows.n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    if (w[i] == 0.0) continue;
    const double phi = rows.a[u] == 1 ? w[i] * (rows.y_raw[i] - fit.mu1) / wbar1
                                      : -w[i] * (rows.y_raw[i] - fit.mu0) / wbar0;
    score[rows.cluster[u]] += phi;
  }
  for (int c : rows.clusters) score.try_emplace(c, 0.0);
  const double scale = static_cast<double>(score.size()) / n;
  std::vector<double> cluster_scores;
  cluster_scores.reserve(score.size());
  for (const auto& [c, s] : score) cluster_scores.push_back(s * scale);
  fit.var_cluster_robust = sandwich_variance(cluster_scores);
  return fit;
}

}  // namespace swtl
