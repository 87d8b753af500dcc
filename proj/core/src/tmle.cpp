#include "swtl/tmle.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "swtl/stats.hpp"
#include "tmle_internal.hpp"

namespace swtl {

namespace detail {

Rows Rows::build(const TrialDataset& data) {
  Rows r;
  r.n = static_cast<int>(data.observations.size());
  r.T = data.num_periods;
  r.a.resize(static_cast<std::size_t>(r.n));
  r.delta.resize(static_cast<std::size_t>(r.n));
  r.cluster.resize(static_cast<std::size_t>(r.n));
  r.period.resize(static_cast<std::size_t>(r.n));
  r.y_raw.resize(r.n);
  r.all.reserve(static_cast<std::size_t>(r.n));
  std::set<int> ids;
  for (int i = 0; i < r.n; ++i) {
    const auto& o = data.observations[static_cast<std::size_t>(i)];
    r.a[static_cast<std::size_t>(i)] = o.a;
    r.delta[static_cast<std::size_t>(i)] = o.delta;
    r.cluster[static_cast<std::size_t>(i)] = o.cluster_id;
    r.period[static_cast<std::size_t>(i)] = o.period;
    r.y_raw[i] = o.y;
    r.all.push_back(i);
    if (o.delta == 1) r.obs.push_back(i);
    ids.insert(o.cluster_id);
  }
  r.clusters.assign(ids.begin(), ids.end());
  return r;
}

std::pair<Eigen::VectorXd, OutcomeScale> scale_outcome_rows(const Rows& rows) {
  std::vector<double> observed;
  observed.reserve(rows.obs.size());
  for (int i : rows.obs) observed.push_back(rows.y_raw[i]);
  auto [scaled_obs, scale] = scale_outcome(observed);
  Eigen::VectorXd y_scaled = Eigen::VectorXd::Zero(rows.n);
  for (std::size_t k = 0; k < rows.obs.size(); ++k) y_scaled[rows.obs[k]] = scaled_obs[k];
  return {y_scaled, scale};
}

Eigen::VectorXd design_ga1(const TrialDataset& data, const Rows& rows) {
  const double floor = design_propensity_floor(rows.T);
  Eigen::VectorXd ga1(rows.n);
  std::vector<double> by_period(static_cast<std::size_t>(rows.T) + 1, 0.0);
  for (int t = 1; t <= rows.T; ++t) {
    by_period[static_cast<std::size_t>(t)] =
        std::clamp(data.design_propensity(t), floor, 1.0 - floor);
  }
  for (int i = 0; i < rows.n; ++i) {
    ga1[i] = by_period[static_cast<std::size_t>(rows.period[static_cast<std::size_t>(i)])];
  }
  return ga1;
}

FoldNuisance fit_and_predict_nuisances(const MasterMatrix& mm, const Rows& rows,
                                       const Eigen::VectorXd& y_scaled,
                                       const EstimatorConfig& config,
                                       const std::vector<int>& train_clusters,
                                       const std::vector<int>& predict_rows,
                                       const ClusterGramX* gram_qy, const ClusterGramX* gram_qint,
                                       Rng rng) {
  FoldNuisance out;
  std::set<int> train_set(train_clusters.begin(), train_clusters.end());

  std::vector<int> qy_train, all_train;
  for (int i : rows.all) {
    if (train_set.count(rows.cluster[static_cast<std::size_t>(i)]) == 0) continue;
    all_train.push_back(i);
    if (rows.delta[static_cast<std::size_t>(i)] == 1) qy_train.push_back(i);
  }
  for (int arm : {1, 0}) {
    bool found = false;
    for (int i : qy_train) {
      if (rows.a[static_cast<std::size_t>(i)] == arm) {
        found = true;
        break;
      }
    }
    if (!found) {
      throw DomainError(std::string("nuisance training set has no complete cases in the ") +
                        (arm == 1 ? "treated" : "control") + " arm");
    }
  }

  const FoldPlan inner = cluster_kfold(
      train_clusters, std::min<int>(config.inner_folds, static_cast<int>(train_clusters.size())),
      rng.fork("inner_folds"));

  // outcome regression on complete cases
  NuisanceProblem qy_prob;
  qy_prob.mm = &mm;
  qy_prob.rows = qy_train;
  qy_prob.y.resize(static_cast<Eigen::Index>(qy_train.size()));
  for (std::size_t k = 0; k < qy_train.size(); ++k) qy_prob.y[static_cast<Eigen::Index>(k)] = y_scaled[qy_train[k]];
  qy_prob.family = config.outcome_family;
  qy_prob.include_s = true;
  qy_prob.gram = config.outcome_family == Family::gaussian ? gram_qy : nullptr;
  const EnsembleFit qy_fit = super_learner(qy_prob, config.outcome_library, inner, rng.fork("qy"));

  auto clip_vec = [](Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = clip_unit(v[i]);
  };

  qy_fit.predict(mm, ArmView::observed, predict_rows, out.qy_obs);
  qy_fit.predict(mm, ArmView::a1, predict_rows, out.qy1);
  qy_fit.predict(mm, ArmView::a0, predict_rows, out.qy0);
  clip_vec(out.qy_obs);
  clip_vec(out.qy1);
  clip_vec(out.qy0);

  // surrogate-integration regression: q_y predictions regressed on (A, W, t)
  Eigen::VectorXd qint_response;
  qy_fit.predict(mm, ArmView::observed, all_train, qint_response);
  clip_vec(qint_response);
  NuisanceProblem qint_prob;
  qint_prob.mm = &mm;
  qint_prob.rows = all_train;
  qint_prob.y = qint_response;
  qint_prob.family = Family::gaussian;
  qint_prob.include_s = false;
  qint_prob.gram = gram_qint;
  const EnsembleFit qint_fit =
      super_learner(qint_prob, config.outcome_library, inner, rng.fork("qint"));
  qint_fit.predict(mm, ArmView::a1, predict_rows, out.qint1);
  qint_fit.predict(mm, ArmView::a0, predict_rows, out.qint0);
  clip_vec(out.qint1);
  clip_vec(out.qint0);

  // censoring propensity
  NuisanceProblem gd_prob;
  gd_prob.mm = &mm;
  gd_prob.rows = all_train;
  gd_prob.y.resize(static_cast<Eigen::Index>(all_train.size()));
  for (std::size_t k = 0; k < all_train.size(); ++k) {
    gd_prob.y[static_cast<Eigen::Index>(k)] = rows.delta[static_cast<std::size_t>(all_train[k])];
  }
  gd_prob.family = Family::binomial;
  gd_prob.include_s = !config.gdelta_omit_s;
  const EnsembleFit gd_fit = super_learner(gd_prob, config.gdelta_library, inner, rng.fork("gd"));
  gd_fit.predict(mm, ArmView::observed, predict_rows, out.gd_obs);
  gd_fit.predict(mm, ArmView::a1, predict_rows, out.gd1);
  gd_fit.predict(mm, ArmView::a0, predict_rows, out.gd0);

  // truncation: percentile bounds from this fold's predictions
  std::vector<double> gd_vals(out.gd_obs.data(), out.gd_obs.data() + out.gd_obs.size());
  for (double& v : gd_vals) v = std::clamp(v, 0.0, 1.0);
  out.gd_bounds = propensity_bounds(gd_vals);
  for (Eigen::VectorXd* v : {&out.gd_obs, &out.gd1, &out.gd0}) {
    for (Eigen::Index i = 0; i < v->size(); ++i) {
      (*v)[i] = out.gd_bounds.apply(std::clamp((*v)[i], 0.0, 1.0));
    }
  }
  return out;
}

void fluctuation_pass(const Rows& rows, const Eigen::VectorXd& y_scaled,
                      const Eigen::VectorXd& ga1, const std::vector<int>& member_rows,
                      TargetedState& state, std::array<double, 4>& eps) {
  // stage 1: outcome fluctuation per arm on complete cases
  for (int arm : {1, 0}) {
    std::vector<int> fit_rows;
    for (int i : member_rows) {
      if (rows.delta[static_cast<std::size_t>(i)] == 1 && rows.a[static_cast<std::size_t>(i)] == arm) {
        fit_rows.push_back(i);
      }
    }
    if (fit_rows.empty()) continue;
    const auto m = static_cast<Eigen::Index>(fit_rows.size());
    Eigen::VectorXd y(m), off(m), h(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      const int i = fit_rows[static_cast<std::size_t>(k)];
      const double ga = arm == 1 ? ga1[i] : 1.0 - ga1[i];
      const Eigen::VectorXd& qy = arm == 1 ? state.qy1 : state.qy0;
      y[k] = y_scaled[i];
      off[k] = logit(qy[i]);
      h[k] = 1.0 / (ga * state.gd_obs[i]);
    }
    const double e = fit_logistic_fluctuation(y, off, h, nullptr);
    eps[arm == 1 ? 0 : 1] += e;
    // counterfactual update over all member rows
    Eigen::VectorXd& qy = arm == 1 ? state.qy1 : state.qy0;
    const Eigen::VectorXd& gd = arm == 1 ? state.gd1 : state.gd0;
    for (int i : member_rows) {
      const double ga = arm == 1 ? ga1[i] : 1.0 - ga1[i];
      qy[i] = clip_unit(expit(logit(qy[i]) + e / (ga * gd[i])));
    }
  }

  // stage 2: surrogate-integration fluctuation per arm on all member rows
  for (int arm : {1, 0}) {
    std::vector<int> fit_rows;
    for (int i : member_rows) {
      if (rows.a[static_cast<std::size_t>(i)] == arm) fit_rows.push_back(i);
    }
    if (fit_rows.empty()) continue;
    const auto m = static_cast<Eigen::Index>(fit_rows.size());
    Eigen::VectorXd y(m), off(m), h(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      const int i = fit_rows[static_cast<std::size_t>(k)];
      const double ga = arm == 1 ? ga1[i] : 1.0 - ga1[i];
      const Eigen::VectorXd& qy = arm == 1 ? state.qy1 : state.qy0;
      const Eigen::VectorXd& qint = arm == 1 ? state.qint1 : state.qint0;
      y[k] = qy[i];
      off[k] = logit(qint[i]);
      h[k] = 1.0 / ga;
    }
    const double e = fit_logistic_fluctuation(y, off, h, nullptr);
    eps[arm == 1 ? 2 : 3] += e;
    Eigen::VectorXd& qint = arm == 1 ? state.qint1 : state.qint0;
    for (int i : member_rows) {
      const double ga = arm == 1 ? ga1[i] : 1.0 - ga1[i];
      qint[i] = clip_unit(expit(logit(qint[i]) + e / ga));
    }
  }
}

}  // namespace detail

EstimatorConfig EstimatorConfig::minimal(Family outcome_family) {
  EstimatorConfig c;
  c.outcome_library = minimal_library(outcome_family);
  c.gdelta_library = minimal_library(Family::binomial);
  c.outcome_family = outcome_family;
  return c;
}

EstimatorConfig EstimatorConfig::full(Family outcome_family) {
  EstimatorConfig c;
  c.outcome_library = full_library(outcome_family);
  c.gdelta_library = full_library(Family::binomial);
  c.outcome_family = outcome_family;
  return c;
}

std::pair<std::vector<double>, OutcomeScale> scale_outcome(std::span<const double> y) {
  if (y.size() < 2) throw DomainError("scale_outcome: need at least 2 observed outcomes");
  double lo = y[0], hi = y[0];
  for (double v : y) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) throw DomainError("scale_outcome: constant outcome has no scale");
  OutcomeScale scale{lo, hi - lo};
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    out[i] = detail::clip_unit((y[i] - lo) / scale.range);
  }
  return {out, scale};
}

CleverCovariates clever_covariates(double g_a_obs, double g_delta_obs) {
  if (!(g_a_obs > 0.0) || !(g_delta_obs > 0.0)) {
    throw DomainError("clever_covariates: propensities must be positive (truncate first)");
  }
  CleverCovariates h;
  h.h_s = 1.0 / g_a_obs;
  h.h_y = h.h_s / g_delta_obs;
  return h;
}

double design_propensity_floor(int T) {
  if (T < 2) throw DomainError("design_propensity_floor: T >= 2 required");
  return 1.0 / (2.0 * static_cast<double>(T - 1));
}

EicResult eic(const std::vector<int>& cluster_of_row, const std::vector<int>& a,
              const std::vector<int>& delta, const Eigen::VectorXd& y,
              const Eigen::VectorXd& qy_star_obs, const Eigen::VectorXd& qy_star1,
              const Eigen::VectorXd& qy_star0, const Eigen::VectorXd& qint_star1,
              const Eigen::VectorXd& qint_star0, const Eigen::VectorXd& gd_obs,
              const Eigen::VectorXd& ga1, double psi1, double psi0) {
  const auto n = static_cast<Eigen::Index>(cluster_of_row.size());
  EicResult res;
  res.d_star.resize(n);
  std::map<int, double> sums;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    double d = (qint_star1[i] - psi1) - (qint_star0[i] - psi0);
    if (a[u] == 1) {
      const double ga = ga1[i];
      d += (qy_star1[i] - qint_star1[i]) / ga;
      if (delta[u] == 1) d += (y[i] - qy_star_obs[i]) / (ga * gd_obs[i]);
    } else {
      const double ga = 1.0 - ga1[i];
      d -= (qy_star0[i] - qint_star0[i]) / ga;
      if (delta[u] == 1) d -= (y[i] - qy_star_obs[i]) / (ga * gd_obs[i]);
    }
    res.d_star[i] = d;
    sums[cluster_of_row[u]] += d;
  }
  const double scale = static_cast<double>(sums.size()) / static_cast<double>(n);
  double total = 0.0;
  for (auto& [c, s] : sums) {
    s *= scale;  // (J/N) x cluster sum, so the sandwich lands on Var(psi_hat)
    total += s;
  }
  res.by_cluster = std::move(sums);
  res.mean = total / static_cast<double>(res.by_cluster.size());
  return res;
}

double sandwich_variance(std::span<const double> eic_by_cluster) {
  const auto J = static_cast<double>(eic_by_cluster.size());
  if (eic_by_cluster.size() < 2) throw DomainError("sandwich_variance: J >= 2 required");
  double m = 0.0;
  for (double v : eic_by_cluster) m += v;
  m /= J;
  double ss = 0.0;
  for (double v : eic_by_cluster) ss += (v - m) * (v - m);
  return ss / (J * (J - 1.0));
}

namespace {

void check_arms(const detail::Rows& rows) {
  bool treated = false, control = false;
  for (int i : rows.obs) {
    (rows.a[static_cast<std::size_t>(i)] == 1 ? treated : control) = true;
    if (treated && control) return;
  }
  if (!treated) throw DomainError("sa_tmle: no complete cases in the treated arm");
  throw DomainError("sa_tmle: no complete cases in the control arm");
}

}  // namespace

TmleFit sa_tmle(const TrialDataset& data, const EstimatorConfig& config, Rng rng) {
  const detail::Rows rows = detail::Rows::build(data);
  if (rows.clusters.size() < 2) throw DomainError("sa_tmle: need at least 2 clusters");
  check_arms(rows);

  const MasterMatrix mm = MasterMatrix::build(data);
  auto [y_scaled, scale] = detail::scale_outcome_rows(rows);
  const Eigen::VectorXd ga1 = detail::design_ga1(data, rows);

  const ClusterGramX gram_qy(mm.obs, rows.obs, mm.cluster_of_row);
  const ClusterGramX gram_qint(mm.obs, rows.all, mm.cluster_of_row);

  const detail::FoldNuisance nuis = detail::fit_and_predict_nuisances(
      mm, rows, y_scaled, config, rows.clusters, rows.all,
      config.outcome_family == Family::gaussian ? &gram_qy : nullptr, &gram_qint,
      rng.fork("nuisance"));

  detail::TargetedState state;
  state.qy1 = nuis.qy1;
  state.qy0 = nuis.qy0;
  state.qint1 = nuis.qint1;
  state.qint0 = nuis.qint0;
  state.gd_obs = nuis.gd_obs;
  state.gd1 = nuis.gd1;
  state.gd0 = nuis.gd0;

  TmleFit fit;
  const double n = static_cast<double>(rows.n);
  const double tol = 1.0 / (std::sqrt(n) * std::log(n));
  std::array<double, 4> eps{0.0, 0.0, 0.0, 0.0};
  EicResult eic_res;
  int iter = 0;
  bool converged = false;
  Eigen::VectorXd qy_star_obs(rows.n);
  double psi1s = 0.0, psi0s = 0.0;
  for (; iter < 10; ++iter) {
    detail::fluctuation_pass(rows, y_scaled, ga1, rows.all, state, eps);
    psi1s = state.qint1.mean();
    psi0s = state.qint0.mean();
    for (int i : rows.all) {
      qy_star_obs[i] = rows.a[static_cast<std::size_t>(i)] == 1 ? state.qy1[i] : state.qy0[i];
    }
    eic_res = eic(rows.cluster, rows.a, rows.delta, y_scaled, qy_star_obs, state.qy1, state.qy0,
                  state.qint1, state.qint0, state.gd_obs, ga1, psi1s, psi0s);
    if (std::fabs(eic_res.mean) <= tol) {
      converged = true;
      ++iter;
      break;
    }
  }

  fit.fluctuation.eps_y = {eps[0], eps[1]};
  fit.fluctuation.eps_s = {eps[2], eps[3]};
  fit.fluctuation.iterations = iter;
  fit.fluctuation.converged = converged;
  fit.fluctuation.score_residual = eic_res.mean;
  fit.n_iter = iter;

  fit.psi1 = scale.min + scale.range * psi1s;
  fit.psi0 = scale.min + scale.range * psi0s;
  fit.psi_hat = scale.range * (psi1s - psi0s);
  for (const auto& [c, v] : eic_res.by_cluster) fit.eic_by_cluster[c] = scale.range * v;
  fit.score_residual = scale.range * eic_res.mean;
  std::vector<double> eic_vals;
  eic_vals.reserve(fit.eic_by_cluster.size());
  for (const auto& [c, v] : fit.eic_by_cluster) eic_vals.push_back(v);
  fit.var_sandwich = sandwich_variance(eic_vals);

  int truncated = 0;
  for (Eigen::Index i = 0; i < nuis.gd_obs.size(); ++i) {
    if (nuis.gd_obs[i] <= nuis.gd_bounds.lo || nuis.gd_obs[i] >= nuis.gd_bounds.hi) ++truncated;
  }
  fit.gd_trunc_fraction = static_cast<double>(truncated) / n;
  return fit;
}

double gcomp_estimate(const TrialDataset& data, const EstimatorConfig& config, Rng rng) {
  const detail::Rows rows = detail::Rows::build(data);
  if (rows.clusters.size() < 2) throw DomainError("gcomp_estimate: need at least 2 clusters");
  check_arms(rows);
  const MasterMatrix mm = MasterMatrix::build(data);
  auto [y_scaled, scale] = detail::scale_outcome_rows(rows);
  const ClusterGramX gram_qy(mm.obs, rows.obs, mm.cluster_of_row);
  const ClusterGramX gram_qint(mm.obs, rows.all, mm.cluster_of_row);
  const detail::FoldNuisance nuis = detail::fit_and_predict_nuisances(
      mm, rows, y_scaled, config, rows.clusters, rows.all,
      config.outcome_family == Family::gaussian ? &gram_qy : nullptr, &gram_qint,
      rng.fork("nuisance"));
  return scale.range * (nuis.qint1.mean() - nuis.qint0.mean());
}

}  // namespace swtl
