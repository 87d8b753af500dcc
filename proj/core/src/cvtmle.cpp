#include "swtl/cvtmle.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "swtl/stats.hpp"
#include "tmle_internal.hpp"

namespace swtl {

namespace {

// validation-set degeneracy per D-rule: no complete cases in one arm
bool fold_degenerate(const detail::Rows& rows, const std::set<int>& fold_clusters) {
  bool treated = false, control = false;
  for (int i : rows.obs) {
    if (fold_clusters.count(rows.cluster[static_cast<std::size_t>(i)]) == 0) continue;
    (rows.a[static_cast<std::size_t>(i)] == 1 ? treated : control) = true;
    if (treated && control) return false;
  }
  return true;
}

}  // namespace

TmleFit cv_tmle(const TrialDataset& data, const EstimatorConfig& config, int V, Rng rng) {
  const detail::Rows rows = detail::Rows::build(data);
  if (rows.clusters.size() < 2) throw DomainError("cv_tmle: need at least 2 clusters");

  const int J = static_cast<int>(rows.clusters.size());
  if (V > J) throw DomainError("cv_tmle: V must satisfy V <= J");

  FoldPlan plan = cluster_kfold(rows.clusters, V, rng.fork("cv_folds"));

  TmleFit fit;

  // merge degenerate validation folds into their successor
  {
    bool changed = true;
    while (changed && plan.folds.size() > 1) {
      changed = false;
      for (std::size_t v = 0; v < plan.folds.size(); ++v) {
        std::set<int> fold_clusters(plan.folds[v].begin(), plan.folds[v].end());
        if (!fold_degenerate(rows, fold_clusters)) continue;
        const std::size_t succ = (v + 1) % plan.folds.size();
        auto& target = plan.folds[succ];
        target.insert(target.end(), plan.folds[v].begin(), plan.folds[v].end());
        plan.folds.erase(plan.folds.begin() + static_cast<std::ptrdiff_t>(v));
        fit.warnings.push_back("cv_tmle: merged a validation fold with no complete cases in one arm into its successor");
        changed = true;
        break;
      }
    }
    plan.V = static_cast<int>(plan.folds.size());
    plan.fold_of.clear();
    for (int v = 0; v < plan.V; ++v) {
      for (int c : plan.folds[static_cast<std::size_t>(v)]) plan.fold_of[c] = v;
    }
  }
  if (plan.V < 2) throw DomainError("cv_tmle: fewer than 2 usable folds after merging");

  const MasterMatrix mm = MasterMatrix::build(data);
  auto [y_scaled, scale] = detail::scale_outcome_rows(rows);
  const Eigen::VectorXd ga1 = detail::design_ga1(data, rows);

  const ClusterGramX gram_qy(mm.obs, rows.obs, mm.cluster_of_row);
  const ClusterGramX gram_qint(mm.obs, rows.all, mm.cluster_of_row);

  // fold-specific nuisance predictions land in shared full-length vectors
  detail::TargetedState state;
  for (Eigen::VectorXd* v : {&state.qy1, &state.qy0, &state.qint1, &state.qint0, &state.gd_obs,
                             &state.gd1, &state.gd0}) {
    v->setZero(rows.n);
  }
  std::vector<std::vector<int>> fold_rows(static_cast<std::size_t>(plan.V));
  for (int i = 0; i < rows.n; ++i) {
    fold_rows[static_cast<std::size_t>(plan.fold_of.at(rows.cluster[static_cast<std::size_t>(i)]))]
        .push_back(i);
  }

  double trunc_count = 0.0;
  for (int v = 0; v < plan.V; ++v) {
    std::vector<int> train_clusters;
    for (int c : rows.clusters) {
      if (plan.fold_of.at(c) != v) train_clusters.push_back(c);
    }
    const auto& pred_rows = fold_rows[static_cast<std::size_t>(v)];
    if (pred_rows.empty()) continue;
    const detail::FoldNuisance nuis = detail::fit_and_predict_nuisances(
        mm, rows, y_scaled, config, train_clusters, pred_rows,
        config.outcome_family == Family::gaussian ? &gram_qy : nullptr, &gram_qint,
        rng.fork("fold_nuisance", static_cast<std::uint64_t>(v)));
    for (std::size_t k = 0; k < pred_rows.size(); ++k) {
      const int i = pred_rows[k];
      const auto e = static_cast<Eigen::Index>(k);
      state.qy1[i] = nuis.qy1[e];
      state.qy0[i] = nuis.qy0[e];
      state.qint1[i] = nuis.qint1[e];
      state.qint0[i] = nuis.qint0[e];
      state.gd_obs[i] = nuis.gd_obs[e];
      state.gd1[i] = nuis.gd1[e];
      state.gd0[i] = nuis.gd0[e];
      if (nuis.gd_obs[e] <= nuis.gd_bounds.lo || nuis.gd_obs[e] >= nuis.gd_bounds.hi) {
        trunc_count += 1.0;
      }
    }
  }

  // per-fold two-stage fluctuation, iterated globally against the score
  const double n = static_cast<double>(rows.n);
  const double tol = 1.0 / (std::sqrt(n) * std::log(n));
  fit.fold_eps.assign(static_cast<std::size_t>(plan.V), {0.0, 0.0, 0.0, 0.0});
  EicResult eic_res;
  Eigen::VectorXd qy_star_obs(rows.n);
  double psi1s = 0.0, psi0s = 0.0;
  int iter = 0;
  bool converged = false;
  for (; iter < 10; ++iter) {
    for (int v = 0; v < plan.V; ++v) {
      detail::fluctuation_pass(rows, y_scaled, ga1, fold_rows[static_cast<std::size_t>(v)], state,
                               fit.fold_eps[static_cast<std::size_t>(v)]);
    }
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

  fit.fold_plan = plan;
  fit.fluctuation.iterations = iter;
  fit.fluctuation.converged = converged;
  fit.fluctuation.score_residual = eic_res.mean;
  // report the pooled (row-weighted) fluctuation parameters for convenience
  for (int k = 0; k < 4; ++k) {
    double acc = 0.0;
    for (int v = 0; v < plan.V; ++v) {
      acc += fit.fold_eps[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)] *
             static_cast<double>(fold_rows[static_cast<std::size_t>(v)].size());
    }
    const double pooled = acc / n;
    if (k < 2) fit.fluctuation.eps_y[static_cast<std::size_t>(k)] = pooled;
    else fit.fluctuation.eps_s[static_cast<std::size_t>(k - 2)] = pooled;
  }
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
  fit.gd_trunc_fraction = trunc_count / n;
  return fit;
}

}  // namespace swtl
