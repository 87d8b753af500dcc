#include "swtl/learners.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "swtl/stats.hpp"

namespace swtl {

std::vector<std::string> FeatureMap::names() const {
  std::vector<std::string> n{"intercept"};
  if (include_s) n.push_back("s");
  n.insert(n.end(), {"a", "w1", "w2", "w3"});
  if (time == TimeEncoding::continuous || time == TimeEncoding::both) n.push_back("t");
  if (time == TimeEncoding::indicators || time == TimeEncoding::both) {
    for (int t = 2; t <= T; ++t) n.push_back("period_" + std::to_string(t));
  }
  return n;
}

int FeatureMap::dim() const { return static_cast<int>(names().size()); }

void FeatureMap::encode(const Observation& o, double* out) const {
  int k = 0;
  out[k++] = 1.0;
  if (include_s) out[k++] = o.s;
  out[k++] = o.a;
  out[k++] = o.w1;
  out[k++] = o.w2;
  out[k++] = o.w3;
  if (time == TimeEncoding::continuous || time == TimeEncoding::both) {
    out[k++] = static_cast<double>(o.period - 1) / static_cast<double>(T - 1);
  }
  if (time == TimeEncoding::indicators || time == TimeEncoding::both) {
    for (int t = 2; t <= T; ++t) out[k++] = o.period == t ? 1.0 : 0.0;
  }
}

MasterMatrix MasterMatrix::build(const TrialDataset& data) {
  MasterMatrix mm;
  mm.T = data.num_periods;
  const auto n = static_cast<Eigen::Index>(data.observations.size());
  const int p = MasterColumns::kIndFirst + mm.T - 1;
  mm.obs.resize(n, p);
  mm.cluster_of_row.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = data.observations[static_cast<std::size_t>(i)];
    mm.obs(i, MasterColumns::kIntercept) = 1.0;
    mm.obs(i, MasterColumns::kS) = o.s;
    mm.obs(i, MasterColumns::kA) = o.a;
    mm.obs(i, MasterColumns::kW1) = o.w1;
    mm.obs(i, MasterColumns::kW2) = o.w2;
    mm.obs(i, MasterColumns::kW3) = o.w3;
    mm.obs(i, MasterColumns::kTcont) =
        static_cast<double>(o.period - 1) / static_cast<double>(mm.T - 1);
    for (int t = 2; t <= mm.T; ++t) {
      mm.obs(i, MasterColumns::kIndFirst + t - 2) = o.period == t ? 1.0 : 0.0;
    }
    mm.cluster_of_row[static_cast<std::size_t>(i)] = o.cluster_id;
  }
  mm.a1 = mm.obs;
  mm.a1.col(MasterColumns::kA).setOnes();
  mm.a0 = mm.obs;
  mm.a0.col(MasterColumns::kA).setZero();
  std::set<int> ids(mm.cluster_of_row.begin(), mm.cluster_of_row.end());
  mm.clusters.assign(ids.begin(), ids.end());
  return mm;
}

void LearnerSpec::validate() const {
  if (kind == LearnerKind::gbt) {
    gbt.validate();
    if (gbt.rounds < 1) throw DomainError("LearnerSpec: gbt rounds >= 1 required");
  }
  if (kind == LearnerKind::rf) rf.validate();
  if (kind == LearnerKind::lasso) {
    if (lasso_grid_size < 2) throw DomainError("LearnerSpec: lasso grid size >= 2 required");
    if (!(lasso_min_ratio > 0.0 && lasso_min_ratio < 1.0)) {
      throw DomainError("LearnerSpec: lasso min ratio in (0,1) required");
    }
  }
}

std::string LearnerSpec::name() const {
  switch (kind) {
    case LearnerKind::intercept:
      return "intercept";
    case LearnerKind::glm:
      return time == TimeEncoding::continuous ? "glm_t"
                                              : (time == TimeEncoding::indicators ? "glm_period" : "glm");
    case LearnerKind::lasso:
      return "lasso";
    case LearnerKind::gbt:
      return "gbt";
    case LearnerKind::rf:
      return "rf";
  }
  return "?";
}

namespace {

// master-column subset for a candidate; with_intercept=false for learners
// that handle the intercept themselves (lasso) or not at all (trees)
std::vector<int> candidate_columns(const LearnerSpec& spec, bool include_s, int T,
                                   bool with_intercept) {
  std::vector<int> cols;
  if (with_intercept) cols.push_back(MasterColumns::kIntercept);
  if (spec.kind != LearnerKind::intercept) {
    if (include_s) cols.push_back(MasterColumns::kS);
    cols.insert(cols.end(),
                {MasterColumns::kA, MasterColumns::kW1, MasterColumns::kW2, MasterColumns::kW3});
    if (spec.time == TimeEncoding::continuous || spec.time == TimeEncoding::both) {
      cols.push_back(MasterColumns::kTcont);
    }
    if (spec.time == TimeEncoding::indicators || spec.time == TimeEncoding::both) {
      for (int t = 2; t <= T; ++t) cols.push_back(MasterColumns::kIndFirst + t - 2);
    }
  }
  return cols;
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& X, const std::vector<int>& rows,
                          const std::vector<int>& cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = X(rows[r], cols[c]);
    }
  }
  return out;
}

}  // namespace

void FittedLearner::predict(const MasterMatrix& mm, ArmView view, const std::vector<int>& rows,
                            Eigen::VectorXd& out) const {
  const Eigen::MatrixXd& X = mm.view(view);
  out.resize(static_cast<Eigen::Index>(rows.size()));
  if (spec.kind == LearnerKind::intercept) {
    out.setConstant(constant);
    return;
  }
  Eigen::MatrixXd Xs = submatrix(X, rows, cols);
  switch (spec.kind) {
    case LearnerKind::glm:
      out = glm.predict(Xs);
      break;
    case LearnerKind::lasso:
      out = lasso.predict(Xs);
      break;
    case LearnerKind::gbt:
      out = gbt.predict(Xs);
      break;
    case LearnerKind::rf:
      out = rf.predict(Xs);
      break;
    case LearnerKind::intercept:
      break;
  }
}

void EnsembleFit::predict(const MasterMatrix& mm, ArmView view, const std::vector<int>& rows,
                          Eigen::VectorXd& out) const {
  out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows.size()));
  Eigen::VectorXd tmp;
  for (std::size_t k = 0; k < members.size(); ++k) {
    if (weights[k] == 0.0) continue;
    members[k].predict(mm, view, rows, tmp);
    out += weights[k] * tmp;
  }
}

FoldPlan cluster_kfold(const std::vector<int>& clusters, int V, Rng rng) {
  const int J = static_cast<int>(clusters.size());
  if (J < 2) throw DomainError("cluster_kfold: need at least 2 clusters");
  if (V == 0) V = J < 20 ? J : std::min(10, J);
  if (V < 2 || V > J) throw DomainError("cluster_kfold: V must satisfy 2 <= V <= J");
  std::vector<int> shuffled = clusters;
  for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
    const auto k = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)));
    std::swap(shuffled[i], shuffled[k]);
  }
  FoldPlan plan;
  plan.V = V;
  plan.folds.assign(static_cast<std::size_t>(V), {});
  for (std::size_t i = 0; i < shuffled.size(); ++i) {
    plan.folds[i % static_cast<std::size_t>(V)].push_back(shuffled[i]);
  }
  for (int v = 0; v < V; ++v) {
    for (int c : plan.folds[static_cast<std::size_t>(v)]) plan.fold_of[c] = v;
  }
  return plan;
}

TruncationBounds propensity_bounds(const std::vector<double>& p) {
  if (p.empty()) throw DomainError("propensity_bounds: empty input");
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("propensity_bounds: values must be in [0,1]");
  }
  TruncationBounds b;
  const double q01 = quantile_type7(p, 0.01);
  const double q99 = quantile_type7(p, 0.99);
  b.lo = std::max(q01, 1e-4);
  b.hi = std::min(q99, 1.0 - 1e-4);
  if (b.hi < b.lo) b.hi = b.lo;  // degenerate all-equal input
  return b;
}

std::vector<double> truncate_propensity(const std::vector<double>& p) {
  const TruncationBounds b = propensity_bounds(p);
  std::vector<double> out = p;
  for (double& v : out) v = b.apply(v);
  return out;
}

ClusterGramX::ClusterGramX(const Eigen::Ref<const Eigen::MatrixXd>& X, const std::vector<int>& rows,
                           const std::vector<int>& cluster_of_row) {
  std::set<int> ids;
  for (int r : rows) ids.insert(cluster_of_row[static_cast<std::size_t>(r)]);
  ids_.assign(ids.begin(), ids.end());
  for (std::size_t i = 0; i < ids_.size(); ++i) index_[ids_[i]] = i;
  const Eigen::Index p = X.cols();
  gram_.assign(ids_.size(), Eigen::MatrixXd::Zero(p, p));
  rows_.assign(ids_.size(), 0.0);
  for (int r : rows) {
    const auto j = index_.at(cluster_of_row[static_cast<std::size_t>(r)]);
    gram_[j].selfadjointView<Eigen::Lower>().rankUpdate(X.row(r).transpose());
    rows_[j] += 1.0;
  }
  for (auto& g : gram_) g.triangularView<Eigen::Upper>() = g.transpose();
}

void ClusterGramX::assemble(const std::vector<int>& clusters,
                            const std::map<int, Eigen::VectorXd>& xty, Eigen::MatrixXd& G,
                            Eigen::VectorXd& b, double& n) const {
  const Eigen::Index p = gram_.empty() ? 0 : gram_.front().rows();
  G = Eigen::MatrixXd::Zero(p, p);
  b = Eigen::VectorXd::Zero(p);
  n = 0.0;
  for (int c : clusters) {
    const auto it = index_.find(c);
    if (it == index_.end()) continue;  // cluster has no rows in this problem
    G += gram_[it->second];
    n += rows_[it->second];
    const auto yit = xty.find(c);
    if (yit != xty.end()) b += yit->second;
  }
}

std::map<int, Eigen::VectorXd> cluster_xty(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                           const std::vector<int>& rows, const Eigen::VectorXd& y,
                                           const std::vector<int>& cluster_of_row) {
  std::map<int, Eigen::VectorXd> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int r = rows[i];
    const int c = cluster_of_row[static_cast<std::size_t>(r)];
    auto [it, inserted] = out.try_emplace(c, Eigen::VectorXd::Zero(X.cols()));
    it->second.noalias() += X.row(r).transpose() * y[static_cast<Eigen::Index>(i)];
  }
  return out;
}

Eigen::VectorXd nnls_simplex(const Eigen::MatrixXd& P, const Eigen::VectorXd& y) {
  const Eigen::Index K = P.cols();
  if (K == 0) throw DomainError("nnls_simplex: no candidates");
  const double n = static_cast<double>(P.rows());
  const Eigen::MatrixXd A = P.transpose() * P / n;
  const Eigen::VectorXd b = P.transpose() * y / n;
  Eigen::VectorXd x = Eigen::VectorXd::Constant(K, 1.0 / static_cast<double>(K));
  const double L = std::max(A.trace(), 1e-12);
  for (int it = 0; it < 5000; ++it) {
    Eigen::VectorXd g = A * x - b;
    Eigen::VectorXd xn = (x - g / L).cwiseMax(0.0);
    const double delta = (xn - x).cwiseAbs().maxCoeff();
    x = xn;
    if (delta < 1e-13) break;
  }
  const double total = x.sum();
  if (total <= 1e-12) {
    // all-zero solution: fall back to the best single candidate
    Eigen::Index best = 0;
    double best_risk = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < K; ++k) {
      const double risk = (y - P.col(k)).squaredNorm();
      if (risk < best_risk) {
        best_risk = risk;
        best = k;
      }
    }
    x.setZero();
    x[best] = 1.0;
    return x;
  }
  x /= total;
  // tie-break: identical prediction columns collapse onto the lowest index
  for (Eigen::Index k = 0; k < K; ++k) {
    for (Eigen::Index l = k + 1; l < K; ++l) {
      if (x[l] > 0.0 && P.col(k) == P.col(l)) {
        x[k] += x[l];
        x[l] = 0.0;
      }
    }
  }
  return x;
}

namespace {

// gaussian sufficient statistics for the lasso (penalized columns only),
// extracted from a full-layout gram assembly
void lasso_stats_from_gram(const Eigen::MatrixXd& Gfull, const Eigen::VectorXd& bfull, double n,
                           const std::vector<int>& cols, Eigen::MatrixXd& Sxx,
                           Eigen::VectorXd& Sxy, Eigen::VectorXd& Sx, double& Sy) {
  const auto p = static_cast<Eigen::Index>(cols.size());
  Sxx.resize(p, p);
  Sxy.resize(p);
  Sx.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    Sxy[i] = bfull[cols[static_cast<std::size_t>(i)]];
    Sx[i] = Gfull(MasterColumns::kIntercept, cols[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < p; ++j) {
      Sxx(i, j) = Gfull(cols[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]);
    }
  }
  Sy = bfull[MasterColumns::kIntercept];
  (void)n;
}

struct SlWorkspace {
  std::vector<int> all_clusters;
  std::map<int, Eigen::VectorXd> xty;  // full-layout X'y per cluster (gram path)
  bool use_gram = false;
};

// Fit one non-lasso candidate on the given training rows.
FittedLearner fit_plain_candidate(const NuisanceProblem& prob, const LearnerSpec& spec,
                                  const std::vector<int>& train_rows,
                                  const Eigen::VectorXd& y_train,
                                  const std::vector<int>& train_clusters, Rng rng,
                                  const SlWorkspace& ws) {
  FittedLearner learner;
  learner.spec = spec;
  const MasterMatrix& mm = *prob.mm;
  if (spec.kind == LearnerKind::intercept) {
    if (train_rows.empty()) throw DomainError("intercept learner: no rows");
    learner.constant = y_train.sum() / static_cast<double>(y_train.size());
    return learner;
  }
  const bool with_intercept = spec.kind == LearnerKind::glm;
  learner.cols = candidate_columns(spec, prob.include_s, mm.T, with_intercept);
  if (spec.kind == LearnerKind::glm && prob.family == Family::gaussian && ws.use_gram) {
    Eigen::MatrixXd Gfull;
    Eigen::VectorXd bfull;
    double n = 0.0;
    prob.gram->assemble(train_clusters, ws.xty, Gfull, bfull, n);
    if (n < 1.0) throw DomainError("glm: no rows");
    const auto& cols = learner.cols;
    Eigen::MatrixXd G(static_cast<Eigen::Index>(cols.size()), static_cast<Eigen::Index>(cols.size()));
    Eigen::VectorXd b(static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) {
      b[static_cast<Eigen::Index>(i)] = bfull[cols[i]];
      for (std::size_t j = 0; j < cols.size(); ++j) {
        G(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = Gfull(cols[i], cols[j]);
      }
    }
    learner.glm = fit_glm_gram(G, b);
    return learner;
  }
  Eigen::MatrixXd X = submatrix(mm.obs, train_rows, learner.cols);
  switch (spec.kind) {
    case LearnerKind::glm:
      learner.glm = fit_glm(X, y_train, prob.family);
      break;
    case LearnerKind::gbt:
      learner.gbt.fit(X, y_train, prob.family, spec.gbt, rng.fork("gbt"));
      break;
    case LearnerKind::rf:
      learner.rf.fit(X, y_train, prob.family, spec.rf, rng.fork("rf"));
      break;
    default:
      throw DomainError("fit_plain_candidate: unexpected learner kind");
  }
  return learner;
}

// Lasso path on a training subset; gaussian goes through the gram fast path.
std::vector<LassoFit> lasso_path_on(const NuisanceProblem& prob, const std::vector<int>& cols,
                                    const std::vector<int>& train_rows,
                                    const Eigen::VectorXd& y_train,
                                    const std::vector<int>& train_clusters,
                                    const std::vector<double>& grid, const SlWorkspace& ws) {
  const MasterMatrix& mm = *prob.mm;
  if (prob.family == Family::gaussian && ws.use_gram) {
    Eigen::MatrixXd Gfull;
    Eigen::VectorXd bfull;
    double n = 0.0;
    prob.gram->assemble(train_clusters, ws.xty, Gfull, bfull, n);
    Eigen::MatrixXd Sxx;
    Eigen::VectorXd Sxy, Sx;
    double Sy = 0.0;
    lasso_stats_from_gram(Gfull, bfull, n, cols, Sxx, Sxy, Sx, Sy);
    return lasso_path_gaussian_stats(Sxx, Sxy, Sx, Sy, n, grid);
  }
  Eigen::MatrixXd X = submatrix(mm.obs, train_rows, cols);
  return lasso_path(X, y_train, prob.family, grid);
}

}  // namespace

EnsembleFit super_learner(const NuisanceProblem& prob, const std::vector<LearnerSpec>& library,
                          const FoldPlan& inner_folds, Rng rng) {
  if (library.empty()) throw DomainError("super_learner: empty library");
  for (const auto& spec : library) spec.validate();
  const MasterMatrix& mm = *prob.mm;
  const auto n_rows = prob.rows.size();
  if (n_rows == 0) throw DomainError("super_learner: no training rows");
  if (prob.y.size() != static_cast<Eigen::Index>(n_rows)) {
    throw DomainError("super_learner: response length mismatch");
  }
  const std::size_t K = library.size();

  SlWorkspace ws;
  ws.use_gram = prob.gram != nullptr && prob.family == Family::gaussian;
  if (ws.use_gram) ws.xty = cluster_xty(mm.obs, prob.rows, prob.y, mm.cluster_of_row);
  {
    std::set<int> cluster_set;
    for (int r : prob.rows) cluster_set.insert(mm.cluster_of_row[static_cast<std::size_t>(r)]);
    if (cluster_set.size() < 2) throw DomainError("super_learner: need >= 2 clusters");
    ws.all_clusters.assign(cluster_set.begin(), cluster_set.end());
  }

  EnsembleFit fit;
  fit.members.resize(K);
  fit.weights.assign(K, 0.0);
  fit.cv_risks.assign(K, std::numeric_limits<double>::infinity());

  // lasso candidates share a lambda grid derived from the full training rows
  std::vector<std::vector<double>> lasso_grids(K);
  std::vector<std::vector<int>> lasso_cols(K);
  std::vector<Eigen::MatrixXd> lasso_oof(K);     // n_rows x grid
  std::vector<std::vector<double>> lasso_risk(K);
  for (std::size_t k = 0; k < K; ++k) {
    if (library[k].kind != LearnerKind::lasso) continue;
    lasso_cols[k] = candidate_columns(library[k], prob.include_s, mm.T, false);
    Eigen::MatrixXd X = submatrix(mm.obs, prob.rows, lasso_cols[k]);
    lasso_grids[k] = default_lambda_grid(lasso_lambda_max(X, prob.y), library[k].lasso_grid_size,
                                         library[k].lasso_min_ratio);
    lasso_oof[k].setZero(static_cast<Eigen::Index>(n_rows),
                         static_cast<Eigen::Index>(lasso_grids[k].size()));
    lasso_risk[k].assign(lasso_grids[k].size(), 0.0);
  }

  const bool single = K == 1;
  Eigen::MatrixXd oof;
  std::vector<bool> failed(K, false);
  if (!single) {
    oof.setZero(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(K));

    for (int v = 0; v < inner_folds.V; ++v) {
      std::vector<int> tr_rows, va_rows, va_pos, tr_clusters;
      Eigen::Index tr_count = 0;
      for (int c : ws.all_clusters) {
        const auto it = inner_folds.fold_of.find(c);
        if ((it == inner_folds.fold_of.end() ? -1 : it->second) != v) tr_clusters.push_back(c);
      }
      for (std::size_t i = 0; i < n_rows; ++i) {
        const int c = mm.cluster_of_row[static_cast<std::size_t>(prob.rows[i])];
        const auto it = inner_folds.fold_of.find(c);
        if ((it == inner_folds.fold_of.end() ? -1 : it->second) == v) {
          va_rows.push_back(prob.rows[i]);
          va_pos.push_back(static_cast<int>(i));
        } else {
          tr_rows.push_back(prob.rows[i]);
          ++tr_count;
        }
      }
      if (va_rows.empty() || tr_rows.empty()) continue;
      Eigen::VectorXd y_train(tr_count);
      {
        Eigen::Index w = 0;
        for (std::size_t i = 0; i < n_rows; ++i) {
          const int c = mm.cluster_of_row[static_cast<std::size_t>(prob.rows[i])];
          const auto it = inner_folds.fold_of.find(c);
          if ((it == inner_folds.fold_of.end() ? -1 : it->second) != v) {
            y_train[w++] = prob.y[static_cast<Eigen::Index>(i)];
          }
        }
      }

      for (std::size_t k = 0; k < K; ++k) {
        if (failed[k]) continue;
        try {
          if (library[k].kind == LearnerKind::lasso) {
            const auto path = lasso_path_on(prob, lasso_cols[k], tr_rows, y_train, tr_clusters,
                                            lasso_grids[k], ws);
            Eigen::MatrixXd Xva = submatrix(mm.obs, va_rows, lasso_cols[k]);
            for (std::size_t g = 0; g < path.size(); ++g) {
              Eigen::VectorXd pred = path[g].predict(Xva);
              for (std::size_t i = 0; i < va_pos.size(); ++i) {
                const double pv = pred[static_cast<Eigen::Index>(i)];
                lasso_oof[k](va_pos[i], static_cast<Eigen::Index>(g)) = pv;
                const double err = prob.y[va_pos[i]] - pv;
                lasso_risk[k][g] += err * err;
              }
            }
          } else {
            FittedLearner cand =
                fit_plain_candidate(prob, library[k], tr_rows, y_train, tr_clusters,
                                    rng.fork("fold", static_cast<std::uint64_t>(v), k), ws);
            Eigen::VectorXd pred;
            cand.predict(mm, ArmView::observed, va_rows, pred);
            for (std::size_t i = 0; i < va_pos.size(); ++i) {
              oof(va_pos[i], static_cast<Eigen::Index>(k)) = pred[static_cast<Eigen::Index>(i)];
            }
          }
        } catch (const std::exception&) {
          failed[k] = true;
        }
      }
    }

    // pick each lasso's lambda by its fold risk and adopt those OOF columns
    for (std::size_t k = 0; k < K; ++k) {
      if (library[k].kind != LearnerKind::lasso || failed[k]) continue;
      std::size_t best = 0;
      for (std::size_t g = 1; g < lasso_risk[k].size(); ++g) {
        if (lasso_risk[k][g] < lasso_risk[k][best]) best = g;
      }
      lasso_grids[k] = {lasso_grids[k].begin(), lasso_grids[k].begin() + static_cast<long>(best) + 1};
      oof.col(static_cast<Eigen::Index>(k)) = lasso_oof[k].col(static_cast<Eigen::Index>(best));
    }
  }

  // refit every candidate on all rows
  for (std::size_t k = 0; k < K; ++k) {
    if (failed[k]) {
      fit.members[k].spec = library[k];
      continue;
    }
    try {
      if (library[k].kind == LearnerKind::lasso && single) {
        // no ensemble folds to select lambda on: use the learner's own
        // cluster-level 5-fold CV
        Eigen::MatrixXd X = submatrix(mm.obs, prob.rows, lasso_cols[k]);
        std::vector<int> crow(prob.rows.size());
        for (std::size_t i = 0; i < prob.rows.size(); ++i) {
          crow[i] = mm.cluster_of_row[static_cast<std::size_t>(prob.rows[i])];
        }
        fit.members[k].spec = library[k];
        fit.members[k].cols = lasso_cols[k];
        fit.members[k].lasso = fit_lasso(X, prob.y, prob.family, crow, rng.fork("lasso_cv"), 5,
                                         &lasso_grids[k]);
      } else if (library[k].kind == LearnerKind::lasso) {
        auto path = lasso_path_on(prob, lasso_cols[k], prob.rows, prob.y, ws.all_clusters,
                                  lasso_grids[k], ws);
        fit.members[k].spec = library[k];
        fit.members[k].cols = lasso_cols[k];
        fit.members[k].lasso = path.back();  // grid truncated at the selected lambda
      } else {
        fit.members[k] = fit_plain_candidate(prob, library[k], prob.rows, prob.y, ws.all_clusters,
                                             rng.fork("refit", k), ws);
      }
    } catch (const std::exception&) {
      failed[k] = true;
      fit.members[k].spec = library[k];
    }
  }

  std::vector<std::size_t> usable;
  for (std::size_t k = 0; k < K; ++k) {
    if (!failed[k]) usable.push_back(k);
  }
  if (usable.empty()) throw DomainError("super_learner: all candidates failed");

  if (single || usable.size() == 1) {
    fit.weights[usable[0]] = 1.0;
    fit.cv_risks[usable[0]] = 0.0;
    fit.sl_risk = 0.0;
    return fit;
  }

  for (std::size_t k : usable) {
    fit.cv_risks[k] = (prob.y - oof.col(static_cast<Eigen::Index>(k))).squaredNorm() /
                      static_cast<double>(n_rows);
  }
  Eigen::MatrixXd P(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(usable.size()));
  for (std::size_t i = 0; i < usable.size(); ++i) {
    P.col(static_cast<Eigen::Index>(i)) = oof.col(static_cast<Eigen::Index>(usable[i]));
  }
  const Eigen::VectorXd w = nnls_simplex(P, prob.y);
  for (std::size_t i = 0; i < usable.size(); ++i) {
    fit.weights[usable[i]] = w[static_cast<Eigen::Index>(i)];
  }
  fit.sl_risk = (prob.y - P * w).squaredNorm() / static_cast<double>(n_rows);
  return fit;
}

std::vector<LearnerSpec> minimal_library(Family family) {
  LearnerSpec intercept{LearnerKind::intercept, family, TimeEncoding::none, {}, {}};
  LearnerSpec glm_t{LearnerKind::glm, family, TimeEncoding::continuous, {}, {}};
  LearnerSpec glm_period{LearnerKind::glm, family, TimeEncoding::indicators, {}, {}};
  LearnerSpec lasso{LearnerKind::lasso, family, TimeEncoding::both, {}, {}};
  return {intercept, glm_t, glm_period, lasso};
}

std::vector<LearnerSpec> full_library(Family family) {
  auto lib = minimal_library(family);
  LearnerSpec gbt{LearnerKind::gbt, family, TimeEncoding::both, {}, {}};
  LearnerSpec rf{LearnerKind::rf, family, TimeEncoding::both, {}, {}};
  lib.push_back(gbt);
  lib.push_back(rf);
  return lib;
}

}  // namespace swtl
