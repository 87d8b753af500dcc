#include "swtl/glm.hpp"

#include <cmath>
#include <unordered_map>

#include "swtl/stats.hpp"

namespace swtl {

namespace {

// Incremental Cholesky that drops rank-deficient columns as it goes.
// Operates on the normal-equation matrix G; pivot tolerance is relative
// to the largest diagonal entry.
struct CholeskyKeep {
  std::vector<int> kept;
  std::vector<int> aliased;
  Eigen::MatrixXd L;  // lower triangular, kept x kept

  void factor(const Eigen::MatrixXd& G, double rel_tol = 1e-10) {
    const int p = static_cast<int>(G.rows());
    const double scale = std::max(G.diagonal().maxCoeff(), 1e-300);
    kept.clear();
    aliased.clear();
    L.resize(p, p);
    for (int k = 0; k < p; ++k) {
      const int m = static_cast<int>(kept.size());
      Eigen::VectorXd g(m);
      for (int i = 0; i < m; ++i) g[i] = G(kept[static_cast<std::size_t>(i)], k);
      Eigen::VectorXd c =
          L.topLeftCorner(m, m).triangularView<Eigen::Lower>().solve(g);
      const double piv2 = G(k, k) - c.squaredNorm();
      if (piv2 <= rel_tol * scale) {
        aliased.push_back(k);
        continue;
      }
      L.block(m, 0, 1, m) = c.transpose();
      L(m, m) = std::sqrt(piv2);
      kept.push_back(k);
    }
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b_kept) const {
    const int m = static_cast<int>(kept.size());
    Eigen::VectorXd u = L.topLeftCorner(m, m).triangularView<Eigen::Lower>().solve(b_kept);
    return L.topLeftCorner(m, m).transpose().triangularView<Eigen::Upper>().solve(u);
  }

  Eigen::MatrixXd inverse() const {
    const int m = static_cast<int>(kept.size());
    Eigen::MatrixXd inv_l = L.topLeftCorner(m, m)
                                .triangularView<Eigen::Lower>()
                                .solve(Eigen::MatrixXd::Identity(m, m));
    return inv_l.transpose() * inv_l;
  }
};

Eigen::VectorXd expand(const Eigen::VectorXd& v, const std::vector<int>& kept, int p) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(p);
  for (std::size_t i = 0; i < kept.size(); ++i) out[kept[i]] = v[static_cast<Eigen::Index>(i)];
  return out;
}

}  // namespace

Eigen::VectorXd GlmFit::predict(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const Eigen::VectorXd* offset) const {
  Eigen::VectorXd eta = X * beta;
  if (offset != nullptr) eta += *offset;
  if (family == Family::binomial) {
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = expit(eta[i]);
  }
  return eta;
}

GlmFit fit_glm(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
               Family family, const Eigen::VectorXd* weights, const Eigen::VectorXd* offset,
               const Eigen::VectorXd* warm_start) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (n == 0 || p == 0) throw DomainError("fit_glm: empty design");
  if (y.size() != n) throw DomainError("fit_glm: y length mismatch");
  if (weights != nullptr && weights->size() != n) throw DomainError("fit_glm: weights length mismatch");
  if (offset != nullptr && offset->size() != n) throw DomainError("fit_glm: offset length mismatch");
  if (family == Family::binomial) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(y[i] >= 0.0 && y[i] <= 1.0)) throw DomainError("fit_glm: binomial responses must be in [0,1]");
    }
  }

  GlmFit fit;
  fit.family = family;

  if (family == Family::gaussian) {
    Eigen::MatrixXd G(p, p);
    Eigen::VectorXd b(p);
    Eigen::VectorXd yw = y;
    if (offset != nullptr) yw -= *offset;
    if (weights == nullptr) {
      G.noalias() = X.transpose() * X;
      b.noalias() = X.transpose() * yw;
    } else {
      G.noalias() = X.transpose() * weights->asDiagonal() * X;
      b.noalias() = X.transpose() * weights->cwiseProduct(yw);
    }
    CholeskyKeep chol;
    chol.factor(G);
    Eigen::VectorXd bk(static_cast<Eigen::Index>(chol.kept.size()));
    for (std::size_t i = 0; i < chol.kept.size(); ++i) bk[static_cast<Eigen::Index>(i)] = b[chol.kept[i]];
    const Eigen::VectorXd beta_k = chol.solve(bk);
    fit.beta = expand(beta_k, chol.kept, static_cast<int>(p));
    fit.aliased = chol.aliased;
    fit.iterations = 1;
    // model-based SEs
    Eigen::VectorXd resid = yw - X * fit.beta;
    double rss, wsum;
    if (weights == nullptr) {
      rss = resid.squaredNorm();
      wsum = static_cast<double>(n);
    } else {
      rss = resid.cwiseProduct(weights->cwiseProduct(resid)).sum();
      wsum = weights->sum();
    }
    const double dof = std::max(1.0, wsum - static_cast<double>(chol.kept.size()));
    const Eigen::MatrixXd cov = chol.inverse() * (rss / dof);
    Eigen::VectorXd se_k = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    fit.se = expand(se_k, chol.kept, static_cast<int>(p));
    return fit;
  }

  // binomial IRLS
  Eigen::VectorXd beta = warm_start != nullptr && warm_start->size() == p
                             ? *warm_start
                             : Eigen::VectorXd::Zero(p);
  CholeskyKeep chol;
  {
    Eigen::MatrixXd G0 = X.transpose() * X;
    chol.factor(G0);  // aliasing is a property of the columns, fixed across IRLS
  }
  const int m = static_cast<int>(chol.kept.size());
  Eigen::MatrixXd Xk(n, m);
  for (int i = 0; i < m; ++i) Xk.col(i) = X.col(chol.kept[static_cast<std::size_t>(i)]);
  Eigen::VectorXd beta_k(m);
  for (int i = 0; i < m; ++i) beta_k[i] = beta[chol.kept[static_cast<std::size_t>(i)]];

  Eigen::VectorXd eta(n), mu(n), w_irls(n), z(n);
  Eigen::MatrixXd Gw(m, m);
  Eigen::VectorXd bw(m);
  bool converged = false;
  int iter = 0;
  for (; iter < 100; ++iter) {
    eta.noalias() = Xk * beta_k;
    if (offset != nullptr) eta += *offset;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mui = std::clamp(expit(eta[i]), 1e-8, 1.0 - 1e-8);
      mu[i] = mui;
      double v = mui * (1.0 - mui);
      double wi = weights == nullptr ? v : (*weights)[i] * v;
      w_irls[i] = std::max(wi, 1e-12);
      z[i] = (eta[i] - (offset != nullptr ? (*offset)[i] : 0.0)) + (y[i] - mui) / v;
    }
    Gw.noalias() = Xk.transpose() * w_irls.asDiagonal() * Xk;
    Gw.diagonal().array() += 1e-12;  // separation guard
    bw.noalias() = Xk.transpose() * w_irls.cwiseProduct(z);
    Eigen::VectorXd beta_new = Gw.ldlt().solve(bw);
    const double delta = (beta_new - beta_k).cwiseAbs().maxCoeff();
    beta_k = beta_new;
    if (delta < 1e-10) {
      converged = true;
      ++iter;
      break;
    }
  }
  fit.beta = expand(beta_k, chol.kept, static_cast<int>(p));
  fit.aliased = chol.aliased;
  fit.iterations = iter;
  fit.converged = converged;
  Eigen::MatrixXd cov = Gw.ldlt().solve(Eigen::MatrixXd::Identity(m, m));
  Eigen::VectorXd se_k = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  fit.se = expand(se_k, chol.kept, static_cast<int>(p));
  return fit;
}

GlmFit fit_glm_gram(const Eigen::Ref<const Eigen::MatrixXd>& G,
                    const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (G.rows() == 0 || G.rows() != G.cols() || b.size() != G.rows()) {
    throw DomainError("fit_glm_gram: bad dimensions");
  }
  CholeskyKeep chol;
  chol.factor(G);
  Eigen::VectorXd bk(static_cast<Eigen::Index>(chol.kept.size()));
  for (std::size_t i = 0; i < chol.kept.size(); ++i) bk[static_cast<Eigen::Index>(i)] = b[chol.kept[i]];
  GlmFit fit;
  fit.family = Family::gaussian;
  fit.beta = expand(chol.solve(bk), chol.kept, static_cast<int>(G.rows()));
  fit.aliased = chol.aliased;
  fit.iterations = 1;
  return fit;
}

double fit_logistic_fluctuation(const Eigen::VectorXd& y, const Eigen::VectorXd& offset,
                                const Eigen::VectorXd& h, const Eigen::VectorXd* weights) {
  const Eigen::Index n = y.size();
  if (n == 0) throw DomainError("fit_logistic_fluctuation: empty input");
  if (offset.size() != n || h.size() != n) throw DomainError("fit_logistic_fluctuation: length mismatch");
  double eps = 0.0;
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 100; ++it) {
    double score = 0.0, info = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = weights == nullptr ? 1.0 : (*weights)[i];
      const double mu = expit(offset[i] + eps * h[i]);
      score += w * h[i] * (y[i] - mu);
      info += w * h[i] * h[i] * std::max(mu * (1.0 - mu), 1e-12);
    }
    // score is decreasing in eps: maintain a bracket for the safeguard
    if (score > 0.0) lo = std::max(lo, eps);
    else hi = std::min(hi, eps);
    if (info <= 0.0) return eps;
    double step = score / info;
    double next = eps + step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - eps) < 1e-12) return next;
    eps = next;
  }
  return eps;
}

GramCache::GramCache(const Eigen::Ref<const Eigen::MatrixXd>& X,
                     const Eigen::Ref<const Eigen::VectorXd>& y,
                     const std::vector<int>& cluster_of_row, const std::vector<int>& cluster_ids)
    : p_(static_cast<std::size_t>(X.cols())), ids_(cluster_ids) {
  if (static_cast<std::size_t>(X.rows()) != cluster_of_row.size() || y.size() != X.rows()) {
    throw DomainError("GramCache: dimension mismatch");
  }
  std::unordered_map<int, int> idx;
  for (std::size_t i = 0; i < ids_.size(); ++i) idx[ids_[i]] = static_cast<int>(i);
  const auto p = static_cast<Eigen::Index>(p_);
  gram_.assign(ids_.size(), Eigen::MatrixXd::Zero(p, p));
  xty_.assign(ids_.size(), Eigen::VectorXd::Zero(p));
  xt1_.assign(ids_.size(), Eigen::VectorXd::Zero(p));
  rows_.assign(ids_.size(), 0.0);
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    const auto it = idx.find(cluster_of_row[static_cast<std::size_t>(r)]);
    if (it == idx.end()) throw DomainError("GramCache: unknown cluster id");
    const int j = it->second;
    const auto row = X.row(r);
    gram_[static_cast<std::size_t>(j)].selfadjointView<Eigen::Lower>().rankUpdate(row.transpose());
    xty_[static_cast<std::size_t>(j)].noalias() += row.transpose() * y[r];
    xt1_[static_cast<std::size_t>(j)] += row.transpose();
    rows_[static_cast<std::size_t>(j)] += 1.0;
  }
  for (auto& g : gram_) g.triangularView<Eigen::Upper>() = g.transpose();
}

int GramCache::index_of(int cluster) const {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i] == cluster) return static_cast<int>(i);
  }
  throw DomainError("GramCache: unknown cluster id");
}

void GramCache::assemble(const std::vector<int>& clusters, double shift, double scale,
                         Eigen::MatrixXd& G, Eigen::VectorXd& b, double& n) const {
  const auto p = static_cast<Eigen::Index>(p_);
  G = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd xt1 = Eigen::VectorXd::Zero(p);
  n = 0.0;
  for (int c : clusters) {
    const auto j = static_cast<std::size_t>(index_of(c));
    G += gram_[j];
    xty += xty_[j];
    xt1 += xt1_[j];
    n += rows_[j];
  }
  b = (xty - shift * xt1) / scale;
}

}  // namespace swtl
