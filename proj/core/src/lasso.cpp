#include "swtl/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "swtl/stats.hpp"

namespace swtl {

double soft_threshold(double x, double lambda) {
  if (x > lambda) return x - lambda;
  if (x < -lambda) return x + lambda;
  return 0.0;
}

Eigen::VectorXd LassoFit::predict(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
  Eigen::VectorXd eta = (X * beta).array() + intercept;
  if (family == Family::binomial) {
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = expit(eta[i]);
  }
  return eta;
}

namespace {

struct Standardizer {
  Eigen::VectorXd mean, sd;  // sd floored so constant columns stay inert
  void from_stats(const Eigen::VectorXd& Sx, const Eigen::VectorXd& diagSxx, double n) {
    mean = Sx / n;
    sd = (diagSxx / n - mean.cwiseProduct(mean)).cwiseMax(0.0).cwiseSqrt();
    for (Eigen::Index k = 0; k < sd.size(); ++k) {
      if (sd[k] < 1e-12) sd[k] = 1.0;  // constant column: slope stays 0 via zero correlation
    }
  }
};

// Coordinate descent on the standardized gaussian problem given the
// standardized covariance C (p x p, diag 1 for non-constant cols) and
// correlations c = corr(x_k, y-part).  Returns standardized slopes.
void cd_gaussian(const Eigen::MatrixXd& C, const Eigen::VectorXd& c, double lambda,
                 Eigen::VectorXd& beta) {
  const Eigen::Index p = c.size();
  for (int sweep = 0; sweep < 1000; ++sweep) {
    double max_delta = 0.0;
    for (Eigen::Index k = 0; k < p; ++k) {
      const double grad = c[k] - C.row(k) * beta + C(k, k) * beta[k];
      const double denom = std::max(C(k, k), 1e-12);
      const double nb = soft_threshold(grad, lambda) / denom;
      max_delta = std::max(max_delta, std::fabs(nb - beta[k]));
      beta[k] = nb;
    }
    if (max_delta < 1e-10) break;
  }
}

}  // namespace

double lasso_lambda_max(const Eigen::Ref<const Eigen::MatrixXd>& X,
                        const Eigen::Ref<const Eigen::VectorXd>& y) {
  const double n = static_cast<double>(X.rows());
  if (n == 0.0) throw DomainError("lasso_lambda_max: empty design");
  Standardizer st;
  st.from_stats(X.colwise().sum(), (X.cwiseProduct(X)).colwise().sum(), n);
  const double ybar = y.sum() / n;
  double lmax = 0.0;
  for (Eigen::Index k = 0; k < X.cols(); ++k) {
    // (x_k - mean_k)'(y - ybar) = x_k'y - n mean_k ybar
    const double dot = X.col(k).dot(y) - n * st.mean[k] * ybar;
    lmax = std::max(lmax, std::fabs(dot / (n * st.sd[k])));
  }
  return lmax;
}

std::vector<double> default_lambda_grid(double lambda_max, int size, double min_ratio) {
  if (lambda_max <= 0.0) lambda_max = 1e-3;
  std::vector<double> grid(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) {
    grid[static_cast<std::size_t>(i)] =
        lambda_max * std::pow(min_ratio, static_cast<double>(i) / (size - 1));
  }
  return grid;
}

std::vector<LassoFit> lasso_path_gaussian_stats(const Eigen::MatrixXd& Sxx,
                                                const Eigen::VectorXd& Sxy,
                                                const Eigen::VectorXd& Sx, double Sy, double n,
                                                const std::vector<double>& grid) {
  const Eigen::Index p = Sxy.size();
  if (n <= 0.0) throw DomainError("lasso_path_gaussian_stats: empty data");
  Standardizer st;
  st.from_stats(Sx, Sxx.diagonal(), n);
  const double ybar = Sy / n;

  // standardized covariance and x-y correlations
  Eigen::MatrixXd C(p, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    for (Eigen::Index l = 0; l < p; ++l) {
      C(k, l) = (Sxx(k, l) / n - st.mean[k] * st.mean[l]) / (st.sd[k] * st.sd[l]);
    }
  }
  Eigen::VectorXd c(p);
  for (Eigen::Index k = 0; k < p; ++k) c[k] = (Sxy[k] / n - st.mean[k] * ybar) / st.sd[k];

  std::vector<LassoFit> path;
  path.reserve(grid.size());
  Eigen::VectorXd beta_std = Eigen::VectorXd::Zero(p);  // warm start down the grid
  for (double lambda : grid) {
    cd_gaussian(C, c, lambda, beta_std);
    LassoFit fit;
    fit.family = Family::gaussian;
    fit.lambda = lambda;
    fit.beta = beta_std.cwiseQuotient(st.sd);
    fit.intercept = ybar - st.mean.dot(fit.beta);
    path.push_back(std::move(fit));
  }
  return path;
}

namespace {

std::vector<LassoFit> lasso_path_binomial(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                          const Eigen::Ref<const Eigen::VectorXd>& y,
                                          const std::vector<double>& grid) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  const double nd = static_cast<double>(n);
  Standardizer st;
  st.from_stats(X.colwise().sum(), (X.cwiseProduct(X)).colwise().sum(), nd);
  Eigen::MatrixXd Xs(n, p);
  for (Eigen::Index k = 0; k < p; ++k) Xs.col(k) = (X.col(k).array() - st.mean[k]) / st.sd[k];

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  const double ybar = std::clamp(y.sum() / nd, 1e-6, 1.0 - 1e-6);
  double b0 = std::log(ybar / (1.0 - ybar));

  std::vector<LassoFit> path;
  path.reserve(grid.size());
  Eigen::VectorXd eta(n), w(n), z(n), r(n);
  Eigen::VectorXd beta_prev(p);
  for (double lambda : grid) {
    for (int outer = 0; outer < 12; ++outer) {
      beta_prev = beta;
      const double b0_prev = b0;
      eta.noalias() = Xs * beta;
      eta.array() += b0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = std::clamp(expit(eta[i]), 1e-8, 1.0 - 1e-8);
        const double v = mu * (1.0 - mu);
        w[i] = v;
        z[i] = eta[i] + (y[i] - mu) / v;
      }
      // penalized weighted least squares by coordinate descent
      r = z - eta;  // residual of the current (b0, beta)
      const double wsum = w.sum();
      for (int sweep = 0; sweep < 60; ++sweep) {
        double max_delta = 0.0;
        for (Eigen::Index k = 0; k < p; ++k) {
          const double vk = w.dot(Xs.col(k).cwiseProduct(Xs.col(k))) / nd;
          const double gk = w.dot(Xs.col(k).cwiseProduct(r)) / nd + vk * beta[k];
          const double nb = soft_threshold(gk, lambda) / std::max(vk, 1e-12);
          const double d = nb - beta[k];
          if (d != 0.0) {
            r -= d * Xs.col(k);
            beta[k] = nb;
            max_delta = std::max(max_delta, std::fabs(d));
          }
        }
        const double d0 = w.dot(r) / wsum;
        if (d0 != 0.0) {
          b0 += d0;
          r.array() -= d0;
          max_delta = std::max(max_delta, std::fabs(d0));
        }
        if (max_delta < 1e-8) break;
      }
      const double outer_delta =
          std::max((beta - beta_prev).cwiseAbs().maxCoeff(), std::fabs(b0 - b0_prev));
      if (outer_delta < 1e-7) break;
    }
    LassoFit fit;
    fit.family = Family::binomial;
    fit.lambda = lambda;
    fit.beta = beta.cwiseQuotient(st.sd);
    fit.intercept = b0 - st.mean.cwiseQuotient(st.sd).dot(beta);
    path.push_back(std::move(fit));
  }
  return path;
}

}  // namespace

std::vector<LassoFit> lasso_path(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                 const Eigen::Ref<const Eigen::VectorXd>& y, Family family,
                                 const std::vector<double>& grid) {
  if (X.rows() == 0 || X.cols() == 0) throw DomainError("lasso_path: empty design");
  if (y.size() != X.rows()) throw DomainError("lasso_path: y length mismatch");
  if (family == Family::gaussian) {
    return lasso_path_gaussian_stats(X.transpose() * X, X.transpose() * y, X.colwise().sum(),
                                     y.sum(), static_cast<double>(X.rows()), grid);
  }
  return lasso_path_binomial(X, y, grid);
}

LassoFit fit_lasso(const Eigen::Ref<const Eigen::MatrixXd>& X,
                   const Eigen::Ref<const Eigen::VectorXd>& y, Family family,
                   const std::vector<int>& cluster_of_row, Rng rng, int folds,
                   const std::vector<double>* lambda_grid) {
  const Eigen::Index n = X.rows();
  if (n == 0) throw DomainError("fit_lasso: empty design");
  if (static_cast<Eigen::Index>(cluster_of_row.size()) != n) {
    throw DomainError("fit_lasso: cluster vector length mismatch");
  }

  std::vector<double> grid =
      lambda_grid != nullptr ? *lambda_grid : default_lambda_grid(lasso_lambda_max(X, y));

  // cluster-level folds for the lambda CV
  std::set<int> cluster_set(cluster_of_row.begin(), cluster_of_row.end());
  std::vector<int> clusters(cluster_set.begin(), cluster_set.end());
  const int V = std::min<int>(folds, static_cast<int>(clusters.size()));
  std::map<int, int> fold_of;
  {
    // shuffled round-robin assignment
    for (std::size_t i = clusters.size() - 1; i > 0; --i) {
      const auto k = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)));
      std::swap(clusters[i], clusters[k]);
    }
    for (std::size_t i = 0; i < clusters.size(); ++i) fold_of[clusters[i]] = static_cast<int>(i % V);
  }

  std::vector<double> risk(grid.size(), 0.0);
  if (V >= 2) {
    for (int v = 0; v < V; ++v) {
      std::vector<Eigen::Index> tr, va;
      for (Eigen::Index i = 0; i < n; ++i) {
        (fold_of[cluster_of_row[static_cast<std::size_t>(i)]] == v ? va : tr).push_back(i);
      }
      if (tr.empty() || va.empty()) continue;
      Eigen::MatrixXd Xtr(static_cast<Eigen::Index>(tr.size()), X.cols());
      Eigen::VectorXd ytr(static_cast<Eigen::Index>(tr.size()));
      for (std::size_t i = 0; i < tr.size(); ++i) {
        Xtr.row(static_cast<Eigen::Index>(i)) = X.row(tr[i]);
        ytr[static_cast<Eigen::Index>(i)] = y[tr[i]];
      }
      const auto path = lasso_path(Xtr, ytr, family, grid);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        for (const auto i : va) {
          double pred = path[g].intercept + X.row(i) * path[g].beta;
          if (family == Family::binomial) pred = expit(pred);
          risk[g] += (y[i] - pred) * (y[i] - pred);
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (risk[g] < risk[best]) best = g;
  }
  auto path = lasso_path(X, y, family, grid);
  return path[best];
}

}  // namespace swtl
