#pragma once

#include <Eigen/Dense>
#include <vector>

#include "swtl/glm.hpp"
#include "swtl/rng.hpp"

namespace swtl {

/// L1-penalized GLM fit; coefficients live on the original feature scale,
/// the penalty applies on the internally standardized scale, intercept
/// unpenalized.  Objective: (1/(2n)) sum (y - b0 - x'beta)^2 + lambda |beta~|_1
/// for gaussian, (1/n) quasi log-loss + lambda |beta~|_1 for binomial.
struct LassoFit {
  double intercept = 0.0;
  Eigen::VectorXd beta;
  double lambda = 0.0;
  Family family = Family::gaussian;

  Eigen::VectorXd predict(const Eigen::Ref<const Eigen::MatrixXd>& X) const;
};

double soft_threshold(double x, double lambda);

/// Smallest lambda with all slopes zero: max_k |x_k'(y - ybar)| / n on the
/// standardized scale.
double lasso_lambda_max(const Eigen::Ref<const Eigen::MatrixXd>& X,
                        const Eigen::Ref<const Eigen::VectorXd>& y);

std::vector<double> default_lambda_grid(double lambda_max, int size = 15, double min_ratio = 1e-3);

/// Gaussian path from sufficient statistics (covariance-update coordinate
/// descent): Sxx = X'X, Sxy = X'y, Sx = column sums, Sy = sum y, over n rows.
std::vector<LassoFit> lasso_path_gaussian_stats(const Eigen::MatrixXd& Sxx,
                                                const Eigen::VectorXd& Sxy,
                                                const Eigen::VectorXd& Sx, double Sy, double n,
                                                const std::vector<double>& grid);

/// Row-level path, warm-started across the grid (binomial uses IRLS + CD).
std::vector<LassoFit> lasso_path(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                 const Eigen::Ref<const Eigen::VectorXd>& y, Family family,
                                 const std::vector<double>& grid);

/// Lasso with lambda chosen by cluster-level V-fold CV (min-risk rule,
/// squared error on the response/probability scale), then refit on all rows.
LassoFit fit_lasso(const Eigen::Ref<const Eigen::MatrixXd>& X,
                   const Eigen::Ref<const Eigen::VectorXd>& y, Family family,
                   const std::vector<int>& cluster_of_row, Rng rng, int folds = 5,
                   const std::vector<double>* lambda_grid = nullptr);

}  // namespace swtl
