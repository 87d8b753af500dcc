#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace swtl {

enum class Family { gaussian, binomial };

struct GlmFit {
  Eigen::VectorXd beta;        // full length; aliased columns carry 0
  std::vector<int> aliased;    // dropped (rank-deficient) column indices
  Eigen::VectorXd se;          // model-based SEs; 0 for aliased columns
  int iterations = 0;
  bool converged = true;
  Family family = Family::gaussian;

  /// Linear predictor for one row (no family transform).
  double linear(const Eigen::Ref<const Eigen::RowVectorXd>& x) const { return x * beta; }
  /// Family mean for a matrix of rows; offset optional.
  Eigen::VectorXd predict(const Eigen::Ref<const Eigen::MatrixXd>& X,
                          const Eigen::VectorXd* offset = nullptr) const;
};

/// Weighted GLM on the design matrix as given (no implicit intercept).
/// gaussian: weighted least squares.  binomial: IRLS maximum quasi-likelihood
/// with responses in [0,1]; converged when the max coefficient change drops
/// below 1e-10 or after 100 iterations.  Rank-deficient columns are dropped
/// and recorded, not an error.
GlmFit fit_glm(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
               Family family, const Eigen::VectorXd* weights = nullptr,
               const Eigen::VectorXd* offset = nullptr,
               const Eigen::VectorXd* warm_start = nullptr);

/// Gaussian GLM from sufficient statistics: G = X'X, b = X'y.
GlmFit fit_glm_gram(const Eigen::Ref<const Eigen::MatrixXd>& G,
                    const Eigen::Ref<const Eigen::VectorXd>& b);

/// One-parameter logistic fluctuation: response in [0,1], fixed offset,
/// single covariate h, optional weights.  Returns epsilon solving
/// sum w_i h_i (y_i - expit(offset_i + eps h_i)) = 0.
double fit_logistic_fluctuation(const Eigen::VectorXd& y, const Eigen::VectorXd& offset,
                                const Eigen::VectorXd& h, const Eigen::VectorXd* weights = nullptr);

/// Per-cluster sufficient statistics for gaussian fits over arbitrary
/// cluster subsets: X'X, X'y and X'1 per cluster, assembled by summation.
/// An affine response transform y' = (y - shift)/scale is folded in
/// algebraically so outcome rescaling needs no rebuild.
class GramCache {
 public:
  GramCache(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
            const std::vector<int>& cluster_of_row, const std::vector<int>& cluster_ids);

  /// Sum of cluster blocks for the given clusters with response transform.
  void assemble(const std::vector<int>& clusters, double shift, double scale, Eigen::MatrixXd& G,
                Eigen::VectorXd& b, double& n) const;

  int dim() const { return static_cast<int>(p_); }

 private:
  std::size_t p_ = 0;
  std::vector<int> ids_;
  std::vector<Eigen::MatrixXd> gram_;   // X_j' X_j
  std::vector<Eigen::VectorXd> xty_;    // X_j' y_j
  std::vector<Eigen::VectorXd> xt1_;    // X_j' 1
  std::vector<double> rows_;
  int index_of(int cluster) const;
};

}  // namespace swtl
