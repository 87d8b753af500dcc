#pragma once

#include <Eigen/Dense>
#include <vector>

#include "swtl/glm.hpp"
#include "swtl/rng.hpp"

namespace swtl {

struct GbtParams {
  int rounds = 50;
  int max_depth = 3;
  double learning_rate = 0.1;
  double subsample = 0.8;
  int min_node = 5;

  void validate() const;
};

struct RfParams {
  int trees = 500;
  int mtry = 0;  // 0 -> floor(sqrt(p))
  int min_node = 5;

  void validate() const;
};

/// Axis-aligned regression tree (squared-error splits).
class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;
    int left = -1, right = -1;
    double value = 0.0;
  };

  /// Fits on the given rows; leaf values are the target means unless
  /// hessian is supplied, in which case leaves carry sum(target)/sum(hessian)
  /// (the Newton step used by boosting on the logit scale).
  void fit(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::VectorXd& target,
           const std::vector<int>& rows, int max_depth, int min_node, int mtry, Rng* rng,
           const Eigen::VectorXd* hessian = nullptr);

  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  std::vector<Node> nodes_;
};

/// Gradient-boosted trees: squared-error gradients for gaussian,
/// log-loss gradients with Newton leaf values for binomial.
class GbtModel {
 public:
  void fit(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::VectorXd& y, Family family,
           const GbtParams& params, Rng rng);
  Eigen::VectorXd predict(const Eigen::Ref<const Eigen::MatrixXd>& X) const;

 private:
  Family family_ = Family::gaussian;
  double base_ = 0.0;
  double learning_rate_ = 0.1;
  std::vector<RegressionTree> trees_;
};

/// Random forest regression (bootstrap rows, mtry features per split,
/// leaf means); binomial responses are handled as 0/1 regression with
/// predictions clamped to [0,1].
class RfModel {
 public:
  void fit(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::VectorXd& y, Family family,
           const RfParams& params, Rng rng);
  Eigen::VectorXd predict(const Eigen::Ref<const Eigen::MatrixXd>& X) const;

 private:
  Family family_ = Family::gaussian;
  std::vector<RegressionTree> trees_;
};

}  // namespace swtl
