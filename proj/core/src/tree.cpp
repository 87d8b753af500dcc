#include "swtl/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "swtl/stats.hpp"

namespace swtl {

void GbtParams::validate() const {
  if (rounds < 0) throw DomainError("GbtParams: rounds >= 0 required");
  if (max_depth < 1) throw DomainError("GbtParams: max_depth >= 1 required");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw DomainError("GbtParams: learning_rate in (0,1]");
  if (!(subsample > 0.0 && subsample <= 1.0)) throw DomainError("GbtParams: subsample in (0,1]");
  if (min_node < 1) throw DomainError("GbtParams: min_node >= 1 required");
}

void RfParams::validate() const {
  if (trees < 1) throw DomainError("RfParams: trees >= 1 required");
  if (min_node < 1) throw DomainError("RfParams: min_node >= 1 required");
  if (mtry < 0) throw DomainError("RfParams: mtry >= 0 required");
}

namespace {

struct SplitResult {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Best squared-error split over the candidate features: maximises
// sum^2/left_n + sum^2/right_n (constant parent term dropped).
SplitResult best_split(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::VectorXd& target,
                       const std::vector<int>& rows, const std::vector<int>& features,
                       int min_node) {
  SplitResult best;
  const auto n = rows.size();
  std::vector<std::pair<double, double>> vals(n);  // (x, g)
  double total = 0.0;
  for (int r : rows) total += target[r];
  const double parent_score = total * total / static_cast<double>(n);
  for (int f : features) {
    for (std::size_t i = 0; i < n; ++i) vals[i] = {X(rows[i], f), target[rows[i]]};
    std::sort(vals.begin(), vals.end());
    double left_sum = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left_sum += vals[i].second;
      if (vals[i].first == vals[i + 1].first) continue;  // can't split between ties
      const auto ln = static_cast<double>(i + 1);
      const auto rn = static_cast<double>(n - i - 1);
      if (ln < min_node || rn < min_node) continue;
      const double right_sum = total - left_sum;
      const double score = left_sum * left_sum / ln + right_sum * right_sum / rn;
      const double gain = score - parent_score;
      if (gain > best.gain + 1e-12) {
        best.gain = gain;
        best.feature = f;
        best.threshold = 0.5 * (vals[i].first + vals[i + 1].first);
      }
    }
  }
  return best;
}

}  // namespace

void RegressionTree::fit(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::VectorXd& target,
                         const std::vector<int>& rows, int max_depth, int min_node, int mtry,
                         Rng* rng, const Eigen::VectorXd* hessian) {
  nodes_.clear();
  const int p = static_cast<int>(X.cols());
  std::vector<int> all_features(static_cast<std::size_t>(p));
  std::iota(all_features.begin(), all_features.end(), 0);

  struct Work {
    std::vector<int> rows;
    int depth;
    int node;
  };
  auto leaf_value = [&](const std::vector<int>& rs) {
    double g = 0.0, h = 0.0;
    for (int r : rs) {
      g += target[r];
      h += hessian != nullptr ? (*hessian)[r] : 1.0;
    }
    return h > 1e-12 ? g / h : 0.0;
  };

  nodes_.push_back(Node{});
  std::vector<Work> stack{{rows, 0, 0}};
  while (!stack.empty()) {
    Work w = std::move(stack.back());
    stack.pop_back();
    Node& node = nodes_[static_cast<std::size_t>(w.node)];
    node.value = leaf_value(w.rows);
    if (w.depth >= max_depth || static_cast<int>(w.rows.size()) < 2 * min_node) continue;

    std::vector<int> features = all_features;
    if (mtry > 0 && mtry < p && rng != nullptr) {
      for (int i = 0; i < mtry; ++i) {
        const auto k = static_cast<std::size_t>(
            rng->uniform_int(i, static_cast<std::int64_t>(features.size()) - 1));
        std::swap(features[static_cast<std::size_t>(i)], features[k]);
      }
      features.resize(static_cast<std::size_t>(mtry));
    }
    const SplitResult split = best_split(X, target, w.rows, features, min_node);
    if (split.feature < 0) continue;

    std::vector<int> left, right;
    for (int r : w.rows) (X(r, split.feature) <= split.threshold ? left : right).push_back(r);
    if (left.empty() || right.empty()) continue;

    const int li = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{});
    const int ri = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{});
    Node& nd = nodes_[static_cast<std::size_t>(w.node)];  // re-fetch: vector may have grown
    nd.feature = split.feature;
    nd.threshold = split.threshold;
    nd.left = li;
    nd.right = ri;
    stack.push_back({std::move(left), w.depth + 1, li});
    stack.push_back({std::move(right), w.depth + 1, ri});
  }
}

double RegressionTree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  int i = 0;
  while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    i = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes_[static_cast<std::size_t>(i)].value;
}

void GbtModel::fit(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::VectorXd& y,
                   Family family, const GbtParams& params, Rng rng) {
  params.validate();
  if (X.rows() == 0) throw DomainError("GbtModel: empty design");
  family_ = family;
  learning_rate_ = params.learning_rate;
  trees_.clear();
  const auto n = X.rows();
  const double ybar = y.sum() / static_cast<double>(n);
  base_ = family == Family::binomial ? logit(std::clamp(ybar, 1e-6, 1.0 - 1e-6)) : ybar;

  Eigen::VectorXd f = Eigen::VectorXd::Constant(n, base_);
  Eigen::VectorXd grad(n), hess(n);
  std::vector<int> rows;
  rows.reserve(static_cast<std::size_t>(n));
  for (int round = 0; round < params.rounds; ++round) {
    if (family == Family::binomial) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = expit(f[i]);
        grad[i] = y[i] - mu;
        hess[i] = std::max(mu * (1.0 - mu), 1e-8);
      }
    } else {
      grad = y - f;
      hess.setOnes(n);
    }
    rows.clear();
    if (params.subsample < 1.0) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (rng.bernoulli(params.subsample)) rows.push_back(static_cast<int>(i));
      }
      if (rows.empty()) rows.push_back(static_cast<int>(rng.uniform_int(0, n - 1)));
    } else {
      for (Eigen::Index i = 0; i < n; ++i) rows.push_back(static_cast<int>(i));
    }
    RegressionTree tree;
    tree.fit(X, grad, rows, params.max_depth, params.min_node, 0, nullptr,
             family == Family::binomial ? &hess : nullptr);
    for (Eigen::Index i = 0; i < n; ++i) {
      f[i] += params.learning_rate * tree.predict_row(X.row(i));
    }
    trees_.push_back(std::move(tree));
  }
}

Eigen::VectorXd GbtModel::predict(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
  Eigen::VectorXd f = Eigen::VectorXd::Constant(X.rows(), base_);
  for (const auto& tree : trees_) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      f[i] += learning_rate_ * tree.predict_row(X.row(i));
    }
  }
  if (family_ == Family::binomial) {
    for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = expit(f[i]);
  }
  return f;
}

void RfModel::fit(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::VectorXd& y,
                  Family family, const RfParams& params, Rng rng) {
  params.validate();
  if (X.rows() == 0) throw DomainError("RfModel: empty design");
  family_ = family;
  trees_.clear();
  const auto n = X.rows();
  const int mtry = params.mtry > 0
                       ? params.mtry
                       : std::max(1, static_cast<int>(std::floor(std::sqrt(X.cols()))));
  for (int t = 0; t < params.trees; ++t) {
    Rng tree_rng = rng.fork("tree", static_cast<std::uint64_t>(t));
    std::vector<int> rows(static_cast<std::size_t>(n));
    for (auto& r : rows) r = static_cast<int>(tree_rng.uniform_int(0, n - 1));
    RegressionTree tree;
    tree.fit(X, y, rows, 64, params.min_node, mtry, &tree_rng);
    trees_.push_back(std::move(tree));
  }
}

Eigen::VectorXd RfModel::predict(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
  for (const auto& tree : trees_) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] += tree.predict_row(X.row(i));
  }
  out /= static_cast<double>(trees_.size());
  if (family_ == Family::binomial) out = out.cwiseMax(0.0).cwiseMin(1.0);
  return out;
}

}  // namespace swtl
