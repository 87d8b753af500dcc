#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "swtl/data.hpp"
#include "swtl/glm.hpp"
#include "swtl/lasso.hpp"
#include "swtl/rng.hpp"
#include "swtl/tree.hpp"

namespace swtl {

enum class TimeEncoding { none, continuous, indicators, both };

/// Deterministic Observation -> feature-vector map.  Layout: intercept,
/// [s], a, w1, w2, w3, then the time encoding; period indicators use
/// period 1 as the reference level (T-1 columns).
struct FeatureMap {
  int T = 7;
  bool include_s = true;
  TimeEncoding time = TimeEncoding::both;

  std::vector<std::string> names() const;
  int dim() const;
  void encode(const Observation& o, double* out) const;
};

/// Columns of the master matrix (full layout: intercept, s, a, w1, w2, w3,
/// t continuous, indicators t=2..T).
struct MasterColumns {
  static constexpr int kIntercept = 0;
  static constexpr int kS = 1;
  static constexpr int kA = 2;
  static constexpr int kW1 = 3;
  static constexpr int kW2 = 4;
  static constexpr int kW3 = 5;
  static constexpr int kTcont = 6;
  static constexpr int kIndFirst = 7;  // indicator for period 2
};

/// Which treatment version of the master matrix to evaluate on.
enum class ArmView { observed, a1, a0 };

/// Full-layout feature matrices for a dataset, with counterfactual copies
/// where the treatment column is forced to 1 or 0.
struct MasterMatrix {
  Eigen::MatrixXd obs, a1, a0;
  std::vector<int> cluster_of_row;
  std::vector<int> clusters;  // unique, ascending
  int T = 0;

  static MasterMatrix build(const TrialDataset& data);
  const Eigen::MatrixXd& view(ArmView v) const {
    return v == ArmView::observed ? obs : (v == ArmView::a1 ? a1 : a0);
  }
  int cols() const { return static_cast<int>(obs.cols()); }
};

enum class LearnerKind { intercept, glm, lasso, gbt, rf };

struct LearnerSpec {
  LearnerKind kind = LearnerKind::glm;
  Family family = Family::gaussian;
  TimeEncoding time = TimeEncoding::both;
  GbtParams gbt;
  RfParams rf;
  int lasso_grid_size = 15;
  double lasso_min_ratio = 1e-3;

  void validate() const;
  std::string name() const;
};

/// One fitted library member; predictions are deterministic and lie in
/// [0,1] for binomial family.
struct FittedLearner {
  LearnerSpec spec;
  std::vector<int> cols;  // master columns consumed (lasso/trees exclude the intercept)
  GlmFit glm;
  LassoFit lasso;
  GbtModel gbt;
  RfModel rf;
  double constant = 0.0;  // intercept-only learner

  void predict(const MasterMatrix& mm, ArmView view, const std::vector<int>& rows,
               Eigen::VectorXd& out) const;
};

struct EnsembleFit {
  std::vector<FittedLearner> members;
  std::vector<double> weights;   // simplex: >= 0, sums to 1
  std::vector<double> cv_risks;  // per member; ensemble risk in sl_risk
  double sl_risk = 0.0;

  void predict(const MasterMatrix& mm, ArmView view, const std::vector<int>& rows,
               Eigen::VectorXd& out) const;
};

struct FoldPlan {
  std::vector<std::vector<int>> folds;  // cluster ids per fold
  std::map<int, int> fold_of;
  int V = 0;
};

/// Exhaustive disjoint partition of clusters into V folds, sizes differing
/// by at most one.  V = 0 applies the default rule: V = J when J < 20,
/// else V = 10 (capped at J).
FoldPlan cluster_kfold(const std::vector<int>& clusters, int V, Rng rng);

struct TruncationBounds {
  double lo = 1e-4;
  double hi = 1.0 - 1e-4;
  double apply(double p) const { return p < lo ? lo : (p > hi ? hi : p); }
};

/// Winsorization bounds: 1st/99th empirical percentiles, additionally
/// floored at 1e-4 and capped at 1 - 1e-4.
TruncationBounds propensity_bounds(const std::vector<double>& p);
std::vector<double> truncate_propensity(const std::vector<double>& p);

/// X-side per-cluster sufficient statistics (response-free), built once and
/// combined with per-response blocks for gaussian fits over cluster subsets.
class ClusterGramX {
 public:
  ClusterGramX() = default;
  ClusterGramX(const Eigen::Ref<const Eigen::MatrixXd>& X, const std::vector<int>& rows,
               const std::vector<int>& cluster_of_row);
  void assemble(const std::vector<int>& clusters, const std::map<int, Eigen::VectorXd>& xty,
                Eigen::MatrixXd& G, Eigen::VectorXd& b, double& n) const;
  const std::vector<int>& ids() const { return ids_; }

 private:
  std::vector<int> ids_;
  std::map<int, std::size_t> index_;
  std::vector<Eigen::MatrixXd> gram_;
  std::vector<double> rows_;
};

std::map<int, Eigen::VectorXd> cluster_xty(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                           const std::vector<int>& rows,
                                           const Eigen::VectorXd& y,
                                           const std::vector<int>& cluster_of_row);

/// One nuisance estimation problem: training rows of a master matrix with a
/// response and family.  include_s controls whether the surrogate enters the
/// candidates' designs (the Block II scenario-(ii) misspecification drops it).
struct NuisanceProblem {
  const MasterMatrix* mm = nullptr;
  std::vector<int> rows;
  Eigen::VectorXd y;
  Family family = Family::gaussian;
  bool include_s = true;
  const ClusterGramX* gram = nullptr;  // optional gaussian fast path (full column set)
};

/// Non-negative least squares over the simplex by projected gradient,
/// followed by normalization.  Identical prediction columns tie-break to
/// the lowest index.
Eigen::VectorXd nnls_simplex(const Eigen::MatrixXd& P, const Eigen::VectorXd& y);

/// Super Learner: out-of-fold predictions per candidate on cluster-level
/// folds, NNLS meta-learner, members refit on all rows.
EnsembleFit super_learner(const NuisanceProblem& prob, const std::vector<LearnerSpec>& library,
                          const FoldPlan& inner_folds, Rng rng);

/// Candidate libraries.  "minimal" is the default harness library; "full"
/// adds the boosted-tree and random-forest members.
std::vector<LearnerSpec> minimal_library(Family family);
std::vector<LearnerSpec> full_library(Family family);

}  // namespace swtl
