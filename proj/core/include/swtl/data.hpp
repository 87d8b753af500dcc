#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace swtl {

/// One record O_ijt = (W, A, S, Delta, Delta*Y).
struct Observation {
  int cluster_id = 0;  // 1..J
  int period = 0;      // 1..T
  double w1 = 0.0;
  double w2 = 0.0;  // binary coded as 0/1
  double w3 = 0.0;  // in [0,1]
  int a = 0;
  double s = 0.0;
  int delta = 0;
  double y = 0.0;  // meaningful only when delta == 1
};

struct DgpTruth {
  double psi_star = 0.0;
  std::uint64_t config_hash = 0;
};

/// How the treatment-assignment law P(A=1 | t) is known.
enum class DesignLaw {
  uniform_crossover,  // tau_j ~ Uniform{2..T}: P(A=1|t) = (t-1)/(T-1)
  fixed_waves,        // fixed wave allocation: P(A=1|t) = share of clusters with tau <= t
  empirical,          // loaded data: realized share of clusters with tau <= t
};

class TrialDataset {
 public:
  std::vector<Observation> observations;
  std::map<int, int> crossover_times;  // cluster_id -> tau_j (T+1 if never treated)
  std::optional<DgpTruth> dgp_truth;
  int num_periods = 0;
  DesignLaw design = DesignLaw::uniform_crossover;

  std::vector<int> cluster_ids() const;
  std::size_t size() const { return observations.size(); }

  /// Design propensity P(A=1 | period = t) under the dataset's assignment law.
  double design_propensity(int t) const;

  /// Copy with one cluster removed (for jackknife deletions).
  TrialDataset without_cluster(int cluster_id) const;

  /// Consistency checks: contiguous clusters, period range, a/delta coding,
  /// y present iff delta=1.  Throws DomainError on violation.
  void validate() const;
};

double empirical_censoring_rate(const TrialDataset& data);

/// CSV schema: header cluster_id,period,w1,w2,w3,a,s,delta,y ; y empty when delta=0.
void write_csv(const TrialDataset& data, const std::string& path);
TrialDataset read_csv(const std::string& path);

}  // namespace swtl
