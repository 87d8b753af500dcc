#include "swtl/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "swtl/csv.hpp"
#include "swtl/stats.hpp"

namespace swtl {

std::vector<int> TrialDataset::cluster_ids() const {
  std::set<int> ids;
  for (const auto& o : observations) ids.insert(o.cluster_id);
  return {ids.begin(), ids.end()};
}

double TrialDataset::design_propensity(int t) const {
  if (t < 1 || t > num_periods) throw DomainError("design_propensity: period out of range");
  if (design == DesignLaw::uniform_crossover) {
    return static_cast<double>(t - 1) / static_cast<double>(num_periods - 1);
  }
  // fixed waves / loaded data: share of clusters with tau_j <= t
  if (crossover_times.empty()) throw DomainError("design_propensity: no crossover times");
  std::size_t crossed = 0;
  for (const auto& [id, tau] : crossover_times) {
    (void)id;
    if (tau <= t) ++crossed;
  }
  return static_cast<double>(crossed) / static_cast<double>(crossover_times.size());
}

TrialDataset TrialDataset::without_cluster(int cluster_id) const {
  TrialDataset out;
  out.num_periods = num_periods;
  out.design = design;
  out.dgp_truth = dgp_truth;
  out.observations.reserve(observations.size());
  for (const auto& o : observations) {
    if (o.cluster_id != cluster_id) out.observations.push_back(o);
  }
  out.crossover_times = crossover_times;
  out.crossover_times.erase(cluster_id);
  return out;
}

void TrialDataset::validate() const {
  if (observations.empty()) throw DomainError("dataset: no observations");
  for (const auto& o : observations) {
    if (o.period < 1 || o.period > num_periods) throw DomainError("dataset: period out of range");
    if (o.a != 0 && o.a != 1) throw DomainError("dataset: a must be 0/1");
    if (o.delta != 0 && o.delta != 1) throw DomainError("dataset: delta must be 0/1");
    if (o.period == 1 && o.a == 1) throw DomainError("dataset: a must be 0 at period 1");
    if (o.delta == 1 && !std::isfinite(o.y)) throw DomainError("dataset: y missing with delta=1");
  }
}

double empirical_censoring_rate(const TrialDataset& data) {
  if (data.observations.empty()) throw DomainError("empirical_censoring_rate: empty dataset");
  std::size_t censored = 0;
  for (const auto& o : data.observations) censored += (o.delta == 0);
  return static_cast<double>(censored) / static_cast<double>(data.observations.size());
}

void write_csv(const TrialDataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
  if (!out) throw DomainError("write_csv: cannot open " + path);
  out << "cluster_id,period,w1,w2,w3,a,s,delta,y\n";
  for (const auto& o : data.observations) {
    out << o.cluster_id << ',' << o.period << ',' << format_double(o.w1) << ','
        << format_double(o.w2) << ',' << format_double(o.w3) << ',' << o.a << ','
        << format_double(o.s) << ',' << o.delta << ',';
    if (o.delta == 1) out << format_double(o.y);
    out << '\n';
  }
}

namespace {

double parse_double_field(const std::string& s, std::size_t row, const char* name) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) {
    throw CsvParseError{row, std::string("bad value for ") + name + ": '" + s + "'"};
  }
  return v;
}

int parse_int_field(const std::string& s, std::size_t row, const char* name) {
  int v = 0;
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) {
    throw CsvParseError{row, std::string("bad value for ") + name + ": '" + s + "'"};
  }
  return v;
}

}  // namespace

TrialDataset read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("read_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DomainError("read_csv: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "cluster_id,period,w1,w2,w3,a,s,delta,y") {
    throw CsvParseError{0, "unexpected header: '" + line + "'"};
  }
  TrialDataset data;
  data.design = DesignLaw::empirical;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto f = split_csv_line(line);
    if (f.size() != 9) throw CsvParseError{row, "expected 9 fields"};
    Observation o;
    o.cluster_id = parse_int_field(f[0], row, "cluster_id");
    o.period = parse_int_field(f[1], row, "period");
    o.w1 = parse_double_field(f[2], row, "w1");
    o.w2 = parse_double_field(f[3], row, "w2");
    o.w3 = parse_double_field(f[4], row, "w3");
    o.a = parse_int_field(f[5], row, "a");
    o.s = parse_double_field(f[6], row, "s");
    o.delta = parse_int_field(f[7], row, "delta");
    if (o.delta == 1) {
      if (f[8].empty()) throw CsvParseError{row, "y empty with delta=1"};
      o.y = parse_double_field(f[8], row, "y");
    } else {
      if (!f[8].empty()) throw CsvParseError{row, "y must be empty with delta=0"};
      o.y = std::numeric_limits<double>::quiet_NaN();
    }
    data.observations.push_back(o);
    data.num_periods = std::max(data.num_periods, o.period);
  }
  if (data.observations.empty()) throw DomainError("read_csv: no data rows");
  // derive crossover times from the treatment pattern
  for (const auto& o : data.observations) {
    auto it = data.crossover_times.find(o.cluster_id);
    if (it == data.crossover_times.end()) {
      data.crossover_times[o.cluster_id] = data.num_periods + 1;
    }
  }
  for (const auto& o : data.observations) {
    if (o.a == 1) {
      auto& tau = data.crossover_times[o.cluster_id];
      tau = std::min(tau, o.period);
    }
  }
  data.validate();
  return data;
}

}  // namespace swtl
