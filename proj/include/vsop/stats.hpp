#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace vsop::stats {

class AlignmentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Evaluation curve of one run, read from its metrics.csv.
struct RunLog {
  std::string algorithm;
  std::string env_id;
  std::uint64_t seed = 0;
  std::string path;
  std::vector<std::uint64_t> steps;
  std::vector<double> returns;
};

struct CurveSummary {
  std::vector<std::uint64_t> steps;
  std::vector<double> mean;
  std::vector<double> standard_error;  // sample std / sqrt(n); the 68% band is mean +- se
  std::vector<double> median;
  std::size_t runs = 0;
};

// Requires identical evaluation steps across runs.
CurveSummary summarize(const std::vector<RunLog>& logs);

struct TTestResult {
  double t = 0.0;
  double dof = 0.0;
  double p_value = 1.0;  // two-sided
};

// Welch's unequal-variance test. Zero pooled variance reports p = 1 when the
// means agree and p = 0 otherwise.
TTestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

double mean(const std::vector<double>& x);
double sample_variance(const std::vector<double>& x);
double median(std::vector<double> x);

// metrics.csv reader; keeps rows that carry an evaluation.
RunLog read_metrics(const std::string& csv_path);
// Every directory below `root` holding metrics.csv and config.resolved.toml.
std::vector<RunLog> discover_runs(const std::string& root);

struct Comparison {
  std::string algorithm;
  std::size_t runs = 0;
  double final_mean = 0.0;
  double final_se = 0.0;
  double final_median = 0.0;
  TTestResult test;
  bool paired = false;
};

struct AggregateReport {
  std::string baseline;
  std::map<std::string, CurveSummary> curves;
  std::vector<Comparison> comparisons;  // baseline first
};

// Groups runs by algorithm, summarizes each and tests every algorithm's final
// evaluation returns against the baseline (paired when seeds match).
AggregateReport aggregate(const std::vector<RunLog>& runs, const std::string& baseline);

}  // namespace vsop::stats
