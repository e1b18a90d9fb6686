#include "vsop/stats.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "vsop/config.hpp"

namespace vsop::stats {

double mean(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

double median(std::vector<double> x) {
  if (x.empty()) throw std::invalid_argument("median of an empty sample");
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

namespace {

double two_sided_p(double t, double dof) {
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(dof);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

TTestResult degenerate(double diff) {
  TTestResult r;
  if (diff == 0.0) {
    r.t = 0.0;
    r.p_value = 1.0;
  } else {
    r.t = diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
  }
  return r;
}

}  // namespace

TTestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch_t_test: need at least 2 samples per arm");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double va = sample_variance(a) / na, vb = sample_variance(b) / nb;
  const double diff = mean(a) - mean(b);
  if (va + vb == 0.0) {
    auto r = degenerate(diff);
    r.dof = na + nb - 2.0;
    return r;
  }
  TTestResult r;
  r.t = diff / std::sqrt(va + vb);
  r.dof = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.p_value = two_sided_p(r.t, r.dof);
  return r;
}

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw AlignmentError("paired_t_test: samples differ in length");
  if (a.size() < 2) throw std::invalid_argument("paired_t_test: need at least 2 pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double n = static_cast<double>(d.size());
  const double var = sample_variance(d);
  const double m = mean(d);
  if (var == 0.0) {
    auto r = degenerate(m);
    r.dof = n - 1.0;
    return r;
  }
  TTestResult r;
  r.t = m / std::sqrt(var / n);
  r.dof = n - 1.0;
  r.p_value = two_sided_p(r.t, r.dof);
  return r;
}

CurveSummary summarize(const std::vector<RunLog>& logs) {
  if (logs.empty()) throw std::invalid_argument("summarize: no runs");
  CurveSummary s;
  s.steps = logs.front().steps;
  s.runs = logs.size();
  for (const auto& log : logs)
    if (log.steps != s.steps) throw AlignmentError("evaluation steps differ between runs ('" + log.path + "')");
  for (std::size_t j = 0; j < s.steps.size(); ++j) {
    std::vector<double> col;
    for (const auto& log : logs) col.push_back(log.returns[j]);
    s.mean.push_back(mean(col));
    s.standard_error.push_back(std::sqrt(sample_variance(col) / static_cast<double>(col.size())));
    s.median.push_back(median(col));
  }
  return s;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

RunLog read_metrics(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open '" + csv_path + "'");
  RunLog log;
  log.path = csv_path;
  std::string line;
  std::vector<std::string> header;
  std::size_t step_col = 0, eval_col = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto cells = split_csv(line);
    if (header.empty()) {
      header = cells;
      const auto find = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw std::runtime_error(csv_path + ": missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
      };
      step_col = find("global_step");
      eval_col = find("eval_return_mean");
      continue;
    }
    if (cells.size() <= eval_col || cells[eval_col].empty()) continue;
    log.steps.push_back(std::stoull(cells[step_col]));
    log.returns.push_back(parse_double(cells[eval_col]));
  }
  const auto cfg_path = std::filesystem::path(csv_path).parent_path() / "config.resolved.toml";
  if (std::filesystem::exists(cfg_path)) {
    const auto cfg = load_config(cfg_path.string());
    log.algorithm = cfg.algorithm;
    log.env_id = cfg.env_id;
    log.seed = cfg.seed;
  }
  return log;
}

std::vector<RunLog> discover_runs(const std::string& root) {
  std::vector<std::string> paths;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root))
    if (entry.is_regular_file() && entry.path().filename() == "metrics.csv") paths.push_back(entry.path().string());
  std::sort(paths.begin(), paths.end());
  std::vector<RunLog> out;
  for (const auto& p : paths) out.push_back(read_metrics(p));
  return out;
}

AggregateReport aggregate(const std::vector<RunLog>& runs, const std::string& baseline) {
  std::map<std::string, std::vector<RunLog>> groups;
  for (const auto& r : runs) groups[r.algorithm].push_back(r);
  if (!groups.count(baseline)) throw std::invalid_argument("no runs found for baseline algorithm '" + baseline + "'");
  AggregateReport report;
  report.baseline = baseline;
  auto finals = [](const std::vector<RunLog>& g) {
    std::map<std::uint64_t, double> by_seed;
    for (const auto& r : g) {
      if (r.returns.empty()) throw AlignmentError("run '" + r.path + "' has no evaluation rows");
      by_seed[r.seed] = r.returns.back();
    }
    return by_seed;
  };
  const auto base = finals(groups[baseline]);
  std::vector<std::string> order{baseline};
  for (const auto& [alg, g] : groups)
    if (alg != baseline) order.push_back(alg);
  for (const auto& alg : order) {
    const auto& g = groups[alg];
    report.curves[alg] = summarize(g);
    const auto f = finals(g);
    std::vector<double> vals;
    for (const auto& [seed, v] : f) vals.push_back(v);
    Comparison c;
    c.algorithm = alg;
    c.runs = vals.size();
    c.final_mean = mean(vals);
    c.final_se = std::sqrt(sample_variance(vals) / static_cast<double>(vals.size()));
    c.final_median = median(vals);
    if (alg != baseline && vals.size() >= 2 && base.size() >= 2) {
      std::set<std::uint64_t> sa, sb;
      for (const auto& [s, v] : f) sa.insert(s);
      for (const auto& [s, v] : base) sb.insert(s);
      std::vector<double> bvals;
      for (const auto& [s, v] : base) bvals.push_back(v);
      if (sa == sb) {
        c.paired = true;
        c.test = paired_t_test(vals, bvals);
      } else {
        c.test = welch_t_test(vals, bvals);
      }
    }
    report.comparisons.push_back(c);
  }
  return report;
}

}  // namespace vsop::stats
