#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "vsop/config.hpp"
#include "vsop/stats.hpp"
#include "vsop/trainer.hpp"

using namespace vsop;
using namespace vsop::stats;

namespace fs = std::filesystem;

namespace {

RunLog make_log(const std::string& alg, std::uint64_t seed, std::vector<double> returns) {
  RunLog l;
  l.algorithm = alg;
  l.seed = seed;
  for (std::size_t i = 0; i < returns.size(); ++i) l.steps.push_back(100 * (i + 1));
  l.returns = std::move(returns);
  return l;
}

}  // namespace

TEST_CASE("identical logs give zero width and p = 1") {
  std::vector<RunLog> runs = {make_log("a", 1, {1, 2, 3}), make_log("a", 2, {1, 2, 3})};
  const auto s = summarize(runs);
  for (double se : s.standard_error) CHECK(se == 0.0);
  CHECK(s.mean == std::vector<double>{1, 2, 3});
  CHECK(welch_t_test({5, 5, 5}, {5, 5, 5}).p_value == 1.0);
  CHECK(paired_t_test({5, 5, 5}, {5, 5, 5}).p_value == 1.0);
}

TEST_CASE("constant arms differing by 100 separate") {
  const auto w = welch_t_test({100, 100, 100}, {0, 0, 0});
  CHECK(w.p_value < 1e-12);
  CHECK(std::isinf(w.t));
  const auto p = paired_t_test({100, 100, 100}, {0, 0, 0});
  CHECK(p.p_value < 1e-12);
}

TEST_CASE("t statistics match hand formulas") {
  Rng rng(1);
  std::vector<double> a(20), b(20);
  for (auto& x : a) x = 1.0 + 2.0 * rng.normal();
  for (auto& x : b) x = 0.5 + 1.0 * rng.normal();
  double ma = 0, mb = 0;
  for (int i = 0; i < 20; ++i) {
    ma += a[i] / 20;
    mb += b[i] / 20;
  }
  double va = 0, vb = 0;
  for (int i = 0; i < 20; ++i) {
    va += (a[i] - ma) * (a[i] - ma) / 19;
    vb += (b[i] - mb) * (b[i] - mb) / 19;
  }
  const double se2 = va / 20 + vb / 20;
  const double t = (ma - mb) / std::sqrt(se2);
  const double dof = se2 * se2 / ((va / 20) * (va / 20) / 19 + (vb / 20) * (vb / 20) / 19);
  const auto w = welch_t_test(a, b);
  CHECK(std::abs(w.t - t) < 1e-10);
  CHECK(std::abs(w.dof - dof) < 1e-10);
  boost::math::students_t dist(dof);
  CHECK(w.p_value == doctest::Approx(2 * boost::math::cdf(boost::math::complement(dist, std::abs(t)))).epsilon(1e-10));

  double md = 0;
  for (int i = 0; i < 20; ++i) md += (a[i] - b[i]) / 20;
  double vd = 0;
  for (int i = 0; i < 20; ++i) vd += std::pow(a[i] - b[i] - md, 2) / 19;
  const auto p = paired_t_test(a, b);
  CHECK(std::abs(p.t - md / std::sqrt(vd / 20)) < 1e-10);
  CHECK(p.dof == 19);
  CHECK_THROWS(paired_t_test({1, 2}, {1}));
}

TEST_CASE("summaries") {
  std::vector<RunLog> runs = {make_log("a", 1, {1, 4}), make_log("a", 2, {3, 8}), make_log("a", 3, {2, 0})};
  const auto s = summarize(runs);
  CHECK(s.mean[0] == doctest::Approx(2.0));
  CHECK(s.standard_error[0] == doctest::Approx(1.0 / std::sqrt(3.0)));
  CHECK(s.median[1] == 4.0);
  CHECK(median({4, 1, 3, 2}) == 2.5);
  auto bad = runs;
  bad[1].steps[1] = 999;
  CHECK_THROWS_AS(summarize(bad), AlignmentError);
}

TEST_CASE("aggregate pairs matching seeds") {
  std::vector<RunLog> runs;
  for (std::uint64_t s = 1; s <= 4; ++s) {
    runs.push_back(make_log("ppo", s, {0, double(s)}));
    runs.push_back(make_log("vsop", s, {0, double(s) + 1.0 + 0.1 * s}));
  }
  const auto rep = aggregate(runs, "ppo");
  REQUIRE(rep.comparisons.size() == 2);
  CHECK(rep.comparisons[0].algorithm == "ppo");
  CHECK(rep.comparisons[1].paired);
  CHECK(rep.comparisons[1].final_mean == doctest::Approx(2.5 + 1.25));
  runs.pop_back();
  runs.push_back(make_log("vsop", 9, {0, 1}));
  CHECK_FALSE(aggregate(runs, "ppo").comparisons[1].paired);
  CHECK_THROWS(aggregate(runs, "dpo"));
}

TEST_CASE("metrics files are discovered and read") {
  const fs::path root = fs::temp_directory_path() / "vsop_stats_test";
  fs::remove_all(root);
  for (int seed = 1; seed <= 2; ++seed) {
    const fs::path dir = root / ("seed-" + std::to_string(seed));
    fs::create_directories(dir);
    TrainConfig cfg;
    cfg.algorithm = "dpo";
    cfg.seed = seed;
    save_config(cfg, (dir / "config.resolved.toml").string());
    std::ofstream out(dir / "metrics.csv");
    out << kMetricsSchema << "\n" << metrics_header() << "\n";
    MetricsRow row;
    row.update = 1;
    row.global_step = 64;
    out << format_metrics_row(row) << "\n";
    row.update = 2;
    row.global_step = 128;
    row.eval_return_mean = 10.0 * seed;
    row.eval_return_std = 0.0;
    out << format_metrics_row(row) << "\n";
  }
  const auto runs = discover_runs(root.string());
  REQUIRE(runs.size() == 2);
  CHECK(runs[0].algorithm == "dpo");
  CHECK(runs[0].steps == std::vector<std::uint64_t>{128});
  CHECK(runs[0].returns[0] + runs[1].returns[0] == 30.0);
  fs::remove_all(root);
}
