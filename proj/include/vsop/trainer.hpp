#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vsop/algos.hpp"
#include "vsop/config.hpp"

namespace vsop {

inline constexpr const char* kMetricsSchema = "# vsop-metrics v1";

struct MetricsRow {
  std::size_t update = 0;
  std::uint64_t global_step = 0;
  std::optional<double> train_return_mean;  // episodes finished during this update's collection
  std::optional<double> eval_return_mean;
  std::optional<double> eval_return_std;
  algos::UpdateReport report;
  double wall_time = 0.0;
};

std::string metrics_header();
std::string format_metrics_row(const MetricsRow& row);

struct RunOptions {
  std::string out_dir;  // empty: keep results in memory only
  bool verbose = false;
};

struct RunResult {
  std::vector<MetricsRow> rows;
  std::optional<double> best_eval;
  std::optional<double> final_eval;
  bool reached_target = false;
  std::uint64_t global_step = 0;
  algos::AgentBundle agent;
};

// Collect/update cycles until total_timesteps (or the target return), with
// evaluation every eval_interval updates and after the last update.
RunResult run(const TrainConfig& config, const RunOptions& options = {});

}  // namespace vsop
