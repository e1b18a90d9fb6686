#include "vsop/trainer.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include "vsop/checkpoint.hpp"

namespace vsop {

std::string metrics_header() {
  return "update,global_step,train_return_mean,eval_return_mean,eval_return_std,actor_loss,critic_loss,entropy,"
         "clip_fraction,actor_grad_norm,critic_grad_norm,learning_rate,wall_time";
}

std::string format_metrics_row(const MetricsRow& row) {
  auto opt = [](const std::optional<double>& x) { return x ? format_double(*x) : std::string(); };
  std::string s = std::to_string(row.update) + "," + std::to_string(row.global_step) + "," + opt(row.train_return_mean) +
                  "," + opt(row.eval_return_mean) + "," + opt(row.eval_return_std) + ",";
  const auto& r = row.report;
  for (double x : {r.actor_loss, r.critic_loss, r.entropy, r.clip_fraction, r.actor_grad_norm, r.critic_grad_norm,
                   r.learning_rate})
    s += format_double(x) + ",";
  char wall[32];
  std::snprintf(wall, sizeof(wall), "%.3f", row.wall_time);
  return s + wall;
}

RunResult run(const TrainConfig& config, const RunOptions& options) {
  config.validate();
  const auto probe = envs::make_env(config.env_id);
  RunResult result;
  result.agent = algos::make_agent(config, probe->spec());
  auto& agent = result.agent;
  algos::Collector collector(config, agent);
  rollout::RolloutBuffer buffer(config.num_steps, config.num_envs, agent.spec.obs_dim, agent.spec.action.dim());

  std::ofstream csv;
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    save_config(config, (std::filesystem::path(options.out_dir) / "config.resolved.toml").string());
    csv.open(std::filesystem::path(options.out_dir) / "metrics.csv");
    if (!csv) throw std::runtime_error("cannot write metrics.csv in '" + options.out_dir + "'");
    csv << kMetricsSchema << '\n' << metrics_header() << '\n' << std::flush;
  }

  const auto start = std::chrono::steady_clock::now();
  const std::size_t updates = config.num_updates();
  for (std::size_t u = 0; u < updates; ++u) {
    collector.completed_returns.clear();
    collector.completed_lengths.clear();
    algos::collect(agent, collector, buffer);
    result.global_step += buffer.size();
    MetricsRow row;
    row.update = u + 1;
    row.global_step = result.global_step;
    row.report = algos::update(agent, buffer);
    if (!collector.completed_returns.empty())
      row.train_return_mean = std::accumulate(collector.completed_returns.begin(), collector.completed_returns.end(), 0.0) /
                              static_cast<double>(collector.completed_returns.size());
    const bool last = u + 1 == updates;
    if (config.eval_interval > 0 && ((u + 1) % config.eval_interval == 0 || last)) {
      Rng eval_rng(Rng::mix_seed(config.seed, 1000 + u));
      const auto ev = algos::evaluate(agent, config.env_id, config.eval_episodes, eval_rng);
      row.eval_return_mean = ev.mean;
      row.eval_return_std = ev.std;
      result.final_eval = ev.mean;
      if (!result.best_eval || ev.mean > *result.best_eval) result.best_eval = ev.mean;
      if (ev.mean >= config.target_return) result.reached_target = true;
    }
    row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (csv.is_open()) csv << format_metrics_row(row) << '\n' << std::flush;
    if (options.verbose && row.eval_return_mean)
      std::cerr << "update " << row.update << " step " << row.global_step << " eval " << *row.eval_return_mean << '\n';
    result.rows.push_back(row);
    if (result.reached_target) break;
  }
  if (!options.out_dir.empty())
    checkpoint::write_file((std::filesystem::path(options.out_dir) / "checkpoint.bin").string(),
                           checkpoint::agent_blocks(agent));
  return result;
}

}  // namespace vsop
