#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vsop/config.hpp"
#include "vsop/stats.hpp"
#include "vsop/trainer.hpp"
#include "vsop/verify.hpp"

extern char** environ;

namespace fs = std::filesystem;

namespace {

vsop::TrainConfig build_config(const std::string& config_path, const std::string& preset_name,
                               const std::vector<std::string>& overrides) {
  vsop::TrainConfig cfg;
  if (!preset_name.empty()) cfg = vsop::preset(preset_name);
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw vsop::ConfigError("cannot read config file " + config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    cfg.merge(ss.str());
  }
  for (const auto& o : overrides) cfg.apply_override(o);
  return cfg;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto dash = part.find('-');
    if (dash != std::string::npos && dash > 0) {
      const auto lo = std::stoull(part.substr(0, dash)), hi = std::stoull(part.substr(dash + 1));
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
    } else if (!part.empty()) {
      out.push_back(std::stoull(part));
    }
  }
  if (out.empty()) throw std::invalid_argument("no seeds given");
  return out;
}

int cmd_train(const std::string& config_path, const std::string& preset_name, const std::vector<std::string>& sets,
              long long seed, const std::string& out, bool quiet) {
  auto cfg = build_config(config_path, preset_name, sets);
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.validate();
  vsop::RunOptions opts;
  opts.out_dir = out;
  opts.verbose = !quiet;
  const auto res = vsop::run(cfg, opts);
  std::cout << "steps " << res.global_step;
  if (res.final_eval) std::cout << " final_eval " << vsop::format_double(*res.final_eval);
  if (res.best_eval) std::cout << " best_eval " << vsop::format_double(*res.best_eval);
  std::cout << (res.reached_target ? " target reached" : "") << "\n";
  return 0;
}

int cmd_verify(const std::string& suite, std::uint64_t seed) {
  vsop::verify::SuiteOptions opts;
  opts.seed = seed;
  bool ok = true;
  for (const auto& r : vsop::verify::run_suite(suite, opts)) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(24) << r.name << " cases " << r.cases << "  "
              << r.detail << "\n";
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

int cmd_aggregate(const std::string& runs_dir, const std::string& baseline, const std::string& curves_out,
                  bool use_median) {
  const auto runs = vsop::stats::discover_runs(runs_dir);
  if (runs.empty()) throw std::runtime_error("no runs found below " + runs_dir);
  const auto rep = vsop::stats::aggregate(runs, baseline);
  std::cout << std::left << std::setw(10) << "algorithm" << std::setw(6) << "runs" << std::setw(14)
            << (use_median ? "final_median" : "final_mean") << std::setw(12) << "final_se" << std::setw(12) << "t"
            << std::setw(10) << "dof" << std::setw(12) << "p_value" << "test\n";
  for (const auto& c : rep.comparisons) {
    const bool is_base = c.algorithm == rep.baseline;
    std::cout << std::setw(10) << c.algorithm << std::setw(6) << c.runs << std::setw(14)
              << vsop::format_double(use_median ? c.final_median : c.final_mean) << std::setw(12)
              << vsop::format_double(c.final_se);
    if (is_base)
      std::cout << "(baseline)\n";
    else
      std::cout << std::setw(12) << vsop::format_double(c.test.t) << std::setw(10) << vsop::format_double(c.test.dof)
                << std::setw(12) << vsop::format_double(c.test.p_value) << (c.paired ? "paired" : "welch") << "\n";
  }
  if (!curves_out.empty()) {
    std::ofstream out(curves_out);
    if (!out) throw std::runtime_error("cannot write " + curves_out);
    out << "algorithm,global_step,mean,standard_error,median,runs\n";
    for (const auto& [alg, curve] : rep.curves)
      for (std::size_t i = 0; i < curve.steps.size(); ++i)
        out << alg << "," << curve.steps[i] << "," << vsop::format_double(curve.mean[i]) << ","
            << vsop::format_double(curve.standard_error[i]) << "," << vsop::format_double(curve.median[i]) << ","
            << curve.runs << "\n";
  }
  return 0;
}

int cmd_preset(bool list, const std::string& show) {
  if (!show.empty()) {
    std::cout << vsop::preset(show).serialize();
    return 0;
  }
  if (list || show.empty())
    for (const auto& n : vsop::preset_names()) std::cout << n << "\n";
  return 0;
}

// One child process per seed, at most `jobs` alive at once.
int cmd_sweep(const std::string& config_path, const std::string& preset_name, const std::vector<std::string>& sets,
              const std::string& seeds_text, const std::string& out, std::size_t jobs) {
  const auto cfg = build_config(config_path, preset_name, sets);
  cfg.validate();
  const auto seeds = parse_seeds(seeds_text);
  const std::string self = fs::read_symlink("/proc/self/exe").string();
  fs::create_directories(out);
  const std::string resolved = (fs::path(out) / "sweep.base.toml").string();
  vsop::save_config(cfg, resolved);

  std::size_t next = 0, running = 0;
  int failures = 0;
  std::vector<std::pair<pid_t, std::uint64_t>> children;
  while (next < seeds.size() || running > 0) {
    while (next < seeds.size() && running < std::max<std::size_t>(jobs, 1)) {
      const auto seed = seeds[next++];
      const std::string dir = (fs::path(out) / cfg.algorithm / ("seed-" + std::to_string(seed))).string();
      std::vector<std::string> args = {self, "train", "--config", resolved, "--seed", std::to_string(seed),
                                       "--out", dir, "--quiet"};
      std::vector<char*> argv;
      for (auto& a : args) argv.push_back(a.data());
      argv.push_back(nullptr);
      pid_t pid = 0;
      if (posix_spawn(&pid, self.c_str(), nullptr, nullptr, argv.data(), environ) != 0) {
        std::cerr << "failed to launch seed " << seed << "\n";
        ++failures;
        continue;
      }
      children.emplace_back(pid, seed);
      ++running;
      std::cout << "launched seed " << seed << " -> " << dir << "\n";
    }
    if (running == 0) break;
    int status = 0;
    const pid_t done = wait(&status);
    if (done < 0) break;
    --running;
    for (const auto& [pid, seed] : children)
      if (pid == done) {
        const bool ok = WIFEXITED(status) && WEXITSTATUS(status) == 0;
        if (!ok) ++failures;
        std::cout << "seed " << seed << (ok ? " finished" : " FAILED") << "\n";
      }
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vsop: on-policy actor-critic training, verification and aggregation"};
  app.require_subcommand(1);

  std::string config_path, preset_name, out, suite = "all", runs_dir, baseline = "ppo", curves_out, show, seeds_text;
  std::vector<std::string> sets;
  long long seed = -1;
  std::uint64_t verify_seed = vsop::verify::SuiteOptions{}.seed;
  bool quiet = false, list = false, use_median = false;
  std::size_t jobs = 1;

  auto* train = app.add_subcommand("train", "run one training job");
  train->add_option("--config", config_path, "flat key = value config file");
  train->add_option("--preset", preset_name, "start from a named preset");
  train->add_option("--set", sets, "override key=value (repeatable)");
  train->add_option("--seed", seed, "seed");
  train->add_option("--out", out, "output directory")->required();
  train->add_flag("--quiet", quiet, "no per-update progress");

  auto* verify = app.add_subcommand("verify", "run numerical certification suites");
  verify->add_option("--suite", suite, "theorem | gradients | gae | spectral | all");
  verify->add_option("--seed", verify_seed, "seed for random instances");

  auto* aggregate = app.add_subcommand("aggregate", "summarize runs and test against a baseline");
  aggregate->add_option("--runs", runs_dir, "directory searched for runs")->required();
  aggregate->add_option("--baseline", baseline, "baseline algorithm");
  aggregate->add_option("--curves", curves_out, "write per-step curves to this CSV");
  aggregate->add_flag("--median", use_median, "report medians instead of means");

  auto* presets = app.add_subcommand("preset", "list or show presets");
  presets->add_flag("--list", list, "list preset names");
  presets->add_option("--show", show, "print one preset as config text");

  auto* sweep = app.add_subcommand("sweep", "train several seeds as separate processes");
  sweep->add_option("--config", config_path, "flat key = value config file");
  sweep->add_option("--preset", preset_name, "start from a named preset");
  sweep->add_option("--set", sets, "override key=value (repeatable)");
  sweep->add_option("--seeds", seeds_text, "comma list or ranges, e.g. 1-5")->required();
  sweep->add_option("--out", out, "root output directory")->required();
  sweep->add_option("--jobs", jobs, "concurrent processes");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return cmd_train(config_path, preset_name, sets, seed, out, quiet);
    if (*verify) return cmd_verify(suite, verify_seed);
    if (*aggregate) return cmd_aggregate(runs_dir, baseline, curves_out, use_median);
    if (*presets) return cmd_preset(list, show);
    if (*sweep) return cmd_sweep(config_path, preset_name, sets, seeds_text, out, jobs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
