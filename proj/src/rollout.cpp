#include "vsop/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vsop::rollout {

RolloutBuffer::RolloutBuffer(std::size_t steps, std::size_t envs, std::size_t obs, std::size_t act)
    : num_steps(steps), num_envs(envs), obs_dim(obs), action_dim(act) {
  if (steps == 0 || envs == 0) throw std::invalid_argument("RolloutBuffer: steps and envs must be positive");
  clear(0);
}

void RolloutBuffer::clear(std::uint64_t version) {
  const std::size_t n = size();
  observations = Matrix(n, obs_dim);
  actions = Matrix(n, action_dim);
  log_probs.assign(n, 0.0);
  rewards.assign(n, 0.0);
  values.assign(n, 0.0);
  terminated.assign(n, 0);
  truncated.assign(n, 0);
  final_observations = Matrix(n, obs_dim);
  last_observations = Matrix(num_envs, obs_dim);
  next_values.assign(n, 0.0);
  bootstrapped = false;
  action_advantages = Matrix();
  candidate_actions = Matrix();
  policy_version = version;
  filled = 0;
}

AdvantageSet gae(std::span<const double> rewards, std::span<const double> values, std::span<const double> next_values,
                 std::span<const char> terminated, std::span<const char> truncated, std::size_t num_steps,
                 std::size_t num_envs, double gamma, double lambda) {
  const std::size_t n = num_steps * num_envs;
  if (rewards.size() != n || values.size() != n || next_values.size() != n || terminated.size() != n ||
      truncated.size() != n)
    throw DimensionError("gae: arrays must have num_steps * num_envs entries");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("gae: lambda must lie in [0, 1]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gae: gamma must lie in [0, 1]");
  AdvantageSet out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  for (std::size_t i = 0; i < num_envs; ++i) {
    double running = 0.0;
    for (std::size_t t = num_steps; t-- > 0;) {
      const std::size_t k = t * num_envs + i;
      const bool boundary = terminated[k] || truncated[k];
      const double delta = rewards[k] + gamma * next_values[k] - values[k];
      running = delta + (boundary ? 0.0 : gamma * lambda * running);
      out.advantages[k] = running;
      out.returns[k] = running + values[k];
    }
  }
  return out;
}

AdvantageSet compute_gae(const RolloutBuffer& buffer, double gamma, double lambda) {
  if (!buffer.bootstrapped) throw MissingBootstrapError("compute_gae: bootstrap values were not assigned");
  return gae(buffer.rewards, buffer.values, buffer.next_values, buffer.terminated, buffer.truncated, buffer.num_steps,
             buffer.num_envs, gamma, lambda);
}

std::vector<double> bootstrap_targets(const RolloutBuffer& buffer, std::span<const double> values,
                                      std::span<const double> truncation_values, std::span<const double> last_values) {
  const std::size_t n = buffer.size();
  if (values.size() != n || truncation_values.size() != n || last_values.size() != buffer.num_envs)
    throw DimensionError("bootstrap_targets: size mismatch");
  std::vector<double> next(n, 0.0);
  for (std::size_t t = 0; t < buffer.num_steps; ++t)
    for (std::size_t i = 0; i < buffer.num_envs; ++i) {
      const std::size_t k = buffer.index(t, i);
      if (buffer.terminated[k])
        next[k] = 0.0;
      else if (buffer.truncated[k])
        next[k] = truncation_values[k];
      else if (t + 1 < buffer.num_steps)
        next[k] = values[buffer.index(t + 1, i)];
      else
        next[k] = last_values[i];
    }
  return next;
}

void assign_bootstrap(RolloutBuffer& buffer, std::span<const double> values, std::span<const double> truncation_values,
                      std::span<const double> last_values) {
  buffer.next_values = bootstrap_targets(buffer, values, truncation_values, last_values);
  buffer.bootstrapped = true;
}

// ---------------------------------------------------------------- RunningMoments

RunningMoments::RunningMoments(std::size_t dim, double clip, double epsilon)
    : mean_(dim, 0.0), m2_(dim, 0.0), clip_(clip), epsilon_(epsilon) {}

void RunningMoments::update(std::span<const double> x) {
  if (x.size() != mean_.size()) throw DimensionError("RunningMoments: dimension mismatch");
  count_ += 1.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double d = x[j] - mean_[j];
    mean_[j] += d / count_;
    m2_[j] += d * (x[j] - mean_[j]);
  }
}

std::vector<double> RunningMoments::variance() const {
  std::vector<double> var(mean_.size(), 0.0);
  if (count_ > 0.0)
    for (std::size_t j = 0; j < var.size(); ++j) var[j] = std::max(0.0, m2_[j] / count_);
  return var;
}

void RunningMoments::normalize_inplace(std::span<double> x) const {
  if (x.size() != mean_.size()) throw DimensionError("RunningMoments: dimension mismatch");
  const auto var = variance();
  for (std::size_t j = 0; j < x.size(); ++j)
    x[j] = std::clamp((x[j] - mean_[j]) / std::sqrt(var[j] + epsilon_), -clip_, clip_);
}

std::vector<double> RunningMoments::normalize(std::span<const double> x) const {
  std::vector<double> out(x.begin(), x.end());
  normalize_inplace(out);
  return out;
}

void RunningMoments::restore(double count, std::vector<double> mean, std::vector<double> m2) {
  if (mean.size() != m2.size()) throw DimensionError("RunningMoments::restore: size mismatch");
  count_ = count;
  mean_ = std::move(mean);
  m2_ = std::move(m2);
}

// ---------------------------------------------------------------- RewardScaler

RewardScaler::RewardScaler(std::size_t num_envs, double gamma, bool enabled, double clip, double epsilon)
    : returns_(num_envs, 0.0), gamma_(gamma), enabled_(enabled), clip_(clip), epsilon_(epsilon), moments_(1) {}

double RewardScaler::scale(std::size_t env, double reward, bool episode_end) {
  if (!enabled_) return reward;
  returns_.at(env) = returns_[env] * gamma_ + reward;
  const double acc = returns_[env];
  moments_.update(std::span<const double>(&acc, 1));
  const double var = moments_.variance()[0];
  if (episode_end) returns_[env] = 0.0;
  return std::clamp(reward / std::sqrt(var + epsilon_), -clip_, clip_);
}

double RewardScaler::peek(double reward) const {
  if (!enabled_) return reward;
  return std::clamp(reward / std::sqrt(moments_.variance()[0] + epsilon_), -clip_, clip_);
}

}  // namespace vsop::rollout
