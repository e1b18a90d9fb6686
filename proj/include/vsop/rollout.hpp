#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "vsop/matrix.hpp"

namespace vsop::rollout {

// Step-major storage: entry (t, i) lives at index t * num_envs + i.
struct RolloutBuffer {
  std::size_t num_steps = 0;
  std::size_t num_envs = 0;
  std::size_t obs_dim = 0;
  std::size_t action_dim = 0;

  Matrix observations;  // normalized observations fed to the networks
  Matrix actions;
  std::vector<double> log_probs;
  std::vector<double> rewards;  // after reward scaling
  std::vector<double> values;
  std::vector<char> terminated;
  std::vector<char> truncated;
  Matrix final_observations;     // normalized terminal observation where truncated, else zeros
  Matrix last_observations;      // num_envs x obs_dim, observations after the last step
  std::vector<double> next_values;  // bootstrap value for each entry
  bool bootstrapped = false;
  Matrix action_advantages;  // optional per-action clipped advantages (entries x candidates)
  Matrix candidate_actions;  // continuous candidates, entries x (candidates * action_dim)

  std::uint64_t policy_version = 0;
  std::size_t filled = 0;

  RolloutBuffer() = default;
  RolloutBuffer(std::size_t steps, std::size_t envs, std::size_t obs_dim, std::size_t action_dim);

  std::size_t size() const { return num_steps * num_envs; }
  std::size_t index(std::size_t t, std::size_t env) const { return t * num_envs + env; }
  bool full() const { return filled == size(); }
  // Zeroes every array and sets a new policy version.
  void clear(std::uint64_t version);
};

class MissingBootstrapError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct AdvantageSet {
  std::vector<double> advantages;  // h
  std::vector<double> returns;     // g = h + v
};

// next_values[k] must already hold 0 for terminated entries, v(final obs) for
// truncated ones, and v(s_{t+1}) otherwise. The recursion restarts after any
// terminated or truncated entry.
AdvantageSet gae(std::span<const double> rewards, std::span<const double> values, std::span<const double> next_values,
                 std::span<const char> terminated, std::span<const char> truncated, std::size_t num_steps,
                 std::size_t num_envs, double gamma, double lambda);

AdvantageSet compute_gae(const RolloutBuffer& buffer, double gamma, double lambda);

// Fills buffer.next_values from per-entry values, truncation bootstrap values
// (indexed like the buffer, read only where truncated) and the values of
// buffer.last_observations.
void assign_bootstrap(RolloutBuffer& buffer, std::span<const double> values, std::span<const double> truncation_values,
                      std::span<const double> last_values);
std::vector<double> bootstrap_targets(const RolloutBuffer& buffer, std::span<const double> values,
                                      std::span<const double> truncation_values, std::span<const double> last_values);

// Per-dimension Welford accumulator.
class RunningMoments {
 public:
  explicit RunningMoments(std::size_t dim = 0, double clip = 10.0, double epsilon = 1e-8);

  void update(std::span<const double> x);
  std::vector<double> normalize(std::span<const double> x) const;
  void normalize_inplace(std::span<double> x) const;

  std::size_t dim() const { return mean_.size(); }
  double count() const { return count_; }
  const std::vector<double>& mean() const { return mean_; }
  std::vector<double> variance() const;
  const std::vector<double>& m2() const { return m2_; }
  void restore(double count, std::vector<double> mean, std::vector<double> m2);

 private:
  double count_ = 0.0;
  std::vector<double> mean_;
  std::vector<double> m2_;
  double clip_;
  double epsilon_;
};

// Divides rewards by the running std of a per-env discounted return
// accumulator, then clips. The accumulator restarts at episode ends.
class RewardScaler {
 public:
  RewardScaler(std::size_t num_envs, double gamma, bool enabled = true, double clip = 10.0, double epsilon = 1e-8);

  double scale(std::size_t env, double reward, bool episode_end);
  // Scaling with the current statistics, without updating them.
  double peek(double reward) const;
  bool enabled() const { return enabled_; }
  const RunningMoments& moments() const { return moments_; }
  RunningMoments& moments() { return moments_; }

 private:
  std::vector<double> returns_;
  double gamma_;
  bool enabled_;
  double clip_;
  double epsilon_;
  RunningMoments moments_;
};

}  // namespace vsop::rollout
