#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsop/matrix.hpp"
#include "vsop/rng.hpp"
#include "vsop/tabular.hpp"

namespace vsop::envs {

struct ActionSpace {
  bool discrete = true;
  std::size_t n = 0;         // number of actions when discrete
  std::vector<double> low;   // box bounds when continuous
  std::vector<double> high;

  // Width of the action vector: 1 for discrete spaces.
  std::size_t dim() const { return discrete ? 1 : low.size(); }
};

struct EnvSpec {
  std::string id;
  std::size_t obs_dim = 0;
  ActionSpace action;
  std::size_t max_episode_steps = 1;
};

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
};

// One possible successor of a (state, action) pair, used by model-based
// per-action advantages.
struct Outcome {
  double probability = 1.0;
  std::vector<double> observation;
  double reward = 0.0;
  bool terminated = false;
};

class EnvError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Discrete actions are passed as a single double holding the index;
// continuous actions are clipped to the box before use.
class Env {
 public:
  virtual ~Env() = default;

  virtual const EnvSpec& spec() const = 0;
  std::vector<double> reset(Rng& rng);
  StepResult step(std::span<const double> action, Rng& rng);

  // Successor distribution of taking `action` from the current state,
  // ignoring the time limit. Does not modify this environment.
  virtual std::vector<Outcome> outcomes(std::span<const double> action) const;

  virtual std::unique_ptr<Env> clone() const = 0;
  virtual std::vector<double> state() const = 0;
  virtual void set_state(std::span<const double> state) = 0;
  virtual std::vector<double> observation() const = 0;

  std::size_t elapsed_steps() const { return steps_; }
  bool needs_reset() const { return done_; }

 protected:
  virtual void reset_state(Rng& rng) = 0;
  // Advances the state; returns (reward, terminated).
  virtual std::pair<double, bool> advance(std::span<const double> action, Rng& rng) = 0;

 private:
  std::size_t steps_ = 0;
  bool done_ = true;
};

class CartPole final : public Env {
 public:
  CartPole();
  const EnvSpec& spec() const override { return spec_; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<CartPole>(*this); }
  std::vector<double> state() const override { return {s_[0], s_[1], s_[2], s_[3]}; }
  void set_state(std::span<const double> state) override;
  std::vector<double> observation() const override { return state(); }

 protected:
  void reset_state(Rng& rng) override;
  std::pair<double, bool> advance(std::span<const double> action, Rng& rng) override;

 private:
  EnvSpec spec_;
  double s_[4] = {0, 0, 0, 0};  // x, x_dot, theta, theta_dot
};

class Acrobot final : public Env {
 public:
  Acrobot();
  const EnvSpec& spec() const override { return spec_; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<Acrobot>(*this); }
  std::vector<double> state() const override { return {s_[0], s_[1], s_[2], s_[3]}; }
  void set_state(std::span<const double> state) override;
  std::vector<double> observation() const override;

 protected:
  void reset_state(Rng& rng) override;
  std::pair<double, bool> advance(std::span<const double> action, Rng& rng) override;

 private:
  EnvSpec spec_;
  double s_[4] = {0, 0, 0, 0};  // theta1, theta2, dtheta1, dtheta2
};

class Pendulum final : public Env {
 public:
  Pendulum();
  const EnvSpec& spec() const override { return spec_; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<Pendulum>(*this); }
  std::vector<double> state() const override { return {th_, thdot_}; }
  void set_state(std::span<const double> state) override;
  std::vector<double> observation() const override;

 protected:
  void reset_state(Rng& rng) override;
  std::pair<double, bool> advance(std::span<const double> action, Rng& rng) override;

 private:
  EnvSpec spec_;
  double th_ = 0.0;
  double thdot_ = 0.0;
};

class MountainCarContinuous final : public Env {
 public:
  MountainCarContinuous();
  const EnvSpec& spec() const override { return spec_; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<MountainCarContinuous>(*this); }
  std::vector<double> state() const override { return {position_, velocity_}; }
  void set_state(std::span<const double> state) override;
  std::vector<double> observation() const override { return state(); }

 protected:
  void reset_state(Rng& rng) override;
  std::pair<double, bool> advance(std::span<const double> action, Rng& rng) override;

 private:
  EnvSpec spec_;
  double position_ = 0.0;
  double velocity_ = 0.0;
};

// Finite MDP as an environment: one-hot observations, sampled transitions,
// expected rewards. Episodes end at the MDP horizon (default 200 steps).
class TabularEnv final : public Env {
 public:
  explicit TabularEnv(tabular::TabularMdp mdp, std::string id = "Tabular");
  const EnvSpec& spec() const override { return spec_; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<TabularEnv>(*this); }
  std::vector<double> state() const override { return {static_cast<double>(s_)}; }
  void set_state(std::span<const double> state) override;
  std::vector<double> observation() const override;
  std::vector<Outcome> outcomes(std::span<const double> action) const override;
  const tabular::TabularMdp& mdp() const { return *mdp_; }

 protected:
  void reset_state(Rng& rng) override;
  std::pair<double, bool> advance(std::span<const double> action, Rng& rng) override;

 private:
  std::shared_ptr<const tabular::TabularMdp> mdp_;
  EnvSpec spec_;
  std::size_t s_ = 0;
};

// "CartPole-v1", "Acrobot-v1", "Pendulum-v1", "MountainCarContinuous-v0",
// "Tabular:<path-to-json>".
std::unique_ptr<Env> make_env(const std::string& id);
std::vector<std::string> known_env_ids();

// Pendulum angle normalization ((x + pi) mod 2 pi) - pi.
double angle_normalize(double x);

struct VecStep {
  Matrix observations;  // next observations; reset observations where an episode ended
  std::vector<double> rewards;
  std::vector<char> terminated;
  std::vector<char> truncated;
  std::vector<std::optional<std::vector<double>>> final_observations;
  std::vector<std::optional<double>> episode_returns;  // set when an episode ended
  std::vector<std::optional<std::size_t>> episode_lengths;
};

// n independent copies with decorrelated seeds; auto-resets finished copies.
class VecEnv {
 public:
  VecEnv(const std::string& id, std::size_t n, std::uint64_t seed);

  const EnvSpec& spec() const { return envs_.front()->spec(); }
  std::size_t size() const { return envs_.size(); }
  Matrix reset();
  // actions: n x action_dim.
  VecStep step(const Matrix& actions);

  Env& env(std::size_t i) { return *envs_[i]; }
  const Env& env(std::size_t i) const { return *envs_[i]; }
  Matrix observations() const;

  static std::uint64_t sub_seed(std::uint64_t seed, std::size_t index) { return Rng::mix_seed(seed, index); }

 private:
  std::vector<std::unique_ptr<Env>> envs_;
  std::vector<Rng> rngs_;
  std::vector<double> running_returns_;
};

}  // namespace vsop::envs
