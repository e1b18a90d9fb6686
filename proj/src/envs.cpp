#include "vsop/envs.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "vsop/env_constants.hpp"

namespace vsop::envs {

namespace C = constants;

namespace {

std::size_t discrete_action(std::span<const double> action, std::size_t n) {
  if (action.size() != 1) throw std::invalid_argument("discrete action must be a single index");
  const double a = action[0];
  if (!(a >= 0.0) || a >= static_cast<double>(n) || a != std::floor(a))
    throw std::out_of_range("action index " + std::to_string(a) + " outside [0, " + std::to_string(n) + ")");
  return static_cast<std::size_t>(a);
}

std::vector<double> clipped_action(std::span<const double> action, const ActionSpace& space) {
  if (action.size() != space.low.size())
    throw std::invalid_argument("continuous action has dimension " + std::to_string(action.size()) + ", expected " +
                                std::to_string(space.low.size()));
  std::vector<double> out(action.begin(), action.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (std::isnan(out[i])) throw std::invalid_argument("continuous action is NaN");
    out[i] = std::clamp(out[i], space.low[i], space.high[i]);
  }
  return out;
}

void expect_size(std::span<const double> state, std::size_t n, const char* who) {
  if (state.size() != n) throw std::invalid_argument(std::string(who) + ": state must have " + std::to_string(n) + " entries");
}

}  // namespace

std::vector<double> Env::reset(Rng& rng) {
  reset_state(rng);
  steps_ = 0;
  done_ = false;
  return observation();
}

StepResult Env::step(std::span<const double> action, Rng& rng) {
  if (done_) throw EnvError(spec().id + ": step called before reset or after the episode ended");
  const auto [reward, terminated] = advance(action, rng);
  ++steps_;
  StepResult out;
  out.observation = observation();
  out.reward = reward;
  out.terminated = terminated;
  out.truncated = !terminated && steps_ >= spec().max_episode_steps;
  done_ = out.terminated || out.truncated;
  return out;
}

std::vector<Outcome> Env::outcomes(std::span<const double> action) const {
  auto copy = clone();
  Rng unused(0);
  const auto [reward, terminated] = copy->advance(action, unused);
  return {Outcome{1.0, copy->observation(), reward, terminated}};
}

// ---------------------------------------------------------------- CartPole

CartPole::CartPole() {
  spec_.id = "CartPole-v1";
  spec_.obs_dim = 4;
  spec_.action = ActionSpace{true, 2, {}, {}};
  spec_.max_episode_steps = C::cartpole::max_episode_steps;
}

void CartPole::set_state(std::span<const double> state) {
  expect_size(state, 4, "CartPole");
  std::copy(state.begin(), state.end(), s_);
}

void CartPole::reset_state(Rng& rng) {
  for (double& x : s_) x = rng.uniform(-C::cartpole::reset_bound, C::cartpole::reset_bound);
}

std::pair<double, bool> CartPole::advance(std::span<const double> action, Rng&) {
  using namespace C::cartpole;
  const std::size_t a = discrete_action(action, 2);
  const double force = a == 1 ? force_mag : -force_mag;
  double& x = s_[0];
  double& x_dot = s_[1];
  double& theta = s_[2];
  double& theta_dot = s_[3];
  const double costheta = std::cos(theta);
  const double sintheta = std::sin(theta);
  const double temp = (force + polemass_length * theta_dot * theta_dot * sintheta) / total_mass;
  const double thetaacc =
      (gravity * sintheta - costheta * temp) / (length * (4.0 / 3.0 - masspole * costheta * costheta / total_mass));
  const double xacc = temp - polemass_length * thetaacc * costheta / total_mass;
  x = x + tau * x_dot;
  x_dot = x_dot + tau * xacc;
  theta = theta + tau * theta_dot;
  theta_dot = theta_dot + tau * thetaacc;
  const bool terminated =
      x < -x_threshold || x > x_threshold || theta < -theta_threshold_radians || theta > theta_threshold_radians;
  return {1.0, terminated};
}

// ---------------------------------------------------------------- Acrobot

Acrobot::Acrobot() {
  spec_.id = "Acrobot-v1";
  spec_.obs_dim = 6;
  spec_.action = ActionSpace{true, 3, {}, {}};
  spec_.max_episode_steps = C::acrobot::max_episode_steps;
}

void Acrobot::set_state(std::span<const double> state) {
  expect_size(state, 4, "Acrobot");
  std::copy(state.begin(), state.end(), s_);
}

std::vector<double> Acrobot::observation() const {
  return {std::cos(s_[0]), std::sin(s_[0]), std::cos(s_[1]), std::sin(s_[1]), s_[2], s_[3]};
}

void Acrobot::reset_state(Rng& rng) {
  for (double& x : s_) x = rng.uniform(-C::acrobot::reset_bound, C::acrobot::reset_bound);
}

namespace {

using State4 = std::array<double, 4>;

State4 acrobot_dsdt(const State4& s, double torque) {
  using namespace C::acrobot;
  constexpr double pi = std::numbers::pi;
  const double m1 = link_mass_1, m2 = link_mass_2, l1 = link_length_1;
  const double lc1 = link_com_pos_1, lc2 = link_com_pos_2, i1 = link_moi, i2 = link_moi, g = gravity;
  const double theta1 = s[0], theta2 = s[1], dtheta1 = s[2], dtheta2 = s[3];
  const double d1 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2 * l1 * lc2 * std::cos(theta2)) + i1 + i2;
  const double d2 = m2 * (lc2 * lc2 + l1 * lc2 * std::cos(theta2)) + i2;
  const double phi2 = m2 * lc2 * g * std::cos(theta1 + theta2 - pi / 2.0);
  const double phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * std::sin(theta2) -
                      2 * m2 * l1 * lc2 * dtheta2 * dtheta1 * std::sin(theta2) +
                      (m1 * lc1 + m2 * l1) * g * std::cos(theta1 - pi / 2.0) + phi2;
  const double ddtheta2 = (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 * dtheta1 * std::sin(theta2) - phi2) /
                          (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
  const double ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
  return {dtheta1, dtheta2, ddtheta1, ddtheta2};
}

double wrap(double x, double lo, double hi) {
  const double diff = hi - lo;
  while (x > hi) x -= diff;
  while (x < lo) x += diff;
  return x;
}

}  // namespace

std::pair<double, bool> Acrobot::advance(std::span<const double> action, Rng&) {
  using namespace C::acrobot;
  constexpr double pi = std::numbers::pi;
  const double torque = torques[discrete_action(action, 3)];
  const State4 y0{s_[0], s_[1], s_[2], s_[3]};
  auto axpy = [](const State4& y, double h, const State4& k) {
    return State4{y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2], y[3] + h * k[3]};
  };
  const double h2 = dt / 2.0;
  const State4 k1 = acrobot_dsdt(y0, torque);
  const State4 k2 = acrobot_dsdt(axpy(y0, h2, k1), torque);
  const State4 k3 = acrobot_dsdt(axpy(y0, h2, k2), torque);
  const State4 k4 = acrobot_dsdt(axpy(y0, dt, k3), torque);
  State4 y;
  for (int i = 0; i < 4; ++i) y[i] = y0[i] + dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  s_[0] = wrap(y[0], -pi, pi);
  s_[1] = wrap(y[1], -pi, pi);
  s_[2] = std::clamp(y[2], -max_vel_1, max_vel_1);
  s_[3] = std::clamp(y[3], -max_vel_2, max_vel_2);
  const bool terminated = -std::cos(s_[0]) - std::cos(s_[1] + s_[0]) > 1.0;
  return {terminated ? 0.0 : -1.0, terminated};
}

// ---------------------------------------------------------------- Pendulum

double angle_normalize(double x) {
  constexpr double pi = std::numbers::pi;
  double m = std::fmod(x + pi, 2.0 * pi);
  if (m < 0.0) m += 2.0 * pi;
  return m - pi;
}

Pendulum::Pendulum() {
  spec_.id = "Pendulum-v1";
  spec_.obs_dim = 3;
  spec_.action = ActionSpace{false, 0, {-C::pendulum::max_torque}, {C::pendulum::max_torque}};
  spec_.max_episode_steps = C::pendulum::max_episode_steps;
}

void Pendulum::set_state(std::span<const double> state) {
  expect_size(state, 2, "Pendulum");
  th_ = state[0];
  thdot_ = state[1];
}

std::vector<double> Pendulum::observation() const { return {std::cos(th_), std::sin(th_), thdot_}; }

void Pendulum::reset_state(Rng& rng) {
  th_ = rng.uniform(-std::numbers::pi, std::numbers::pi);
  thdot_ = rng.uniform(-C::pendulum::reset_thdot, C::pendulum::reset_thdot);
}

std::pair<double, bool> Pendulum::advance(std::span<const double> action, Rng&) {
  using namespace C::pendulum;
  const double u = clipped_action(action, spec_.action)[0];
  const double th_n = angle_normalize(th_);
  const double cost = th_n * th_n + 0.1 * thdot_ * thdot_ + 0.001 * u * u;
  double newthdot = thdot_ + (3.0 * g / (2.0 * l) * std::sin(th_) + 3.0 / (m * l * l) * u) * dt;
  newthdot = std::clamp(newthdot, -max_speed, max_speed);
  th_ = th_ + newthdot * dt;
  thdot_ = newthdot;
  return {-cost, false};
}

// ---------------------------------------------------------------- MountainCarContinuous

MountainCarContinuous::MountainCarContinuous() {
  spec_.id = "MountainCarContinuous-v0";
  spec_.obs_dim = 2;
  spec_.action = ActionSpace{false, 0, {C::mountain_car::min_action}, {C::mountain_car::max_action}};
  spec_.max_episode_steps = C::mountain_car::max_episode_steps;
}

void MountainCarContinuous::set_state(std::span<const double> state) {
  expect_size(state, 2, "MountainCarContinuous");
  position_ = state[0];
  velocity_ = state[1];
}

void MountainCarContinuous::reset_state(Rng& rng) {
  position_ = rng.uniform(C::mountain_car::reset_low, C::mountain_car::reset_high);
  velocity_ = 0.0;
}

std::pair<double, bool> MountainCarContinuous::advance(std::span<const double> action, Rng&) {
  using namespace C::mountain_car;
  const double force = clipped_action(action, spec_.action)[0];
  velocity_ += force * power - hill * std::cos(3.0 * position_);
  velocity_ = std::clamp(velocity_, -max_speed, max_speed);
  position_ += velocity_;
  position_ = std::clamp(position_, min_position, max_position);
  if (position_ == min_position && velocity_ < 0.0) velocity_ = 0.0;
  const bool terminated = position_ >= goal_position && velocity_ >= goal_velocity;
  double reward = terminated ? goal_reward : 0.0;
  reward -= action_cost * force * force;
  return {reward, terminated};
}

// ---------------------------------------------------------------- TabularEnv

TabularEnv::TabularEnv(tabular::TabularMdp mdp, std::string id) {
  mdp.validate();
  mdp_ = std::make_shared<const tabular::TabularMdp>(std::move(mdp));
  spec_.id = std::move(id);
  spec_.obs_dim = mdp_->num_states;
  spec_.action = ActionSpace{true, mdp_->num_actions, {}, {}};
  spec_.max_episode_steps = mdp_->horizon ? std::max<std::size_t>(1, *mdp_->horizon) : 200;
}

void TabularEnv::set_state(std::span<const double> state) {
  expect_size(state, 1, "TabularEnv");
  if (!(state[0] >= 0.0) || state[0] >= static_cast<double>(mdp_->num_states))
    throw std::out_of_range("TabularEnv: state index out of range");
  s_ = static_cast<std::size_t>(state[0]);
}

std::vector<double> TabularEnv::observation() const {
  std::vector<double> obs(mdp_->num_states, 0.0);
  obs[s_] = 1.0;
  return obs;
}

void TabularEnv::reset_state(Rng& rng) {
  const auto mu = mdp_->start_distribution();
  std::discrete_distribution<std::size_t> pick(mu.begin(), mu.end());
  s_ = pick(rng.engine());
}

std::pair<double, bool> TabularEnv::advance(std::span<const double> action, Rng& rng) {
  const std::size_t a = discrete_action(action, mdp_->num_actions);
  const double reward = mdp_->r(s_, a);
  std::vector<double> row(mdp_->num_states);
  for (std::size_t n = 0; n < row.size(); ++n) row[n] = mdp_->p(s_, a, n);
  std::discrete_distribution<std::size_t> pick(row.begin(), row.end());
  s_ = pick(rng.engine());
  return {reward, false};
}

std::vector<Outcome> TabularEnv::outcomes(std::span<const double> action) const {
  const std::size_t a = discrete_action(action, mdp_->num_actions);
  std::vector<Outcome> out;
  for (std::size_t n = 0; n < mdp_->num_states; ++n) {
    const double p = mdp_->p(s_, a, n);
    if (p == 0.0) continue;
    std::vector<double> obs(mdp_->num_states, 0.0);
    obs[n] = 1.0;
    out.push_back(Outcome{p, std::move(obs), mdp_->r(s_, a), false});
  }
  return out;
}

// ---------------------------------------------------------------- factory

std::unique_ptr<Env> make_env(const std::string& id) {
  if (id == "CartPole-v1") return std::make_unique<CartPole>();
  if (id == "Acrobot-v1") return std::make_unique<Acrobot>();
  if (id == "Pendulum-v1") return std::make_unique<Pendulum>();
  if (id == "MountainCarContinuous-v0") return std::make_unique<MountainCarContinuous>();
  const std::string prefix = "Tabular:";
  if (id.rfind(prefix, 0) == 0) return std::make_unique<TabularEnv>(tabular::load_mdp(id.substr(prefix.size())), id);
  std::string known;
  for (const auto& k : known_env_ids()) known += " " + k;
  throw std::invalid_argument("unknown environment '" + id + "'; known:" + known);
}

std::vector<std::string> known_env_ids() {
  return {"CartPole-v1", "Acrobot-v1", "Pendulum-v1", "MountainCarContinuous-v0", "Tabular:<file>"};
}

// ---------------------------------------------------------------- VecEnv

VecEnv::VecEnv(const std::string& id, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("VecEnv: need at least one environment");
  envs_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    envs_.push_back(i == 0 ? make_env(id) : envs_.front()->clone());
    rngs_.emplace_back(sub_seed(seed, i));
  }
  running_returns_.assign(n, 0.0);
}

Matrix VecEnv::reset() {
  Matrix obs(envs_.size(), spec().obs_dim);
  for (std::size_t i = 0; i < envs_.size(); ++i) {
    const auto o = envs_[i]->reset(rngs_[i]);
    std::copy(o.begin(), o.end(), obs.row(i).begin());
    running_returns_[i] = 0.0;
  }
  return obs;
}

Matrix VecEnv::observations() const {
  Matrix obs(envs_.size(), spec().obs_dim);
  for (std::size_t i = 0; i < envs_.size(); ++i) {
    const auto o = envs_[i]->observation();
    std::copy(o.begin(), o.end(), obs.row(i).begin());
  }
  return obs;
}

VecStep VecEnv::step(const Matrix& actions) {
  const std::size_t n = envs_.size();
  if (actions.rows() != n || actions.cols() != spec().action.dim())
    throw DimensionError("VecEnv::step: actions must be " + std::to_string(n) + " x " +
                         std::to_string(spec().action.dim()));
  VecStep out;
  out.observations = Matrix(n, spec().obs_dim);
  out.rewards.resize(n);
  out.terminated.resize(n);
  out.truncated.resize(n);
  out.final_observations.resize(n);
  out.episode_returns.resize(n);
  out.episode_lengths.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    StepResult r = envs_[i]->step(actions.row(i), rngs_[i]);
    out.rewards[i] = r.reward;
    out.terminated[i] = r.terminated;
    out.truncated[i] = r.truncated;
    running_returns_[i] += r.reward;
    if (r.terminated || r.truncated) {
      out.episode_returns[i] = running_returns_[i];
      out.episode_lengths[i] = envs_[i]->elapsed_steps();
      out.final_observations[i] = std::move(r.observation);
      running_returns_[i] = 0.0;
      r.observation = envs_[i]->reset(rngs_[i]);
    }
    std::copy(r.observation.begin(), r.observation.end(), out.observations.row(i).begin());
  }
  return out;
}

}  // namespace vsop::envs
