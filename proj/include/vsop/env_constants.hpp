#pragma once

// Physical constants of the classic-control tasks. Values are copied from the
// Gym/Gymnasium classic_control sources named next to each group.

namespace vsop::envs::constants {

// gymnasium/envs/classic_control/cartpole.py (CartPole-v1)
namespace cartpole {
inline constexpr double gravity = 9.8;
inline constexpr double masscart = 1.0;
inline constexpr double masspole = 0.1;
inline constexpr double total_mass = masspole + masscart;
inline constexpr double length = 0.5;  // half the pole length
inline constexpr double polemass_length = masspole * length;
inline constexpr double force_mag = 10.0;
inline constexpr double tau = 0.02;
inline constexpr double theta_threshold_radians = 12.0 * 2.0 * 3.141592653589793 / 360.0;
inline constexpr double x_threshold = 2.4;
inline constexpr double reset_bound = 0.05;
inline constexpr int max_episode_steps = 500;
}  // namespace cartpole

// gymnasium/envs/classic_control/pendulum.py (Pendulum-v1)
namespace pendulum {
inline constexpr double max_speed = 8.0;
inline constexpr double max_torque = 2.0;
inline constexpr double dt = 0.05;
inline constexpr double g = 10.0;
inline constexpr double m = 1.0;
inline constexpr double l = 1.0;
inline constexpr double reset_thdot = 1.0;
inline constexpr int max_episode_steps = 200;
}  // namespace pendulum

// gymnasium/envs/classic_control/continuous_mountain_car.py (MountainCarContinuous-v0)
namespace mountain_car {
inline constexpr double min_action = -1.0;
inline constexpr double max_action = 1.0;
inline constexpr double min_position = -1.2;
inline constexpr double max_position = 0.6;
inline constexpr double max_speed = 0.07;
inline constexpr double goal_position = 0.45;
inline constexpr double goal_velocity = 0.0;
inline constexpr double power = 0.0015;
inline constexpr double hill = 0.0025;  // coefficient of cos(3 x)
inline constexpr double goal_reward = 100.0;
inline constexpr double action_cost = 0.1;
inline constexpr double reset_low = -0.6;
inline constexpr double reset_high = -0.4;
inline constexpr int max_episode_steps = 999;
}  // namespace mountain_car

// gymnasium/envs/classic_control/acrobot.py (Acrobot-v1, "book" dynamics)
namespace acrobot {
inline constexpr double dt = 0.2;
inline constexpr double link_length_1 = 1.0;
inline constexpr double link_length_2 = 1.0;
inline constexpr double link_mass_1 = 1.0;
inline constexpr double link_mass_2 = 1.0;
inline constexpr double link_com_pos_1 = 0.5;
inline constexpr double link_com_pos_2 = 0.5;
inline constexpr double link_moi = 1.0;
inline constexpr double gravity = 9.8;
inline constexpr double max_vel_1 = 4.0 * 3.141592653589793;
inline constexpr double max_vel_2 = 9.0 * 3.141592653589793;
inline constexpr double torques[3] = {-1.0, 0.0, 1.0};
inline constexpr double reset_bound = 0.1;
inline constexpr int max_episode_steps = 500;
}  // namespace acrobot

}  // namespace vsop::envs::constants
