#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "vsop/envs.hpp"

using namespace vsop;
using namespace vsop::envs;

namespace {

// Reference CartPole Euler update transcribed independently.
std::array<double, 4> cartpole_oracle(std::array<double, 4> s, int action) {
  const double g = 9.8, mc = 1.0, mp = 0.1, len = 0.5, fm = 10.0, tau = 0.02;
  const double force = action == 1 ? fm : -fm;
  const double ct = std::cos(s[2]), st = std::sin(s[2]);
  const double temp = (force + mp * len * s[3] * s[3] * st) / (mc + mp);
  const double thacc = (g * st - ct * temp) / (len * (4.0 / 3.0 - mp * ct * ct / (mc + mp)));
  const double xacc = temp - mp * len * thacc * ct / (mc + mp);
  return {s[0] + tau * s[1], s[1] + tau * xacc, s[2] + tau * s[3], s[3] + tau * thacc};
}

}  // namespace

TEST_CASE("reset ranges") {
  Rng rng(1);
  CartPole cp;
  for (int i = 0; i < 100; ++i)
    for (double x : cp.reset(rng)) CHECK(std::abs(x) <= 0.05);
  Pendulum p;
  for (int i = 0; i < 100; ++i) {
    p.reset(rng);
    CHECK(std::abs(p.state()[0]) <= std::numbers::pi);
    CHECK(std::abs(p.state()[1]) <= 1.0);
    const auto o = p.observation();
    CHECK(o.size() == 3);
    CHECK(o[0] * o[0] + o[1] * o[1] == doctest::Approx(1.0));
  }
  MountainCarContinuous m;
  for (int i = 0; i < 100; ++i) {
    const auto o = m.reset(rng);
    CHECK(o[0] >= -0.6);
    CHECK(o[0] <= -0.4);
    CHECK(o[1] == 0.0);
  }
  Acrobot ac;
  for (int i = 0; i < 100; ++i) {
    ac.reset(rng);
    for (double x : ac.state()) CHECK(std::abs(x) <= 0.1);
    CHECK(ac.observation().size() == 6);
  }
  Rng a(7), b(7);
  CartPole c1, c2;
  CHECK(c1.reset(a) == c2.reset(b));
}

TEST_CASE("step examples") {
  Rng rng(2);
  Pendulum p;
  p.reset(rng);
  p.set_state(std::vector<double>{0.0, 0.0});
  const auto r = p.step(std::vector<double>{0.0}, rng);
  CHECK(r.reward == 0.0);

  CartPole cp;
  cp.reset(rng);
  for (int t = 0; t < 5; ++t) {
    const auto s = cp.step(std::vector<double>{static_cast<double>(t % 2)}, rng);
    if (!s.terminated) CHECK(s.reward == 1.0);
  }

  cp.reset(rng);
  cp.set_state(std::vector<double>{0, 0, 0, 0});
  const auto next = cp.step(std::vector<double>{1.0}, rng);
  const auto want = cartpole_oracle({0, 0, 0, 0}, 1);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(next.observation[i] - want[i]) < 1e-12);

  // longer trajectory against the oracle
  cp.reset(rng);
  std::array<double, 4> s;
  for (int i = 0; i < 4; ++i) s[i] = cp.state()[i];
  for (int t = 0; t < 30; ++t) {
    const int a = (t * 7) % 3 == 0 ? 1 : 0;
    const auto res = cp.step(std::vector<double>{static_cast<double>(a)}, rng);
    s = cartpole_oracle(s, a);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(res.observation[i] - s[i]) < 1e-12);
    if (res.terminated) break;
  }
  cp.reset(rng);
  CHECK_THROWS_AS(cp.step(std::vector<double>{2.0}, rng), std::out_of_range);
}

TEST_CASE("pendulum and mountain car dynamics") {
  Rng rng(3);
  Pendulum p;
  p.reset(rng);
  p.set_state(std::vector<double>{0.5, -0.3});
  const auto r = p.step(std::vector<double>{5.0}, rng);  // clipped to 2
  const double u = 2.0;
  const double cost = 0.25 + 0.1 * 0.09 + 0.001 * u * u;
  CHECK(r.reward == doctest::Approx(-cost).epsilon(1e-14));
  const double thdot = -0.3 + (15.0 * std::sin(0.5) + 3.0 * u) * 0.05;
  CHECK(p.state()[1] == doctest::Approx(thdot).epsilon(1e-14));
  CHECK(p.state()[0] == doctest::Approx(0.5 + thdot * 0.05).epsilon(1e-14));
  CHECK(angle_normalize(3 * std::numbers::pi) == doctest::Approx(-std::numbers::pi));

  MountainCarContinuous m;
  m.reset(rng);
  m.set_state(std::vector<double>{-0.5, 0.01});
  const auto mr = m.step(std::vector<double>{0.5}, rng);
  const double v = 0.01 + 0.5 * 0.0015 - 0.0025 * std::cos(-1.5);
  CHECK(m.state()[1] == doctest::Approx(v).epsilon(1e-14));
  CHECK(m.state()[0] == doctest::Approx(-0.5 + v).epsilon(1e-14));
  CHECK(mr.reward == doctest::Approx(-0.1 * 0.25).epsilon(1e-14));
  m.set_state(std::vector<double>{0.44, 0.05});
  const auto goal = m.step(std::vector<double>{1.0}, rng);
  CHECK(goal.terminated);
  CHECK(goal.reward == doctest::Approx(100.0 - 0.1));
}

TEST_CASE("time limits and termination") {
  Rng rng(4);
  struct Case {
    std::string id;
    std::size_t limit;
  };
  for (const auto& c : {Case{"CartPole-v1", 500}, Case{"Pendulum-v1", 200}, Case{"MountainCarContinuous-v0", 999},
                        Case{"Acrobot-v1", 500}}) {
    auto env = make_env(c.id);
    CHECK(env->spec().max_episode_steps == c.limit);
  }
  Pendulum p;
  p.reset(rng);
  StepResult last;
  std::size_t n = 0;
  while (true) {
    last = p.step(std::vector<double>{0.0}, rng);
    ++n;
    if (last.terminated || last.truncated) break;
  }
  CHECK(n == 200);
  CHECK(last.truncated);
  CHECK_FALSE(last.terminated);
  CHECK_THROWS_AS(p.step(std::vector<double>{0.0}, rng), EnvError);

  CartPole cp;
  cp.reset(rng);
  cp.set_state(std::vector<double>{2.39, 1.0, 0.0, 0.0});
  CHECK(cp.step(std::vector<double>{1.0}, rng).terminated);
  cp.reset(rng);
  cp.set_state(std::vector<double>{0.0, 0.0, 0.2, 1.0});
  CHECK(cp.step(std::vector<double>{1.0}, rng).terminated);
}

TEST_CASE("bounded actions keep states finite") {
  Rng rng(5);
  for (const auto& id : known_env_ids()) {
    if (id.rfind("Tabular:", 0) == 0) continue;
    auto env = make_env(id);
    env->reset(rng);
    for (int t = 0; t < 10000; ++t) {
      std::vector<double> a;
      if (env->spec().action.discrete)
        a = {static_cast<double>(rng.index(env->spec().action.n))};
      else
        a = {rng.uniform(-3, 3)};
      const auto r = env->step(a, rng);
      for (double x : r.observation) REQUIRE(std::isfinite(x));
      REQUIRE(std::isfinite(r.reward));
      if (r.terminated || r.truncated) env->reset(rng);
    }
  }
}

TEST_CASE("acrobot reward and observation") {
  Rng rng(6);
  Acrobot a;
  a.reset(rng);
  const auto r = a.step(std::vector<double>{1.0}, rng);
  CHECK(r.reward == -1.0);
  const auto st = a.state();
  const auto o = a.observation();
  CHECK(o[0] == doctest::Approx(std::cos(st[0])));
  CHECK(o[1] == doctest::Approx(std::sin(st[0])));
  CHECK(o[4] == st[2]);
  // upright: -cos(t1) - cos(t1 + t2) > 1 terminates with reward 0
  a.set_state(std::vector<double>{std::numbers::pi, 0.0, 0.0, 0.0});
  const auto up = a.step(std::vector<double>{1.0}, rng);
  CHECK(up.terminated);
  CHECK(up.reward == 0.0);
}

TEST_CASE("vectorized environments") {
  {
    VecEnv one("CartPole-v1", 1, 11);
    const auto obs = one.reset();
    CartPole single;
    Rng rng(VecEnv::sub_seed(11, 0));
    CHECK(std::vector<double>(obs.row(0).begin(), obs.row(0).end()) == single.reset(rng));
  }
  auto run = [](std::uint64_t seed) {
    VecEnv v("CartPole-v1", 16, seed);
    std::vector<double> trace;
    v.reset();
    for (int t = 0; t < 200; ++t) {
      Matrix act(16, 1);
      for (std::size_t i = 0; i < 16; ++i) act(i, 0) = (t + i) % 2;
      const auto s = v.step(act);
      trace.insert(trace.end(), s.observations.values().begin(), s.observations.values().end());
    }
    return trace;
  };
  CHECK(run(5) == run(5));

  VecEnv four("Pendulum-v1", 4, 21);
  four.reset();
  std::vector<Pendulum> singles(4);
  std::vector<Rng> rngs;
  for (std::size_t i = 0; i < 4; ++i) {
    rngs.emplace_back(VecEnv::sub_seed(21, i));
    singles[i].reset(rngs[i]);
  }
  for (int t = 0; t < 250; ++t) {
    Matrix act(4, 1);
    for (std::size_t i = 0; i < 4; ++i) act(i, 0) = std::sin(0.1 * t + i);
    const auto s = four.step(act);
    for (std::size_t i = 0; i < 4; ++i) {
      const auto r = singles[i].step(std::vector<double>{act(i, 0)}, rngs[i]);
      CHECK(r.reward == s.rewards[i]);
      CHECK(static_cast<bool>(s.truncated[i]) == r.truncated);
      if (r.truncated || r.terminated) {
        REQUIRE(s.final_observations[i].has_value());
        CHECK(*s.final_observations[i] == r.observation);
        CHECK(s.episode_returns[i].has_value());
        const auto fresh = singles[i].reset(rngs[i]);
        CHECK(std::vector<double>(s.observations.row(i).begin(), s.observations.row(i).end()) == fresh);
      } else {
        CHECK(std::vector<double>(s.observations.row(i).begin(), s.observations.row(i).end()) == r.observation);
      }
    }
  }
}

TEST_CASE("outcome model matches stepping") {
  Rng rng(8);
  CartPole cp;
  cp.reset(rng);
  const auto outs = cp.outcomes(std::vector<double>{0.0});
  REQUIRE(outs.size() == 1);
  auto copy = cp.clone();
  const auto r = copy->step(std::vector<double>{0.0}, rng);
  CHECK(outs[0].observation == r.observation);
  CHECK(outs[0].probability == 1.0);
  CHECK(cp.elapsed_steps() == 0);
}

TEST_CASE("tabular environment") {
  tabular::TabularMdp m;
  m.num_states = 2;
  m.num_actions = 2;
  m.transitions = {1, 0, 0.3, 0.7, 0, 1, 1, 0};
  m.rewards = {0.0, 1.0, 0.5, 0.25};
  m.gamma = 0.9;
  m.horizon = 5;
  m.initial = {1.0, 0.0};
  const auto path = (std::filesystem::temp_directory_path() / "vsop_env_mdp.json").string();
  tabular::save_mdp(m, path);
  auto env = make_env("Tabular:" + path);
  std::filesystem::remove(path);
  CHECK(env->spec().obs_dim == 2);
  CHECK(env->spec().max_episode_steps == 5);
  Rng rng(9);
  CHECK(env->reset(rng) == std::vector<double>{1.0, 0.0});
  const auto outs = env->outcomes(std::vector<double>{1.0});
  double total = 0.0;
  for (const auto& o : outs) {
    total += o.probability;
    CHECK(o.reward == 1.0);
  }
  CHECK(total == doctest::Approx(1.0));
  std::size_t n = 0;
  StepResult r;
  do {
    r = env->step(std::vector<double>{static_cast<double>(n % 2)}, rng);
    ++n;
  } while (!r.truncated && !r.terminated);
  CHECK(n == 5);
  CHECK_THROWS(make_env("NoSuchEnv-v0"));
}
