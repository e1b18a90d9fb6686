#include "doctest.h"

#include <cmath>
#include <numeric>
#include <vector>

#include "vsop/algos.hpp"
#include "vsop/config.hpp"
#include "vsop/distributions.hpp"
#include "vsop/envs.hpp"
#include "vsop/tabular.hpp"
#include "vsop/trainer.hpp"

using namespace vsop;
using algos::AgentBundle;

namespace {

TrainConfig small_config(const std::string& alg, const std::string& env = "CartPole-v1") {
  TrainConfig c;
  c.algorithm = alg;
  c.env_id = env;
  c.num_envs = 2;
  c.num_steps = 16;
  c.num_minibatches = 4;
  c.update_epochs = 2;
  c.total_timesteps = 32 * 4;
  c.hidden_width = 16;
  c.eval_interval = 0;
  c.learning_rate = 1e-3;
  c.seed = 3;
  return c;
}

struct Setup {
  AgentBundle agent;
  algos::Collector collector;
  rollout::RolloutBuffer buffer;

  explicit Setup(const TrainConfig& c)
      : agent(algos::make_agent(c, envs::make_env(c.env_id)->spec())),
        collector(c, agent),
        buffer(c.num_steps, c.num_envs, agent.spec.obs_dim, agent.spec.action.dim()) {}
};

std::vector<double> flat_params(const nn::Mlp& net) {
  std::vector<double> out;
  for (const auto& l : net.layers()) {
    out.insert(out.end(), l.weight.values().begin(), l.weight.values().end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

// Critic output pinned to a constant: zero last-layer weights.
void pin_critic(AgentBundle& agent, double value) {
  auto& last = agent.critic.mutable_layers().back();
  for (double& w : last.weight.values()) w = 0.0;
  for (double& b : last.bias) b = value;
}

double ref_ppo(double rho, double h, double eps) {
  const double clipped = std::min(std::max(rho, 1.0 - eps), 1.0 + eps);
  return std::min(rho * h, clipped * h);
}

}  // namespace

TEST_CASE("clip_positive examples") {
  CHECK(algos::clip_positive(2.5) == 2.5);
  CHECK(algos::clip_positive(-1.0) == 0.0);
  CHECK(algos::clip_positive(0.0) == 0.0);
  for (double h = -5.0; h <= 5.0; h += 0.37) CHECK(algos::clip_positive(h) >= 0.0);
}

TEST_CASE("algorithm names") {
  for (auto name : {"vsop", "a2c", "ppo", "dpo", "rmpg", "vsppo"})
    CHECK(algos::to_string(algos::parse_algorithm(name)) == name);
  CHECK_THROWS(algos::parse_algorithm("sac"));
}

TEST_CASE("vsop with all-negative advantages leaves the actor unchanged") {
  auto c = small_config("vsop");
  c.ent_coef = 0.0;
  c.weight_decay = 0.0;
  c.dropout = 0.1;
  c.thompson_sampling = true;
  Setup s(c);
  pin_critic(s.agent, 1000.0);
  algos::collect(s.agent, s.collector, s.buffer);
  const auto before = flat_params(s.agent.actor);
  const auto critic_before = flat_params(s.agent.critic);
  const auto report = algos::vsop_update(s.agent, s.buffer);
  CHECK(report.policy_gradient_norm == 0.0);
  CHECK(report.clip_fraction == 1.0);
  CHECK(flat_params(s.agent.actor) == before);
  CHECK(flat_params(s.agent.critic) != critic_before);
}

TEST_CASE("vsop with all-negative advantages moves the actor only through decay") {
  auto c = small_config("vsop");
  c.ent_coef = 0.0;
  c.weight_decay = 0.05;
  Setup s(c);
  pin_critic(s.agent, 1000.0);
  algos::collect(s.agent, s.collector, s.buffer);
  const auto before = flat_params(s.agent.actor);
  const auto report = algos::vsop_update(s.agent, s.buffer);
  const double factor = std::pow(1.0 - 2.0 * report.learning_rate * 0.05, double(report.minibatch_steps));
  const auto after = flat_params(s.agent.actor);
  REQUIRE(after.size() == before.size());
  for (std::size_t i = 0; i < after.size(); ++i) CHECK(after[i] == doctest::Approx(before[i] * factor).epsilon(1e-12));
}

TEST_CASE("a2c with zero advantages has a zero policy-gradient term") {
  auto c = small_config("a2c");
  c.gamma = 0.0;
  Setup s(c);
  pin_critic(s.agent, 1.0);  // CartPole reward is 1, so h = 1 - 1 = 0
  algos::collect(s.agent, s.collector, s.buffer);
  const auto report = algos::a2c_update(s.agent, s.buffer);
  CHECK(report.policy_gradient_norm == 0.0);
}

TEST_CASE("a2c single transition scales the score by h") {
  auto c = small_config("a2c");
  c.num_envs = 1;
  c.num_steps = 1;
  c.num_minibatches = 1;
  c.update_epochs = 1;
  c.gamma = 0.0;
  Setup s(c);
  pin_critic(s.agent, -1.0);  // h = 1 - (-1) = 2
  algos::collect(s.agent, s.collector, s.buffer);
  const auto logits = nn::predict(s.agent.actor, s.buffer.observations.row(0));
  const auto score = dist::log_prob_grad(dist::Categorical{logits}, static_cast<std::size_t>(s.buffer.actions(0, 0)));
  double norm = 0.0;
  for (double g : score) norm += 4.0 * g * g;
  const auto report = algos::a2c_update(s.agent, s.buffer);
  CHECK(report.policy_gradient_norm == doctest::Approx(std::sqrt(norm)).epsilon(1e-12));
}

TEST_CASE("thompson sampling at p = 0 is bit-identical to no thompson sampling") {
  auto c = small_config("vsop");
  c.dropout = 0.0;
  c.total_timesteps = 32 * 6;
  c.thompson_sampling = false;
  const auto a = run(c);
  c.thompson_sampling = true;
  const auto b = run(c);
  CHECK(flat_params(a.agent.actor) == flat_params(b.agent.actor));
  CHECK(flat_params(a.agent.critic) == flat_params(b.agent.critic));
}

TEST_CASE("vsppo without dropout or spectral norm equals ppo") {
  auto c = small_config("ppo");
  c.norm_adv = true;
  c.clip_vloss = true;
  c.total_timesteps = 32 * 5;
  const auto a = run(c);
  c.algorithm = "vsppo";
  c.thompson_sampling = true;
  const auto b = run(c);
  CHECK(flat_params(a.agent.actor) == flat_params(b.agent.actor));
  CHECK(flat_params(a.agent.critic) == flat_params(b.agent.critic));
}

TEST_CASE("ppo at rho = 1 has the a2c policy gradient") {
  auto c = small_config("ppo");
  c.num_minibatches = 1;
  c.update_epochs = 1;
  c.norm_adv = false;
  Setup s(c);
  algos::collect(s.agent, s.collector, s.buffer);
  auto ca = c;
  ca.algorithm = "a2c";
  auto a2c = s.agent;
  a2c.config = ca;
  a2c.algorithm = algos::Algorithm::a2c;
  auto buf2 = s.buffer;
  const auto rp = algos::ppo_update(s.agent, s.buffer);
  const auto ra = algos::a2c_update(a2c, buf2);
  CHECK(rp.clip_fraction == 0.0);
  CHECK(rp.policy_gradient_norm == doctest::Approx(ra.policy_gradient_norm).epsilon(1e-12));
}

TEST_CASE("ppo objective") {
  CHECK(algos::ppo_objective(1.5, 1.0, 0.2) == doctest::Approx(1.2));
  CHECK(algos::ppo_objective_grad(1.5, 1.0, 0.2) == 0.0);
  CHECK(algos::ppo_objective(1.0, 3.0, 0.2) == doctest::Approx(3.0));
  CHECK(algos::ppo_objective_grad(1.0, 3.0, 0.2) == doctest::Approx(3.0));
  CHECK(algos::ppo_objective(0.5, -1.0, 0.2) == doctest::Approx(-0.8));
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const double rho = std::exp((0.4 * rng.normal()));
    const double h = (2.0 * rng.normal());
    CHECK(std::abs(algos::ppo_objective(rho, h, 0.2) - ref_ppo(rho, h, 0.2)) <= 1e-10);
    const double e = 1e-6;
    const double fd = (ref_ppo(rho + e, h, 0.2) - ref_ppo(rho - e, h, 0.2)) / (2 * e);
    if (std::abs(rho - 0.8) > 1e-4 && std::abs(rho - 1.2) > 1e-4)
      CHECK(algos::ppo_objective_grad(rho, h, 0.2) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("dpo drift") {
  CHECK(algos::dpo_drift(1.0, 1.0, 2.0, 0.6) == 0.0);
  CHECK(algos::dpo_drift(1.7, 0.0, 2.0, 0.6) == 0.0);
  const double x = 0.3;
  CHECK(algos::dpo_drift(1.3, 1.0, 2.0, 0.6) == doctest::Approx(x - 2.0 * std::tanh(x / 2.0)).epsilon(1e-12));
  const double y = std::log(0.7) * -1.0;
  CHECK(algos::dpo_drift(0.7, -1.0, 2.0, 0.6) == doctest::Approx(std::max(0.0, y - 0.6 * std::tanh(y / 0.6))));
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const double rho = std::exp((0.5 * rng.normal()));
    const double h = (1.5 * rng.normal());
    CHECK(algos::dpo_drift(rho, h, 2.0, 0.6) >= 0.0);
    const double e = 1e-6;
    const double fd = (algos::dpo_drift(rho + e, h, 2.0, 0.6) - algos::dpo_drift(rho - e, h, 2.0, 0.6)) / (2 * e);
    CHECK(algos::dpo_drift_grad(rho, h, 2.0, 0.6) == doctest::Approx(fd).epsilon(1e-5).scale(1e-8));
  }
}

TEST_CASE("rmpg all-actions gradient") {
  SUBCASE("uniform policy with equal advantages") {
    const std::vector<double> logits{0.0, 0.0, 0.0};
    const std::vector<double> h{0.7, 0.7, 0.7};
    for (double g : algos::all_actions_logit_grad(logits, h)) CHECK(std::abs(g) < 1e-15);
  }
  SUBCASE("deterministic policy collapses to the single-action term") {
    const std::vector<double> logits{40.0, 0.0, -3.0};
    const std::vector<double> h{1.5, 0.2, 3.0};
    const auto g = algos::all_actions_logit_grad(logits, h);
    const auto score = dist::log_prob_grad(dist::Categorical{logits}, 0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(g[i] - h[0] * score[i]) < 1e-12);
  }
  SUBCASE("bandit finite differences") {
    const std::vector<double> logits{0.3, -0.5, 1.1};
    const std::vector<double> h{0.0, 2.0, 0.5};
    auto J = [&](std::vector<double> l) {
      const auto p = dist::softmax(l);
      return p[0] * h[0] + p[1] * h[1] + p[2] * h[2];
    };
    const auto g = algos::all_actions_logit_grad(logits, h);
    for (std::size_t i = 0; i < 3; ++i) {
      auto lp = logits, lm = logits;
      lp[i] += 1e-5;
      lm[i] -= 1e-5;
      const double fd = (J(lp) - J(lm)) / 2e-5;
      CHECK(std::abs(g[i] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("rmpg runs on discrete and continuous spaces") {
  auto c = small_config("rmpg");
  c.dropout = 0.05;
  c.thompson_sampling = true;
  Setup s(c);
  algos::collect(s.agent, s.collector, s.buffer);
  CHECK(s.buffer.action_advantages.rows() == s.buffer.size());
  for (double v : s.buffer.action_advantages.values()) CHECK(v >= 0.0);
  const auto r = algos::rmpg_update(s.agent, s.buffer);
  CHECK(std::isfinite(r.actor_loss));

  auto cc = small_config("rmpg", "Pendulum-v1");
  CHECK_THROWS_AS(algos::make_agent(cc, envs::make_env(cc.env_id)->spec()), algos::UnsupportedError);
  cc.rmpg_mc_actions = 3;
  Setup sc(cc);
  algos::collect(sc.agent, sc.collector, sc.buffer);
  CHECK(sc.buffer.candidate_actions.cols() == 3);
  CHECK(std::isfinite(algos::rmpg_update(sc.agent, sc.buffer).actor_loss));
}

TEST_CASE("update preconditions") {
  auto c = small_config("vsop");
  Setup s(c);
  CHECK_THROWS_AS(algos::update(s.agent, s.buffer), algos::EmptyBufferError);
  algos::collect(s.agent, s.collector, s.buffer);
  auto stale = s.buffer;
  algos::update(s.agent, s.buffer);
  CHECK_THROWS_AS(algos::update(s.agent, stale), algos::OffPolicyDataError);
  CHECK_THROWS(algos::ppo_update(s.agent, s.buffer));
}

TEST_CASE("vsop weights are never negative") {
  // A run where most advantages are negative still reports clipped fractions in [0, 1]
  // and never moves against the score direction for clipped samples.
  auto c = small_config("vsop");
  const auto res = run(c);
  for (const auto& row : res.rows) {
    CHECK(row.report.clip_fraction >= 0.0);
    CHECK(row.report.clip_fraction <= 1.0);
    CHECK(row.report.policy_gradient_norm >= 0.0);
  }
}

TEST_CASE("evaluate") {
  auto c = small_config("vsop");
  const auto agent = algos::make_agent(c, envs::make_env(c.env_id)->spec());
  Rng r1(9), r2(9);
  const auto e1 = algos::evaluate(agent, c.env_id, 10, r1);
  const auto e2 = algos::evaluate(agent, c.env_id, 10, r2);
  CHECK(e1.returns == e2.returns);
  CHECK(e1.mean >= 8.0);
  CHECK(e1.mean <= 50.0);
  CHECK(e1.returns.size() == 10);

  auto cp = small_config("vsop", "Pendulum-v1");
  const auto pa = algos::make_agent(cp, envs::make_env(cp.env_id)->spec());
  Rng r3(2);
  const auto ep = algos::evaluate(pa, cp.env_id, 5, r3);
  CHECK(ep.mean >= -1700.0);
  CHECK(ep.mean <= 0.0);
}

TEST_CASE("score-function estimator matches the exact tabular gradient") {
  // The expected update direction of E[h grad log pi] equals dJ/dtheta for a
  // softmax-tabular policy, checked with central differences of the exact J.
  Rng rng(21);
  const auto mdp = tabular::random_mdp(rng, 3, 2, 0.8);
  auto policy = tabular::random_policy(rng, 3, 2, 1.0);
  auto J = [&](const tabular::TabularPolicy& pol) {
    const auto v = tabular::policy_eval(mdp, pol).v;
    const auto mu = mdp.start_distribution();
    return std::inner_product(mu.begin(), mu.end(), v.begin(), 0.0);
  };
  const auto vals = tabular::policy_eval(mdp, policy);
  const auto d = tabular::discounted_visitation(mdp, policy);
  const double dsum = std::accumulate(d.begin(), d.end(), 0.0);
  const auto probs = policy.probabilities();
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t b = 0; b < 2; ++b) {
      double est = 0.0;
      for (std::size_t a = 0; a < 2; ++a) {
        const double h = vals.q(s, a) - vals.v[s];
        const auto score = dist::log_prob_grad(dist::Categorical{std::vector<double>(policy.logits.row(s).begin(), policy.logits.row(s).end())}, a);
        est += probs(s, a) * h * score[b];
      }
      est *= d[s] / dsum / (1.0 - mdp.gamma);
      auto pp = policy, pm = policy;
      pp.logits(s, b) += 1e-6;
      pm.logits(s, b) -= 1e-6;
      const double fd = (J(pp) - J(pm)) / 2e-6;
      CHECK(std::abs(est - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}
