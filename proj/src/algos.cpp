#include "vsop/algos.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vsop::algos {

Algorithm parse_algorithm(std::string_view name) {
  if (name == "vsop") return Algorithm::vsop;
  if (name == "a2c" || name == "a3c") return Algorithm::a2c;
  if (name == "ppo") return Algorithm::ppo;
  if (name == "dpo") return Algorithm::dpo;
  if (name == "rmpg") return Algorithm::rmpg;
  if (name == "vsppo") return Algorithm::vsppo;
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "' (expected vsop | a2c | ppo | dpo | rmpg | vsppo)");
}

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::vsop: return "vsop";
    case Algorithm::a2c: return "a2c";
    case Algorithm::ppo: return "ppo";
    case Algorithm::dpo: return "dpo";
    case Algorithm::rmpg: return "rmpg";
    case Algorithm::vsppo: return "vsppo";
  }
  return "vsop";
}

bool AgentBundle::uses_thompson() const {
  const bool eligible = algorithm == Algorithm::vsop || algorithm == Algorithm::vsppo || algorithm == Algorithm::rmpg;
  return eligible && config.thompson_sampling;
}

double clip_positive(double h) { return h > 0.0 ? h : 0.0; }

AgentBundle make_agent(const TrainConfig& config, const envs::EnvSpec& spec) {
  config.validate();
  AgentBundle agent;
  agent.config = config;
  agent.algorithm = parse_algorithm(config.algorithm);
  agent.spec = spec;
  if (agent.algorithm == Algorithm::rmpg && !spec.action.discrete && config.rmpg_mc_actions == 0)
    throw UnsupportedError("rmpg on a continuous action space needs rmpg_mc_actions >= 1");

  Rng init(Rng::mix_seed(config.seed, 100));
  agent.action_rng = Rng(Rng::mix_seed(config.seed, 101));
  agent.dropout_rng = Rng(Rng::mix_seed(config.seed, 102));
  agent.shuffle_rng = Rng(Rng::mix_seed(config.seed, 103));

  const auto act = nn::parse_activation(config.activation);
  const std::vector<std::size_t> hidden(config.hidden_depth, config.hidden_width);
  nn::MlpSpec actor_spec;
  actor_spec.input = spec.obs_dim;
  actor_spec.hidden = hidden;
  actor_spec.output = spec.action.discrete ? spec.action.n : spec.action.dim();
  actor_spec.hidden_activation = act;
  actor_spec.dropout_rate = config.dropout;
  actor_spec.spectral_hidden = config.spectral_actor;
  actor_spec.output_gain = 0.01;
  agent.actor = nn::Mlp::make(actor_spec, init);

  nn::MlpSpec critic_spec = actor_spec;
  critic_spec.output = 1;
  critic_spec.spectral_hidden = config.spectral_critic;
  critic_spec.output_gain = 1.0;
  agent.critic = nn::Mlp::make(critic_spec, init);

  if (!spec.action.discrete) agent.log_std.assign(spec.action.dim(), config.log_std_init);

  optim::OptimizerConfig oc;
  oc.kind = optim::parse_kind(config.optimizer);
  oc.epsilon = config.optim_eps;
  agent.optimizer = optim::OptimizerState(oc);
  agent.obs_moments = rollout::RunningMoments(spec.obs_dim);
  return agent;
}

std::vector<double> preprocess_obs(AgentBundle& agent, std::span<const double> x, bool update) {
  if (!agent.config.norm_obs) return {x.begin(), x.end()};
  if (update) agent.obs_moments.update(x);
  return agent.obs_moments.normalize(x);
}

std::vector<double> preprocess_obs(const AgentBundle& agent, std::span<const double> x) {
  if (!agent.config.norm_obs) return {x.begin(), x.end()};
  return agent.obs_moments.normalize(x);
}

Collector::Collector(const TrainConfig& config, AgentBundle& agent)
    : envs(config.env_id, config.num_envs, Rng::mix_seed(config.seed, 7)),
      reward_scaler(config.num_envs, config.gamma, config.norm_reward) {
  const Matrix raw = envs.reset();
  observations = Matrix(raw.rows(), raw.cols());
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    const auto o = preprocess_obs(agent, raw.row(i), true);
    std::copy(o.begin(), o.end(), observations.row(i).begin());
  }
}

namespace {

std::vector<double> column0(const Matrix& m) {
  std::vector<double> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = m(r, 0);
  return out;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), m.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto src = m.row(idx[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return out;
}

double log_prob_row(const AgentBundle& agent, std::span<const double> out, std::span<const double> action) {
  if (agent.discrete())
    return dist::log_prob(dist::Categorical{{out.begin(), out.end()}}, static_cast<std::size_t>(action[0]));
  return dist::log_prob(dist::DiagGaussian{{out.begin(), out.end()}, agent.log_std}, action);
}

double entropy_row(const AgentBundle& agent, std::span<const double> out) {
  if (agent.discrete()) return dist::entropy(dist::Categorical{{out.begin(), out.end()}});
  return dist::entropy(dist::DiagGaussian{{out.begin(), out.end()}, agent.log_std});
}

// Values of all buffer entries, truncation successors and final observations
// under `critic` with an optional fixed mask, then GAE.
rollout::AdvantageSet advantages_under(const AgentBundle& agent, const nn::Mlp& critic, const nn::DropoutMask* mask,
                                       const rollout::RolloutBuffer& buf, std::vector<double>* values_out = nullptr) {
  const auto values = column0(nn::predict(critic, buf.observations, mask));
  std::vector<std::size_t> trunc_idx;
  for (std::size_t k = 0; k < buf.size(); ++k)
    if (buf.truncated[k] && !buf.terminated[k]) trunc_idx.push_back(k);
  std::vector<double> trunc_values(buf.size(), 0.0);
  if (!trunc_idx.empty()) {
    const auto tv = column0(nn::predict(critic, gather_rows(buf.final_observations, trunc_idx), mask));
    for (std::size_t j = 0; j < trunc_idx.size(); ++j) trunc_values[trunc_idx[j]] = tv[j];
  }
  const auto last = column0(nn::predict(critic, buf.last_observations, mask));
  const auto next = rollout::bootstrap_targets(buf, values, trunc_values, last);
  auto out = rollout::gae(buf.rewards, values, next, buf.terminated, buf.truncated, buf.num_steps, buf.num_envs,
                          agent.config.gamma, agent.config.gae_lambda);
  if (values_out) *values_out = values;
  return out;
}

}  // namespace

void collect(AgentBundle& agent, Collector& collector, rollout::RolloutBuffer& buffer) {
  const auto& cfg = agent.config;
  const std::size_t n = cfg.num_envs;
  const std::size_t obs_dim = agent.spec.obs_dim;
  const std::size_t act_dim = agent.spec.action.dim();
  if (buffer.num_envs != n || buffer.num_steps != cfg.num_steps || buffer.obs_dim != obs_dim ||
      buffer.action_dim != act_dim)
    buffer = rollout::RolloutBuffer(cfg.num_steps, n, obs_dim, act_dim);
  buffer.clear(agent.policy_version);

  const bool rmpg = agent.algorithm == Algorithm::rmpg;
  const std::size_t candidates = !rmpg ? 0 : agent.discrete() ? agent.spec.action.n : cfg.rmpg_mc_actions;
  if (rmpg) {
    buffer.action_advantages = Matrix(buffer.size(), candidates);
    if (!agent.discrete()) buffer.candidate_actions = Matrix(buffer.size(), candidates * act_dim);
  }
  const bool ts = agent.uses_thompson();

  for (std::size_t t = 0; t < cfg.num_steps; ++t) {
    const Matrix& obs = collector.observations;
    nn::DropoutMask mask;
    const nn::DropoutMask* mask_ptr = nullptr;
    if (ts) {
      mask = nn::sample_dropout_mask(agent.actor, agent.dropout_rng, n);
      mask_ptr = &mask;
    }
    const Matrix out = nn::predict(agent.actor, obs, mask_ptr);
    const auto values = column0(nn::predict(agent.critic, obs));

    Matrix actions(n, act_dim);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = buffer.index(t, i);
      const auto row = out.row(i);
      if (agent.discrete()) {
        actions(i, 0) = static_cast<double>(dist::sample(dist::Categorical{{row.begin(), row.end()}}, agent.action_rng));
      } else {
        const auto a = dist::sample(dist::DiagGaussian{{row.begin(), row.end()}, agent.log_std}, agent.action_rng);
        std::copy(a.begin(), a.end(), actions.row(i).begin());
      }
      buffer.log_probs[k] = log_prob_row(agent, row, actions.row(i));
      buffer.values[k] = values[i];
      std::copy(obs.row(i).begin(), obs.row(i).end(), buffer.observations.row(k).begin());
      std::copy(actions.row(i).begin(), actions.row(i).end(), buffer.actions.row(k).begin());
    }

    if (rmpg) {
      // Successors of every candidate action from every env, scored in one batch.
      std::vector<std::vector<double>> succ_obs;
      struct Ref {
        std::size_t env, cand;
        double prob, reward;
        bool terminated;
      };
      std::vector<Ref> refs;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = buffer.index(t, i);
        for (std::size_t c = 0; c < candidates; ++c) {
          std::vector<double> a(act_dim);
          if (agent.discrete()) {
            a[0] = static_cast<double>(c);
          } else {
            const auto row = out.row(i);
            a = dist::sample(dist::DiagGaussian{{row.begin(), row.end()}, agent.log_std}, agent.action_rng);
            std::copy(a.begin(), a.end(), buffer.candidate_actions.row(k).begin() + c * act_dim);
          }
          for (auto& o : collector.envs.env(i).outcomes(a)) {
            refs.push_back({i, c, o.probability, collector.reward_scaler.peek(o.reward), o.terminated});
            succ_obs.push_back(preprocess_obs(std::as_const(agent), o.observation));
          }
        }
      }
      Matrix succ(succ_obs.size(), obs_dim);
      for (std::size_t j = 0; j < succ_obs.size(); ++j) std::copy(succ_obs[j].begin(), succ_obs[j].end(), succ.row(j).begin());
      const auto succ_v = column0(nn::predict(agent.critic, succ));
      Matrix q(n, candidates, 0.0);
      for (std::size_t j = 0; j < refs.size(); ++j) {
        const auto& r = refs[j];
        q(r.env, r.cand) += r.prob * (r.reward + (r.terminated ? 0.0 : cfg.gamma * succ_v[j]));
      }
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < candidates; ++c)
          buffer.action_advantages(buffer.index(t, i), c) = clip_positive(q(i, c) - values[i]);
    }

    envs::VecStep step = collector.envs.step(actions);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = buffer.index(t, i);
      const bool end = step.terminated[i] || step.truncated[i];
      buffer.rewards[k] = collector.reward_scaler.scale(i, step.rewards[i], end);
      buffer.terminated[k] = step.terminated[i];
      buffer.truncated[k] = step.truncated[i];
      if (step.truncated[i] && !step.terminated[i]) {
        const auto f = preprocess_obs(std::as_const(agent), *step.final_observations[i]);
        std::copy(f.begin(), f.end(), buffer.final_observations.row(k).begin());
      }
      if (step.episode_returns[i]) {
        collector.completed_returns.push_back(*step.episode_returns[i]);
        collector.completed_lengths.push_back(*step.episode_lengths[i]);
      }
      const auto o = preprocess_obs(agent, step.observations.row(i), true);
      std::copy(o.begin(), o.end(), collector.observations.row(i).begin());
    }
  }
  buffer.last_observations = collector.observations;
  buffer.filled = buffer.size();

  std::vector<double> trunc_values(buffer.size(), 0.0);
  for (std::size_t k = 0; k < buffer.size(); ++k)
    if (buffer.truncated[k] && !buffer.terminated[k])
      trunc_values[k] = nn::predict(agent.critic, buffer.final_observations.row(k))[0];
  const auto last = column0(nn::predict(agent.critic, buffer.last_observations));
  rollout::assign_bootstrap(buffer, buffer.values, trunc_values, last);
}

// ---------------------------------------------------------------- estimator pieces

double ppo_objective(double rho, double h, double eps) {
  return std::min(rho * h, std::clamp(rho, 1.0 - eps, 1.0 + eps) * h);
}

double ppo_objective_grad(double rho, double h, double eps) {
  const double clipped = std::clamp(rho, 1.0 - eps, 1.0 + eps);
  // gradient flows through rho only when the unclipped branch is the minimum
  if (rho * h <= clipped * h) return h;
  return 0.0;
}

double dpo_drift(double rho, double h, double a, double b) {
  if (h >= 0.0) {
    const double x = (rho - 1.0) * h;
    return std::max(0.0, x - a * std::tanh(x / a));
  }
  const double x = std::log(rho) * h;
  return std::max(0.0, x - b * std::tanh(x / b));
}

double dpo_drift_grad(double rho, double h, double a, double b) {
  if (h >= 0.0) {
    const double x = (rho - 1.0) * h;
    if (!(x - a * std::tanh(x / a) > 0.0)) return 0.0;
    const double t = std::tanh(x / a);
    return t * t * h;
  }
  const double x = std::log(rho) * h;
  if (!(x - b * std::tanh(x / b) > 0.0)) return 0.0;
  const double t = std::tanh(x / b);
  return t * t * h / rho;
}

std::vector<double> all_actions_logit_grad(std::span<const double> logits, std::span<const double> h_plus) {
  if (logits.size() != h_plus.size()) throw DimensionError("all_actions_logit_grad: size mismatch");
  const auto pi = dist::softmax(logits);
  double mean = 0.0;
  for (std::size_t a = 0; a < pi.size(); ++a) mean += pi[a] * h_plus[a];
  std::vector<double> g(pi.size());
  for (std::size_t b = 0; b < pi.size(); ++b) g[b] = pi[b] * (h_plus[b] - mean);
  return g;
}

// ---------------------------------------------------------------- updates

namespace {

// dL/d(actor output) and dL/d(log_std) for one actor minibatch.
struct HeadGrad {
  Matrix d_out;
  std::vector<double> d_log_std;
};

void add_score_term(const AgentBundle& agent, std::span<const double> out, std::span<const double> action,
                    double weight, std::span<double> d_out, std::vector<double>& d_log_std) {
  // adds weight * d log pi(action) to the gradient rows
  if (weight == 0.0) return;
  if (agent.discrete()) {
    const auto g = dist::log_prob_grad(dist::Categorical{{out.begin(), out.end()}}, static_cast<std::size_t>(action[0]));
    for (std::size_t j = 0; j < g.size(); ++j) d_out[j] += weight * g[j];
  } else {
    const auto g = dist::log_prob_grad(dist::DiagGaussian{{out.begin(), out.end()}, agent.log_std}, action);
    for (std::size_t j = 0; j < g.mean.size(); ++j) {
      d_out[j] += weight * g.mean[j];
      d_log_std[j] += weight * g.log_std[j];
    }
  }
}

void add_entropy_term(const AgentBundle& agent, std::span<const double> out, double weight, std::span<double> d_out,
                      std::vector<double>& d_log_std) {
  if (weight == 0.0) return;
  if (agent.discrete()) {
    const auto g = dist::entropy_grad(dist::Categorical{{out.begin(), out.end()}});
    for (std::size_t j = 0; j < g.size(); ++j) d_out[j] += weight * g[j];
  } else {
    for (double& d : d_log_std) d += weight;
  }
}

std::vector<optim::ParamBlock> param_blocks(AgentBundle& agent) {
  std::vector<optim::ParamBlock> blocks;
  auto add_net = [&](nn::Mlp& net, const std::string& prefix) {
    auto& layers = net.mutable_layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      blocks.push_back({prefix + "." + std::to_string(l) + ".weight", layers[l].weight.values(), true});
      blocks.push_back({prefix + "." + std::to_string(l) + ".bias", layers[l].bias, true});
    }
  };
  add_net(agent.actor, "actor");
  if (!agent.log_std.empty()) blocks.push_back({"actor.log_std", agent.log_std, false});
  add_net(agent.critic, "critic");
  return blocks;
}

void normalize_advantages(std::vector<double>& h, bool subtract_mean) {
  if (h.size() < 2) return;
  const double n = static_cast<double>(h.size());
  const double mean = std::accumulate(h.begin(), h.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : h) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  for (double& x : h) x = (subtract_mean ? x - mean : x) / (sd + 1e-8);
}

void check_buffer(const AgentBundle& agent, const rollout::RolloutBuffer& buf) {
  if (buf.size() == 0 || buf.filled == 0) throw EmptyBufferError("update called with an empty rollout buffer");
  if (!buf.full()) throw EmptyBufferError("update called with a partially filled rollout buffer");
  if (buf.policy_version != agent.policy_version)
    throw OffPolicyDataError("rollout buffer was collected under policy version " + std::to_string(buf.policy_version) +
                             ", current version is " + std::to_string(agent.policy_version));
  if (buf.num_steps * buf.num_envs != agent.config.batch_size())
    throw DimensionError("rollout buffer shape does not match the configuration");
}

UpdateReport run_update(AgentBundle& agent, rollout::RolloutBuffer& buf) {
  check_buffer(agent, buf);
  const auto& cfg = agent.config;
  const Algorithm alg = agent.algorithm;
  const std::size_t batch = buf.size();
  const std::size_t mb_size = batch / cfg.num_minibatches;
  const bool ts = agent.uses_thompson();
  const double p = cfg.dropout;
  const bool ratio_based = alg == Algorithm::ppo || alg == Algorithm::vsppo || alg == Algorithm::dpo;
  if (alg == Algorithm::rmpg && buf.action_advantages.rows() != batch)
    throw std::logic_error("rmpg update needs per-action advantages recorded during collection");

  UpdateReport report;
  const optim::LrSchedule schedule{cfg.learning_rate, std::max<std::size_t>(1, cfg.num_updates()), cfg.anneal_lr};
  report.learning_rate = schedule.at(agent.updates_done);
  report.decay_coeff = cfg.decay_from_dropout ? optim::beta_from_dropout(p, batch) : cfg.weight_decay;

  // frozen critic snapshot for advantage estimates
  const nn::Mlp snapshot = agent.critic;
  rollout::AdvantageSet fixed;
  if (!ts) fixed = advantages_under(agent, snapshot, nullptr, buf);

  std::vector<std::size_t> order(batch);
  std::iota(order.begin(), order.end(), 0);
  double sum_actor = 0.0, sum_critic = 0.0, sum_entropy = 0.0, sum_clip = 0.0, sum_ga = 0.0, sum_gc = 0.0;
  double pg_sq = 0.0;

  for (std::size_t epoch = 0; epoch < cfg.update_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), agent.shuffle_rng.engine());
    for (std::size_t start = 0; start < batch; start += mb_size) {
      const std::span<const std::size_t> idx(order.data() + start, mb_size);
      const double inv_b = 1.0 / static_cast<double>(mb_size);

      rollout::AdvantageSet sampled;
      if (ts) {
        const nn::DropoutMask critic_draw = nn::sample_dropout_mask(snapshot, agent.dropout_rng);
        sampled = advantages_under(agent, snapshot, &critic_draw, buf);
      }
      const rollout::AdvantageSet& adv = ts ? sampled : fixed;
      std::vector<double> h(mb_size), g(mb_size);
      for (std::size_t k = 0; k < mb_size; ++k) {
        h[k] = adv.advantages[idx[k]];
        g[k] = adv.returns[idx[k]];
      }
      double clipped_count = 0.0;
      if (alg == Algorithm::vsop) {
        for (double& x : h) {
          if (x <= 0.0) clipped_count += 1.0;
          x = clip_positive(x);
        }
        if (cfg.norm_adv) normalize_advantages(h, false);
      } else if (cfg.norm_adv && alg != Algorithm::rmpg) {
        normalize_advantages(h, true);
      }

      nn::DropoutMask actor_mask, critic_mask;
      const nn::DropoutMask* am = nullptr;
      const nn::DropoutMask* cm = nullptr;
      if (p > 0.0) {
        actor_mask = nn::sample_dropout_mask(agent.actor, agent.dropout_rng);
        critic_mask = nn::sample_dropout_mask(agent.critic, agent.dropout_rng);
        am = &actor_mask;
        cm = &critic_mask;
      }
      agent.actor.power_iteration(1);
      agent.critic.power_iteration(1);

      const Matrix obs = gather_rows(buf.observations, idx);
      const Matrix acts = gather_rows(buf.actions, idx);
      auto actor_fw = nn::forward(agent.actor, obs, am);
      auto critic_fw = nn::forward(agent.critic, obs, cm);
      const Matrix& out = actor_fw.output;

      HeadGrad hg{Matrix(mb_size, out.cols()), std::vector<double>(agent.log_std.size(), 0.0)};
      double actor_loss = 0.0, entropy = 0.0;
      for (std::size_t k = 0; k < mb_size; ++k) {
        const auto row = out.row(k);
        const auto a = acts.row(k);
        auto d = hg.d_out.row(k);
        const std::size_t e = idx[k];
        switch (alg) {
          case Algorithm::vsop:
          case Algorithm::a2c: {
            const double lp = log_prob_row(agent, row, a);
            actor_loss -= h[k] * lp * inv_b;
            add_score_term(agent, row, a, -h[k] * inv_b, d, hg.d_log_std);
            break;
          }
          case Algorithm::ppo:
          case Algorithm::vsppo: {
            const double lp = log_prob_row(agent, row, a);
            const double rho = std::exp(lp - buf.log_probs[e]);
            if (std::abs(rho - 1.0) > cfg.clip_coef) clipped_count += 1.0;
            actor_loss -= ppo_objective(rho, h[k], cfg.clip_coef) * inv_b;
            add_score_term(agent, row, a, -rho * ppo_objective_grad(rho, h[k], cfg.clip_coef) * inv_b, d,
                           hg.d_log_std);
            break;
          }
          case Algorithm::dpo: {
            const double lp = log_prob_row(agent, row, a);
            const double rho = std::exp(lp - buf.log_probs[e]);
            if (std::abs(rho - 1.0) > cfg.clip_coef) clipped_count += 1.0;
            const double drift = dpo_drift(rho, h[k], cfg.dpo_alpha, cfg.dpo_beta);
            actor_loss -= (rho * h[k] - drift) * inv_b;
            const double dj = h[k] - dpo_drift_grad(rho, h[k], cfg.dpo_alpha, cfg.dpo_beta);
            add_score_term(agent, row, a, -rho * dj * inv_b, d, hg.d_log_std);
            break;
          }
          case Algorithm::rmpg: {
            const auto hp = buf.action_advantages.row(e);
            if (agent.discrete()) {
              const auto pi = dist::softmax(row);
              const auto grad = all_actions_logit_grad(row, hp);
              for (std::size_t j = 0; j < grad.size(); ++j) {
                actor_loss -= pi[j] * hp[j] * inv_b;
                d[j] -= grad[j] * inv_b;
              }
              for (double x : hp)
                if (x <= 0.0) clipped_count += 1.0 / static_cast<double>(hp.size());
            } else {
              const std::size_t kc = hp.size();
              const std::size_t ad = agent.spec.action.dim();
              for (std::size_t c = 0; c < kc; ++c) {
                const auto ca = buf.candidate_actions.row(e).subspan(c * ad, ad);
                const double w = hp[c] / static_cast<double>(kc);
                actor_loss -= w * log_prob_row(agent, row, ca) * inv_b;
                add_score_term(agent, row, ca, -w * inv_b, d, hg.d_log_std);
                if (hp[c] <= 0.0) clipped_count += 1.0 / static_cast<double>(kc);
              }
            }
            break;
          }
        }
        for (double x : d) pg_sq += x * x;
        const double ent = entropy_row(agent, row);
        entropy += ent * inv_b;
        add_entropy_term(agent, row, -cfg.ent_coef * inv_b, d, hg.d_log_std);
      }
      actor_loss -= cfg.ent_coef * entropy;

      // critic regression towards g = h + v
      Matrix d_v(mb_size, 1);
      double critic_loss = 0.0;
      for (std::size_t k = 0; k < mb_size; ++k) {
        const double v_new = critic_fw.output(k, 0);
        const double err = v_new - g[k];
        if (cfg.clip_vloss && ratio_based) {
          const double v_old = buf.values[idx[k]];
          const double delta = v_new - v_old;
          const double v_clip = v_old + std::clamp(delta, -cfg.clip_coef, cfg.clip_coef);
          const double err_c = v_clip - g[k];
          if (err_c * err_c > err * err) {
            critic_loss += 0.5 * err_c * err_c * inv_b;
            d_v(k, 0) = std::abs(delta) < cfg.clip_coef ? cfg.vf_coef * err_c * inv_b : 0.0;
            continue;
          }
        }
        critic_loss += 0.5 * err * err * inv_b;
        d_v(k, 0) = cfg.vf_coef * err * inv_b;
      }

      auto actor_bw = nn::backward(agent.actor, actor_fw.cache, hg.d_out);
      auto critic_bw = nn::backward(agent.critic, critic_fw.cache, d_v);
      double ga = actor_bw.params.squared_norm();
      for (double x : hg.d_log_std) ga += x * x;
      const double gc = critic_bw.params.squared_norm();
      const double total = std::sqrt(ga + gc);
      if (std::isfinite(cfg.max_grad_norm) && total > cfg.max_grad_norm) {
        const double s = cfg.max_grad_norm / (total + 1e-6);
        actor_bw.params.scale(s);
        critic_bw.params.scale(s);
        for (double& x : hg.d_log_std) x *= s;
      }

      std::vector<optim::GradBlock> grads;
      auto add_grads = [&](const nn::MlpGrad& gr, const std::string& prefix) {
        for (std::size_t l = 0; l < gr.layers.size(); ++l) {
          grads.push_back({prefix + "." + std::to_string(l) + ".weight", gr.layers[l].weight.values()});
          grads.push_back({prefix + "." + std::to_string(l) + ".bias", gr.layers[l].bias});
        }
      };
      add_grads(actor_bw.params, "actor");
      if (!agent.log_std.empty()) grads.push_back({"actor.log_std", hg.d_log_std});
      add_grads(critic_bw.params, "critic");
      auto blocks = param_blocks(agent);
      optim::step(agent.optimizer, blocks, grads, report.learning_rate, report.decay_coeff);

      sum_actor += actor_loss;
      sum_critic += critic_loss;
      sum_entropy += entropy;
      sum_clip += clipped_count * inv_b;
      sum_ga += std::sqrt(ga);
      sum_gc += std::sqrt(gc);
      ++report.minibatch_steps;
    }
  }
  const double steps = static_cast<double>(report.minibatch_steps);
  report.actor_loss = sum_actor / steps;
  report.critic_loss = sum_critic / steps;
  report.entropy = sum_entropy / steps;
  report.clip_fraction = sum_clip / steps;
  report.actor_grad_norm = sum_ga / steps;
  report.critic_grad_norm = sum_gc / steps;
  report.policy_gradient_norm = std::sqrt(pg_sq);
  ++agent.updates_done;
  ++agent.policy_version;
  return report;
}

void expect(const AgentBundle& agent, std::initializer_list<Algorithm> allowed, const char* who) {
  for (auto a : allowed)
    if (agent.algorithm == a) return;
  throw std::logic_error(std::string(who) + " called for algorithm " + std::string(to_string(agent.algorithm)));
}

}  // namespace

UpdateReport vsop_update(AgentBundle& agent, rollout::RolloutBuffer& buffer) {
  expect(agent, {Algorithm::vsop}, "vsop_update");
  return run_update(agent, buffer);
}

UpdateReport a2c_update(AgentBundle& agent, rollout::RolloutBuffer& buffer) {
  expect(agent, {Algorithm::a2c}, "a2c_update");
  return run_update(agent, buffer);
}

UpdateReport ppo_update(AgentBundle& agent, rollout::RolloutBuffer& buffer) {
  expect(agent, {Algorithm::ppo, Algorithm::vsppo}, "ppo_update");
  return run_update(agent, buffer);
}

UpdateReport dpo_update(AgentBundle& agent, rollout::RolloutBuffer& buffer) {
  expect(agent, {Algorithm::dpo}, "dpo_update");
  return run_update(agent, buffer);
}

UpdateReport rmpg_update(AgentBundle& agent, rollout::RolloutBuffer& buffer) {
  expect(agent, {Algorithm::rmpg}, "rmpg_update");
  return run_update(agent, buffer);
}

UpdateReport update(AgentBundle& agent, rollout::RolloutBuffer& buffer) { return run_update(agent, buffer); }

EvalResult evaluate(const AgentBundle& agent, const std::string& env_id, std::size_t episodes, Rng& rng) {
  EvalResult result;
  auto env = envs::make_env(env_id);
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    auto raw = env->reset(rng);
    double total = 0.0;
    while (true) {
      const auto obs = preprocess_obs(agent, raw);
      const auto out = nn::predict(agent.actor, obs);
      std::vector<double> action;
      if (agent.discrete())
        action = {static_cast<double>(dist::mode(dist::Categorical{out}))};
      else
        action = out;
      auto step = env->step(action, rng);
      total += step.reward;
      raw = std::move(step.observation);
      if (step.terminated || step.truncated) break;
    }
    result.returns.push_back(total);
  }
  const double n = static_cast<double>(episodes);
  result.mean = std::accumulate(result.returns.begin(), result.returns.end(), 0.0) / n;
  double ss = 0.0;
  for (double r : result.returns) ss += (r - result.mean) * (r - result.mean);
  result.std = std::sqrt(ss / n);
  return result;
}

}  // namespace vsop::algos
