#include "vsop/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "vsop/distributions.hpp"

namespace vsop::tabular {

void TabularMdp::validate() const {
  if (num_states == 0 || num_actions == 0) throw std::invalid_argument("TabularMdp: empty state or action set");
  if (transitions.size() != num_states * num_actions * num_states)
    throw std::invalid_argument("TabularMdp: transition tensor has wrong size");
  if (rewards.size() != num_states * num_actions) throw std::invalid_argument("TabularMdp: reward table has wrong size");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("TabularMdp: gamma outside [0, 1]");
  for (std::size_t s = 0; s < num_states; ++s)
    for (std::size_t a = 0; a < num_actions; ++a) {
      double total = 0.0;
      for (std::size_t n = 0; n < num_states; ++n) {
        if (p(s, a, n) < 0.0) throw std::invalid_argument("TabularMdp: negative transition probability");
        total += p(s, a, n);
      }
      if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("TabularMdp: P[" + std::to_string(s) + "," + std::to_string(a) +
                                    ",:] does not sum to 1");
    }
  if (!initial.empty()) {
    if (initial.size() != num_states) throw std::invalid_argument("TabularMdp: initial distribution has wrong size");
    double total = 0.0;
    for (double w : initial) total += w;
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("TabularMdp: initial distribution does not sum to 1");
  }
}

bool TabularMdp::rewards_nonnegative() const {
  return std::all_of(rewards.begin(), rewards.end(), [](double r) { return r >= 0.0; });
}

std::vector<double> TabularMdp::start_distribution() const {
  if (!initial.empty()) return initial;
  return std::vector<double>(num_states, 1.0 / static_cast<double>(num_states));
}

TabularPolicy TabularPolicy::uniform(std::size_t states, std::size_t actions) {
  return {Matrix(states, actions, 0.0)};
}

Matrix TabularPolicy::probabilities() const {
  Matrix probs(logits.rows(), logits.cols());
  for (std::size_t s = 0; s < logits.rows(); ++s) {
    const auto p = dist::softmax(logits.row(s));
    std::copy(p.begin(), p.end(), probs.row(s).begin());
  }
  return probs;
}

namespace {

void check_policy(const TabularMdp& mdp, const TabularPolicy& policy) {
  if (policy.num_states() != mdp.num_states || policy.num_actions() != mdp.num_actions)
    throw DimensionError("policy shape does not match the MDP");
}

// P_pi [S x S] and r_pi [S].
Matrix policy_transition(const TabularMdp& mdp, const Matrix& pi) {
  Matrix p(mdp.num_states, mdp.num_states);
  for (std::size_t s = 0; s < mdp.num_states; ++s)
    for (std::size_t a = 0; a < mdp.num_actions; ++a)
      for (std::size_t n = 0; n < mdp.num_states; ++n) p(s, n) += pi(s, a) * mdp.p(s, a, n);
  return p;
}

std::vector<double> policy_reward(const TabularMdp& mdp, const Matrix& pi) {
  std::vector<double> r(mdp.num_states, 0.0);
  for (std::size_t s = 0; s < mdp.num_states; ++s)
    for (std::size_t a = 0; a < mdp.num_actions; ++a) r[s] += pi(s, a) * mdp.r(s, a);
  return r;
}

// Gaussian elimination with partial pivoting.
std::vector<double> solve_linear(Matrix a, std::vector<double> b) {
  const std::size_t n = a.rows();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (std::abs(a(pivot, col)) < 1e-14) throw SingularSystemError("policy_eval: singular linear system");
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(col, c), a(pivot, c));
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a(i, c) * x[c];
    x[i] = s / a(i, i);
  }
  return x;
}

Matrix q_from(const TabularMdp& mdp, const std::vector<double>& v_next) {
  Matrix q(mdp.num_states, mdp.num_actions);
  for (std::size_t s = 0; s < mdp.num_states; ++s)
    for (std::size_t a = 0; a < mdp.num_actions; ++a) {
      double cont = 0.0;
      for (std::size_t n = 0; n < mdp.num_states; ++n) cont += mdp.p(s, a, n) * v_next[n];
      q(s, a) = mdp.r(s, a) + mdp.gamma * cont;
    }
  return q;
}

std::vector<double> expect_over_policy(const Matrix& pi, const Matrix& q) {
  std::vector<double> v(pi.rows(), 0.0);
  for (std::size_t s = 0; s < pi.rows(); ++s)
    for (std::size_t a = 0; a < pi.cols(); ++a) v[s] += pi(s, a) * q(s, a);
  return v;
}

void fill_derived(const TabularMdp& mdp, const TabularPolicy& policy, ExactValues& out) {
  out.h_plus = Matrix(mdp.num_states, mdp.num_actions);
  for (std::size_t s = 0; s < mdp.num_states; ++s)
    for (std::size_t a = 0; a < mdp.num_actions; ++a) out.h_plus(s, a) = std::max(0.0, out.q(s, a) - out.v[s]);
  out.C = constant_C(mdp, policy, out);
}

}  // namespace

ExactValues policy_eval(const TabularMdp& mdp, const TabularPolicy& policy) {
  return policy_eval(mdp, policy, mdp.horizon);
}

ExactValues policy_eval(const TabularMdp& mdp, const TabularPolicy& policy, std::optional<std::size_t> horizon,
                        const std::vector<double>& terminal) {
  mdp.validate();
  check_policy(mdp, policy);
  const Matrix pi = policy.probabilities();
  ExactValues out;
  out.horizon = horizon;
  if (!horizon) {
    if (mdp.gamma >= 1.0) throw SingularSystemError("policy_eval: gamma = 1 with an infinite horizon is singular");
    Matrix system = policy_transition(mdp, pi);
    for (double& x : system.values()) x *= -mdp.gamma;
    for (std::size_t s = 0; s < mdp.num_states; ++s) system(s, s) += 1.0;
    out.v = solve_linear(std::move(system), policy_reward(mdp, pi));
    out.v_next = out.v;
    out.q = q_from(mdp, out.v_next);
  } else {
    if (!terminal.empty() && terminal.size() != mdp.num_states)
      throw DimensionError("policy_eval: terminal values have wrong length");
    std::vector<double> v = terminal.empty() ? std::vector<double>(mdp.num_states, 0.0) : terminal;
    std::vector<double> prev = v;
    Matrix q(mdp.num_states, mdp.num_actions);
    for (std::size_t h = 0; h < *horizon; ++h) {
      prev = v;
      q = q_from(mdp, prev);
      v = expect_over_policy(pi, q);
    }
    out.v = std::move(v);
    out.v_next = std::move(prev);
    out.q = *horizon == 0 ? Matrix(mdp.num_states, mdp.num_actions) : std::move(q);
  }
  fill_derived(mdp, policy, out);
  return out;
}

double bellman_residual(const TabularMdp& mdp, const TabularPolicy& policy, const ExactValues& values) {
  const Matrix pi = policy.probabilities();
  const auto rhs = expect_over_policy(pi, q_from(mdp, values.v_next));
  double worst = 0.0;
  for (std::size_t s = 0; s < mdp.num_states; ++s) worst = std::max(worst, std::abs(values.v[s] - rhs[s]));
  return worst;
}

std::vector<double> constant_C(const TabularMdp& mdp, const TabularPolicy& policy, const ExactValues& values) {
  check_policy(mdp, policy);
  const Matrix pi = policy.probabilities();
  std::vector<double> c(mdp.num_states, 0.0);
  for (std::size_t s = 0; s < mdp.num_states; ++s)
    for (std::size_t a = 0; a < mdp.num_actions; ++a) {
      double inner = 0.0;
      for (std::size_t n = 0; n < mdp.num_states; ++n)
        inner += mdp.p(s, a, n) * std::max(0.0, mdp.gamma * values.v_next[n] - values.v[s]);
      c[s] += pi(s, a) * inner;
    }
  return c;
}

std::vector<double> lower_bound_v_star(const TabularMdp& mdp, const TabularPolicy& policy,
                                       const ExactValues& values, std::size_t horizon) {
  if (horizon != 1 && horizon != 2)
    throw std::invalid_argument("lower_bound_v_star: horizon must be 1 or 2, got " + std::to_string(horizon));
  if (!values.horizon || *values.horizon != horizon)
    throw std::invalid_argument("lower_bound_v_star: values were not computed for horizon " + std::to_string(horizon));
  const Matrix pi = policy.probabilities();
  std::vector<double> v_star = expect_over_policy(pi, values.h_plus);
  if (horizon == 2) {
    const ExactValues one_step = policy_eval(mdp, policy, std::size_t{1});
    const auto next_term = expect_over_policy(pi, one_step.h_plus);
    for (std::size_t s = 0; s < mdp.num_states; ++s) {
      double cont = 0.0;
      for (std::size_t a = 0; a < mdp.num_actions; ++a)
        for (std::size_t n = 0; n < mdp.num_states; ++n) cont += pi(s, a) * mdp.p(s, a, n) * next_term[n];
      v_star[s] += mdp.gamma * cont;
    }
  }
  return v_star;
}

TheoremReport check_theorem1(const TabularMdp& mdp, const TabularPolicy& policy) {
  TheoremReport report;
  if (!mdp.rewards_nonnegative()) throw std::invalid_argument("check_theorem1: rewards must be non-negative");
  const Matrix pi = policy.probabilities();
  const auto r_pi = policy_reward(mdp, pi);
  auto corollaries = [&](const ExactValues& values) {
    const auto clipped = expect_over_policy(pi, values.h_plus);
    for (std::size_t s = 0; s < mdp.num_states; ++s) {
      report.max_reward_bound_violation = std::max(report.max_reward_bound_violation, clipped[s] - (r_pi[s] + values.C[s]));
      report.max_value_bound_violation = std::max(report.max_value_bound_violation, clipped[s] - values.v[s]);
    }
  };
  for (std::size_t horizon : {std::size_t{1}, std::size_t{2}}) {
    const ExactValues values = policy_eval(mdp, policy, horizon);
    const auto v_star = lower_bound_v_star(mdp, policy, values, horizon);
    for (std::size_t s = 0; s < mdp.num_states; ++s) {
      report.max_violation = std::max(report.max_violation, v_star[s] - (values.v[s] + values.C[s]));
      report.max_v_star = std::max(report.max_v_star, v_star[s]);
    }
    corollaries(values);
  }
  if (mdp.gamma < 1.0) corollaries(policy_eval(mdp, policy, std::nullopt));
  report.holds = report.max_violation <= kBoundTolerance && report.max_reward_bound_violation <= kBoundTolerance &&
                 report.max_value_bound_violation <= kBoundTolerance;
  return report;
}

double softmax_jacobian(const Matrix& probs, std::size_t s, std::size_t a, std::size_t b) {
  return probs(s, a) * ((a == b ? 1.0 : 0.0) - probs(s, b));
}

DecompositionReport check_pg_decomposition(const TabularMdp& mdp, const TabularPolicy& policy, std::size_t k_max) {
  if (!mdp.horizon) throw std::invalid_argument("check_pg_decomposition: requires a finite horizon");
  const std::size_t horizon = *mdp.horizon;
  if (horizon > k_max) throw std::invalid_argument("check_pg_decomposition: horizon exceeds k_max");
  mdp.validate();
  check_policy(mdp, policy);
  const std::size_t S = mdp.num_states;
  const std::size_t A = mdp.num_actions;
  const std::size_t P = S * A;
  const Matrix pi = policy.probabilities();
  const Matrix p_pi = policy_transition(mdp, pi);

  // Values for every steps-to-go count 0..horizon.
  std::vector<ExactValues> by_togo;
  by_togo.reserve(horizon + 1);
  for (std::size_t h = 0; h <= horizon; ++h) by_togo.push_back(policy_eval(mdp, policy, h));

  // Dynamic programming: grad v_h(s) = sum_a grad pi q_h + gamma sum_a pi sum_s' P grad v_{h-1}(s').
  Matrix grad(S, P);
  for (std::size_t h = 1; h <= horizon; ++h) {
    Matrix next(S, P);
    const Matrix& q = by_togo[h].q;
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t b = 0; b < A; ++b) {
        double g = 0.0;
        for (std::size_t a = 0; a < A; ++a) g += softmax_jacobian(pi, s, a, b) * q(s, a);
        next(s, s * A + b) += g;
      }
      for (std::size_t n = 0; n < S; ++n) {
        const double w = mdp.gamma * p_pi(s, n);
        if (w == 0.0) continue;
        for (std::size_t j = 0; j < P; ++j) next(s, j) += w * grad(n, j);
      }
    }
    grad = std::move(next);
  }

  DecompositionReport report;
  report.exact_gradient = grad;
  report.clipped_term = Matrix(S, P);
  report.above_mean_term = Matrix(S, P);
  report.below_mean_term = Matrix(S, P);

  // reach(s, x) = P(s -> x; k, pi), advanced one step per k.
  Matrix reach = Matrix::identity(S);
  double discount = 1.0;
  const std::size_t depth = std::min(horizon, k_max);
  for (std::size_t k = 0; k < depth; ++k) {
    const ExactValues& vals = by_togo[horizon - k];
    for (std::size_t x = 0; x < S; ++x) {
      for (std::size_t b = 0; b < A; ++b) {
        double clipped = 0.0, above = 0.0, below = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
          const double jac = softmax_jacobian(pi, x, a, b);
          const double q = vals.q(x, a);
          const double v = vals.v[x];
          clipped += std::max(0.0, q - v) * jac;
          if (q > v)
            above += v * jac;
          else
            below += q * jac;
        }
        for (std::size_t s = 0; s < S; ++s) {
          const double w = discount * reach(s, x);
          if (w == 0.0) continue;
          report.clipped_term(s, x * A + b) += w * clipped;
          report.above_mean_term(s, x * A + b) += w * above;
          report.below_mean_term(s, x * A + b) += w * below;
        }
      }
    }
    reach = matmul(reach, p_pi);
    discount *= mdp.gamma;
  }

  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t j = 0; j < P; ++j) {
      const double total = report.clipped_term(s, j) + report.above_mean_term(s, j) + report.below_mean_term(s, j);
      report.max_abs_error = std::max(report.max_abs_error, std::abs(total - grad(s, j)));
    }
  report.holds = report.max_abs_error <= kDecompositionTolerance;
  return report;
}

LipschitzReport check_lipschitz_bound(const EmbeddedMdp& instance, const TabularPolicy& policy) {
  LipschitzReport report;
  TabularMdp mdp = instance.mdp;
  mdp.gamma = 1.0;
  const std::size_t S = mdp.num_states;
  if (instance.embedding.rows() != S) throw DimensionError("check_lipschitz_bound: embedding row count != states");
  const ExactValues values = policy_eval(mdp, policy, instance.horizon, instance.terminal_value);
  const Matrix pi = policy.probabilities();

  bool stationary = true;
  for (std::size_t s = 0; s < S; ++s) {
    if (std::abs(values.v_next[s] - values.v[s]) > 1e-10) stationary = false;
    double expected_next = 0.0;
    for (std::size_t a = 0; a < mdp.num_actions; ++a)
      for (std::size_t n = 0; n < S; ++n) expected_next += pi(s, a) * mdp.p(s, a, n) * values.v_next[n];
    if (std::abs(expected_next - values.v[s]) > 1e-10) {
      report.reason = "E[v(s')] != v(s) at state " + std::to_string(s);
      return report;
    }
  }
  report.applicable = true;

  auto distance = [&](std::size_t i, std::size_t j) {
    double d2 = 0.0;
    for (std::size_t c = 0; c < instance.embedding.cols(); ++c) {
      const double d = instance.embedding(i, c) - instance.embedding(j, c);
      d2 += d * d;
    }
    return std::sqrt(d2);
  };
  // K bounds |v_next(j) - v(i)| / ||e_j - e_i||; both are the same function
  // when the values are stationary.
  double k = 0.0;
  for (std::size_t i = 0; i < S; ++i)
    for (std::size_t j = 0; j < S; ++j) {
      if (stationary && j <= i) continue;
      const double dv = std::abs(values.v_next[j] - values.v[i]);
      const double de = distance(i, j);
      if (de == 0.0) {
        if (dv > 1e-12) {
          k = std::numeric_limits<double>::infinity();
          report.reason = "values differ at coincident embeddings; the Lipschitz bound is vacuous";
        }
        continue;
      }
      k = std::max(k, dv / de);
    }
  report.lipschitz_constant = k;

  report.C = constant_C(mdp, policy, values);
  for (std::size_t s = 0; s < S; ++s) {
    double half_abs = 0.0, half_bound = 0.0;
    for (std::size_t a = 0; a < mdp.num_actions; ++a)
      for (std::size_t n = 0; n < S; ++n) {
        const double w = pi(s, a) * mdp.p(s, a, n);
        half_abs += 0.5 * w * std::abs(values.v_next[n] - values.v[s]);
        const double d = distance(n, s);
        if (d > 0.0) half_bound += 0.5 * w * k * d;
      }
    report.max_equality_error = std::max(report.max_equality_error, std::abs(report.C[s] - half_abs));
    if (std::isfinite(k)) report.max_bound_violation = std::max(report.max_bound_violation, report.C[s] - half_bound);
  }
  report.holds = report.max_equality_error <= 1e-10 && report.max_bound_violation <= 1e-10;
  return report;
}

TabularMdp random_mdp(Rng& rng, std::size_t states, std::size_t actions, double gamma) {
  TabularMdp mdp;
  mdp.num_states = states;
  mdp.num_actions = actions;
  mdp.gamma = gamma;
  mdp.transitions.resize(states * actions * states);
  mdp.rewards.resize(states * actions);
  std::exponential_distribution<double> exp1(1.0);
  for (std::size_t s = 0; s < states; ++s)
    for (std::size_t a = 0; a < actions; ++a) {
      double total = 0.0;
      for (std::size_t n = 0; n < states; ++n) {
        mdp.p(s, a, n) = exp1(rng.engine());
        total += mdp.p(s, a, n);
      }
      // normalize, then push the rounding residue onto the largest entry
      double sum = 0.0;
      std::size_t biggest = 0;
      for (std::size_t n = 0; n < states; ++n) {
        mdp.p(s, a, n) /= total;
        sum += mdp.p(s, a, n);
        if (mdp.p(s, a, n) > mdp.p(s, a, biggest)) biggest = n;
      }
      mdp.p(s, a, biggest) += 1.0 - sum;
      mdp.r(s, a) = rng.uniform();
    }
  return mdp;
}

TabularPolicy random_policy(Rng& rng, std::size_t states, std::size_t actions, double logit_scale) {
  TabularPolicy policy{Matrix(states, actions)};
  for (double& x : policy.logits.values()) x = logit_scale * rng.normal();
  return policy;
}

std::vector<double> discounted_visitation(const TabularMdp& mdp, const TabularPolicy& policy) {
  if (mdp.gamma >= 1.0) throw SingularSystemError("discounted_visitation: gamma must be < 1");
  const Matrix pi = policy.probabilities();
  // d^T (I - gamma P_pi) = (1 - gamma) mu^T  <=>  (I - gamma P_pi)^T d = (1 - gamma) mu
  Matrix system = policy_transition(mdp, pi).transpose();
  for (double& x : system.values()) x *= -mdp.gamma;
  for (std::size_t s = 0; s < mdp.num_states; ++s) system(s, s) += 1.0;
  auto mu = mdp.start_distribution();
  for (double& m : mu) m *= (1.0 - mdp.gamma);
  return solve_linear(std::move(system), std::move(mu));
}

EstimatorReport estimator_equivalence(const TabularMdp& mdp, const TabularPolicy& policy, std::size_t samples,
                                      Rng& rng) {
  if (samples < 2) throw std::invalid_argument("estimator_equivalence: need at least 2 samples");
  const std::size_t S = mdp.num_states;
  const std::size_t A = mdp.num_actions;
  const ExactValues values = policy_eval(mdp, policy, std::nullopt);
  const Matrix pi = policy.probabilities();
  const auto d = discounted_visitation(mdp, policy);

  EstimatorReport report;
  report.exact.assign(S * A, 0.0);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t b = 0; b < A; ++b) {
      double g = 0.0;
      for (std::size_t a = 0; a < A; ++a) g += values.h_plus(s, a) * softmax_jacobian(pi, s, a, b);
      report.exact[s * A + b] = d[s] * g;
    }

  std::vector<double> sum(S * A, 0.0), sum_sq(S * A, 0.0);
  std::discrete_distribution<std::size_t> state_dist(d.begin(), d.end());
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t s = state_dist(rng.engine());
    const std::size_t a = dist::sample(dist::Categorical{std::vector<double>(policy.logits.row(s).begin(),
                                                                              policy.logits.row(s).end())},
                                       rng);
    const double w = values.h_plus(s, a);
    for (std::size_t b = 0; b < A; ++b) {
      const double x = w * ((a == b ? 1.0 : 0.0) - pi(s, b));
      sum[s * A + b] += x;
      sum_sq[s * A + b] += x * x;
    }
  }
  const double n = static_cast<double>(samples);
  report.estimate.resize(S * A);
  report.standard_error.resize(S * A);
  double err2 = 0.0, se2 = 0.0;
  for (std::size_t j = 0; j < S * A; ++j) {
    const double mean = sum[j] / n;
    const double var = std::max(0.0, (sum_sq[j] - n * mean * mean) / (n - 1.0));
    report.estimate[j] = mean;
    report.standard_error[j] = std::sqrt(var / n);
    const double diff = mean - report.exact[j];
    err2 += diff * diff;
    se2 += var / n;
    if (report.standard_error[j] > 0.0)
      report.max_z = std::max(report.max_z, std::abs(diff) / report.standard_error[j]);
    else if (std::abs(diff) > 1e-12)
      report.max_z = std::numeric_limits<double>::infinity();
  }
  report.error_norm = std::sqrt(err2);
  report.standard_error_norm = std::sqrt(se2);
  report.within_3se = report.error_norm <= 3.0 * report.standard_error_norm + 1e-15;
  return report;
}

std::string mdp_to_json(const TabularMdp& mdp) {
  nlohmann::json j;
  j["states"] = mdp.num_states;
  j["actions"] = mdp.num_actions;
  j["gamma"] = mdp.gamma;
  j["P"] = mdp.transitions;
  j["R"] = mdp.rewards;
  if (mdp.horizon) j["horizon"] = *mdp.horizon;
  if (!mdp.initial.empty()) j["initial"] = mdp.initial;
  return j.dump(2);
}

TabularMdp mdp_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  TabularMdp mdp;
  mdp.num_states = j.at("states").get<std::size_t>();
  mdp.num_actions = j.at("actions").get<std::size_t>();
  mdp.gamma = j.at("gamma").get<double>();
  mdp.transitions = j.at("P").get<std::vector<double>>();
  mdp.rewards = j.at("R").get<std::vector<double>>();
  if (j.contains("horizon") && !j["horizon"].is_null()) mdp.horizon = j["horizon"].get<std::size_t>();
  if (j.contains("initial")) mdp.initial = j["initial"].get<std::vector<double>>();
  mdp.validate();
  return mdp;
}

TabularMdp load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_mdp: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return mdp_from_json(ss.str());
}

void save_mdp(const TabularMdp& mdp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_mdp: cannot write '" + path + "'");
  out << mdp_to_json(mdp) << '\n';
}

}  // namespace vsop::tabular
