#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsop/matrix.hpp"
#include "vsop/rng.hpp"

namespace vsop::tabular {

// Explicit finite MDP. Transitions are stored flattened as [s][a][s'],
// rewards as [s][a] (expected immediate reward).
struct TabularMdp {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::vector<double> transitions;
  std::vector<double> rewards;
  double gamma = 0.99;
  std::optional<std::size_t> horizon;  // nullopt: infinite horizon
  std::vector<double> initial;         // start distribution; empty means uniform

  double p(std::size_t s, std::size_t a, std::size_t next) const {
    return transitions[(s * num_actions + a) * num_states + next];
  }
  double& p(std::size_t s, std::size_t a, std::size_t next) {
    return transitions[(s * num_actions + a) * num_states + next];
  }
  double r(std::size_t s, std::size_t a) const { return rewards[s * num_actions + a]; }
  double& r(std::size_t s, std::size_t a) { return rewards[s * num_actions + a]; }

  // Shape, stochastic rows (1e-12) and gamma range; throws on violation.
  void validate() const;
  bool rewards_nonnegative() const;
  std::vector<double> start_distribution() const;
};

// Rowwise-softmax policy over logits [S x A].
struct TabularPolicy {
  Matrix logits;

  static TabularPolicy uniform(std::size_t states, std::size_t actions);
  std::size_t num_states() const { return logits.rows(); }
  std::size_t num_actions() const { return logits.cols(); }
  Matrix probabilities() const;
};

struct ExactValues {
  std::optional<std::size_t> horizon;
  std::vector<double> v;       // value with `horizon` steps to go
  std::vector<double> v_next;  // value used for successor states (horizon - 1, or v itself)
  Matrix q;                    // R + gamma * P v_next
  Matrix h_plus;               // max(0, q - v)
  std::vector<double> C;       // sum_a pi sum_s' P (gamma v_next(s') - v(s))^+
};

class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exact evaluation: direct linear solve for infinite horizons, backward
// induction for finite ones. `terminal` seeds v_0 (zeros when empty).
ExactValues policy_eval(const TabularMdp& mdp, const TabularPolicy& policy);
ExactValues policy_eval(const TabularMdp& mdp, const TabularPolicy& policy, std::optional<std::size_t> horizon,
                        const std::vector<double>& terminal = {});

// Bellman residual || v - (r_pi + gamma P_pi v_next) ||_inf.
double bellman_residual(const TabularMdp& mdp, const TabularPolicy& policy, const ExactValues& values);

std::vector<double> constant_C(const TabularMdp& mdp, const TabularPolicy& policy, const ExactValues& values);

// Lower bound v*: horizon 1 is sum_a pi h+; horizon 2 adds the
// gamma-discounted expectation of the one-step-to-go term at s'.
std::vector<double> lower_bound_v_star(const TabularMdp& mdp, const TabularPolicy& policy,
                                       const ExactValues& values, std::size_t horizon);

struct TheoremReport {
  bool holds = true;
  double max_violation = -1e300;       // max_s v* - (v + C), over horizons 1 and 2
  double max_reward_bound_violation = -1e300;  // max_s sum pi h+ - (r_pi + C)
  double max_value_bound_violation = -1e300;  // max_s sum pi h+ - v
  double max_v_star = 0.0;
};

inline constexpr double kBoundTolerance = 1e-9;

TheoremReport check_theorem1(const TabularMdp& mdp, const TabularPolicy& policy);

struct DecompositionReport {
  bool holds = false;
  double max_abs_error = 0.0;
  // Rows: start state s; columns: logit index s_param * A + a.
  Matrix exact_gradient;
  Matrix clipped_term;      // gradient of the lower bound v*
  Matrix above_mean_term;   // 1(q > v) v
  Matrix below_mean_term;   // 1(q <= v) q
};

inline constexpr double kDecompositionTolerance = 1e-8;

// Finite-horizon gradient of v_pi w.r.t. the logits by dynamic programming,
// against the three-term clipped split summed over k < k_max steps.
DecompositionReport check_pg_decomposition(const TabularMdp& mdp, const TabularPolicy& policy, std::size_t k_max);

// d pi(a|s) / d logits(s, b) = pi(a|s) (1[a = b] - pi(b|s)).
double softmax_jacobian(const Matrix& probs, std::size_t s, std::size_t a, std::size_t b);

struct EmbeddedMdp {
  TabularMdp mdp;             // gamma is ignored; the check uses gamma = 1
  Matrix embedding;           // S x d coordinates
  std::vector<double> terminal_value;
  std::size_t horizon = 1;
};

struct LipschitzReport {
  bool applicable = false;
  bool holds = false;
  double lipschitz_constant = 0.0;
  double max_equality_error = 0.0;   // |C - 1/2 E|dv||
  double max_bound_violation = 0.0;  // max_s C - 1/2 E[K ||ds||]
  std::vector<double> C;
  std::string reason;
};

LipschitzReport check_lipschitz_bound(const EmbeddedMdp& instance, const TabularPolicy& policy);

// Random instance generator: Dirichlet(1) transition rows, Uniform[0,1]
// rewards, logits ~ N(0, logit_scale^2).
TabularMdp random_mdp(Rng& rng, std::size_t states, std::size_t actions, double gamma);
TabularPolicy random_policy(Rng& rng, std::size_t states, std::size_t actions, double logit_scale = 1.0);

struct EstimatorReport {
  std::vector<double> exact;     // sum_s d(s) sum_a h+(s,a) grad pi(a|s)
  std::vector<double> estimate;  // mean of h+(s,a) grad log pi(a|s), s ~ d, a ~ pi
  std::vector<double> standard_error;
  double error_norm = 0.0;
  double standard_error_norm = 0.0;
  double max_z = 0.0;
  bool within_3se = false;  // error_norm <= 3 * standard_error_norm
};

// Discounted state visitation from the start distribution (infinite horizon).
std::vector<double> discounted_visitation(const TabularMdp& mdp, const TabularPolicy& policy);

EstimatorReport estimator_equivalence(const TabularMdp& mdp, const TabularPolicy& policy, std::size_t samples,
                                      Rng& rng);

// JSON file with keys: states, actions, gamma, P (flattened S*A*S), R
// (flattened S*A), optional horizon and initial.
TabularMdp load_mdp(const std::string& path);
void save_mdp(const TabularMdp& mdp, const std::string& path);
std::string mdp_to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const std::string& text);

}  // namespace vsop::tabular
