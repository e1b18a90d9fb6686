#include "vsop/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "vsop/distributions.hpp"
#include "vsop/rollout.hpp"
#include "vsop/tabular.hpp"

namespace vsop::verify {

namespace {

constexpr double kGammas[] = {0.5, 0.9, 0.99};

std::string describe(const char* label, double worst, double tol) {
  std::ostringstream os;
  os.precision(3);
  os << label << " " << std::scientific << worst << " (tolerance " << tol << ")";
  return os.str();
}

tabular::TabularMdp random_instance(Rng& rng, std::size_t max_states, std::size_t max_actions, std::size_t min_states = 1,
                                    std::size_t min_actions = 1) {
  const std::size_t s = min_states + rng.index(max_states - min_states + 1);
  const std::size_t a = min_actions + rng.index(max_actions - min_actions + 1);
  return tabular::random_mdp(rng, s, a, kGammas[rng.index(3)]);
}

}  // namespace

SuiteResult theorem_suite(const SuiteOptions& options) {
  SuiteResult r{"theorem-bound", true, -std::numeric_limits<double>::infinity(), tabular::kBoundTolerance, 0, {}};
  Rng rng(options.seed);
  double worst_bound = -1e300, worst_c3 = -1e300, worst_c4 = -1e300;
  std::size_t nonvacuous = 0;
  for (std::size_t i = 0; i < options.theorem_instances; ++i) {
    const auto mdp = random_instance(rng, 5, 4);
    const auto policy = tabular::random_policy(rng, mdp.num_states, mdp.num_actions, rng.uniform(0.5, 3.0));
    const auto rep = tabular::check_theorem1(mdp, policy);
    worst_bound = std::max(worst_bound, rep.max_violation);
    worst_c3 = std::max(worst_c3, rep.max_reward_bound_violation);
    worst_c4 = std::max(worst_c4, rep.max_value_bound_violation);
    if (rep.max_v_star > 0.0) ++nonvacuous;
    if (!rep.holds) r.passed = false;
    ++r.cases;
  }
  r.worst = std::max({worst_bound, worst_c3, worst_c4});
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << "max(v* - v - C) " << worst_bound << ", max sum(pi h+) - (r_pi + C) " << worst_c3
     << ", max sum(pi h+) - v " << worst_c4 << ", instances with v* > 0: " << nonvacuous;
  r.detail = os.str();
  return r;
}

SuiteResult decomposition_suite(const SuiteOptions& options) {
  SuiteResult r{"gradient-decomposition", true, 0.0, tabular::kDecompositionTolerance, 0, {}};
  Rng rng(options.seed + 1);
  for (std::size_t i = 0; i < options.decomposition_instances; ++i) {
    auto mdp = random_instance(rng, 4, 3);
    mdp.horizon = 1 + rng.index(3);
    const auto policy = tabular::random_policy(rng, mdp.num_states, mdp.num_actions, 1.5);
    const auto rep = tabular::check_pg_decomposition(mdp, policy, *mdp.horizon);
    r.worst = std::max(r.worst, rep.max_abs_error);
    if (!rep.holds) r.passed = false;
    ++r.cases;
  }
  r.detail = describe("max |grad v - three-term sum|", r.worst, r.tolerance);
  return r;
}

SuiteResult estimator_suite(const SuiteOptions& options) {
  SuiteResult r{"estimator-equivalence", true, 0.0, 3.0, 0, {}};
  Rng rng(options.seed + 2);
  double worst_z = 0.0;
  for (std::size_t i = 0; i < options.estimator_instances; ++i) {
    auto mdp = random_instance(rng, 5, 4, 2, 2);
    mdp.gamma = rng.bernoulli(0.5) ? 0.5 : 0.9;
    const auto policy = tabular::random_policy(rng, mdp.num_states, mdp.num_actions, 1.0);
    Rng sampler = rng.derive(i);
    const auto rep = tabular::estimator_equivalence(mdp, policy, options.estimator_samples, sampler);
    const double ratio = rep.standard_error_norm > 0 ? rep.error_norm / rep.standard_error_norm : 0.0;
    r.worst = std::max(r.worst, ratio);
    worst_z = std::max(worst_z, rep.max_z);
    if (!rep.within_3se) r.passed = false;
    ++r.cases;
  }
  std::ostringstream os;
  os.precision(3);
  os << "max ||MC - exact|| / ||SE|| " << r.worst << " (tolerance 3), max per-component |z| " << worst_z;
  r.detail = os.str();
  return r;
}

SuiteResult lipschitz_suite(const SuiteOptions& options) {
  SuiteResult r{"value-lipschitz", true, 0.0, 1e-10, 0, {}};
  Rng rng(options.seed + 3);
  auto record = [&](const tabular::LipschitzReport& rep) {
    ++r.cases;
    if (!rep.applicable || !rep.holds) r.passed = false;
    r.worst = std::max({r.worst, rep.max_equality_error, rep.max_bound_violation});
  };

  // three-point walk with absorbing ends and v(x) = x
  {
    tabular::EmbeddedMdp inst;
    auto& m = inst.mdp;
    m.num_states = 3;
    m.num_actions = 1;
    m.transitions = {1, 0, 0, 0.5, 0, 0.5, 0, 0, 1};
    m.rewards = {0, 0, 0};
    m.gamma = 1.0;
    inst.embedding = Matrix(3, 1, std::vector<double>{-1, 0, 1});
    inst.terminal_value = {-1, 0, 1};
    record(tabular::check_lipschitz_bound(inst, tabular::TabularPolicy::uniform(3, 1)));
  }
  // random martingale instances on a line with an extra embedding coordinate
  for (std::size_t i = 0; i < 20; ++i) {
    const std::size_t s = 4;
    const std::size_t a = 1 + rng.index(3);
    std::vector<double> x(s);
    for (double& v : x) v = rng.uniform(-2.0, 2.0);
    std::sort(x.begin(), x.end());
    tabular::EmbeddedMdp inst;
    auto& m = inst.mdp;
    m.num_states = s;
    m.num_actions = a;
    m.gamma = 1.0;
    m.transitions.assign(s * a * s, 0.0);
    m.rewards.assign(s * a, 0.0);
    for (std::size_t st = 0; st < s; ++st)
      for (std::size_t act = 0; act < a; ++act) {
        if (st == 0 || st + 1 == s) {
          m.p(st, act, st) = 1.0;
          continue;
        }
        const std::size_t lo = rng.index(st);
        const std::size_t hi = st + 1 + rng.index(s - st - 1);
        const double to_lo = (x[hi] - x[st]) / (x[hi] - x[lo]);
        m.p(st, act, lo) = to_lo;
        m.p(st, act, hi) = 1.0 - to_lo;
      }
    const double slope = rng.uniform(-3.0, 3.0), offset = rng.uniform(-1.0, 1.0);
    inst.embedding = Matrix(s, 2);
    inst.terminal_value.resize(s);
    for (std::size_t st = 0; st < s; ++st) {
      inst.embedding(st, 0) = x[st];
      inst.embedding(st, 1) = rng.uniform(-1.0, 1.0);
      inst.terminal_value[st] = slope * x[st] + offset;
    }
    record(tabular::check_lipschitz_bound(inst, tabular::random_policy(rng, s, a, 1.0)));
  }
  r.detail = describe("max equality error / bound violation", r.worst, r.tolerance);
  return r;
}

std::vector<double> gae_double_sum(const std::vector<double>& rewards, const std::vector<double>& values,
                                   double bootstrap, bool terminal, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  std::vector<double> delta(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double next = k + 1 < n ? values[k + 1] : (terminal ? 0.0 : bootstrap);
    delta[k] = rewards[k] + gamma * next - values[k];
  }
  std::vector<double> h(n, 0.0);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t k = t; k < n; ++k) h[t] += std::pow(gamma * lambda, static_cast<double>(k - t)) * delta[k];
  return h;
}

SuiteResult gae_suite(const SuiteOptions& options) {
  SuiteResult r{"gae", true, 0.0, 1e-12, 0, {}};
  Rng rng(options.seed + 4);
  double worst_tele = 0.0;
  for (std::size_t i = 0; i < options.gae_trajectories; ++i) {
    const std::size_t len = 1 + rng.index(32);
    const double gamma = rng.uniform(0.8, 1.0), lambda = rng.uniform(0.01, 1.0);
    std::vector<double> rew(len), val(len), next(len, 0.0);
    std::vector<char> term(len, 0), trunc(len, 0);
    for (std::size_t k = 0; k < len; ++k) {
      rew[k] = rng.uniform(-1.0, 1.0);
      val[k] = rng.uniform(-1.0, 1.0);
      if (rng.bernoulli(0.1)) (rng.bernoulli(0.5) ? term : trunc)[k] = 1;
    }
    std::vector<double> boot(len);
    for (double& b : boot) b = rng.uniform(-1.0, 1.0);
    const double tail = rng.uniform(-1.0, 1.0);
    for (std::size_t k = 0; k < len; ++k)
      next[k] = term[k] ? 0.0 : trunc[k] ? boot[k] : (k + 1 < len ? val[k + 1] : tail);
    const auto got = rollout::gae(rew, val, next, term, trunc, len, 1, gamma, lambda);
    // oracle per segment
    std::size_t start = 0;
    for (std::size_t k = 0; k < len; ++k) {
      const bool end = term[k] || trunc[k] || k + 1 == len;
      if (!end) continue;
      std::vector<double> sr(rew.begin() + start, rew.begin() + k + 1), sv(val.begin() + start, val.begin() + k + 1);
      const double b = trunc[k] ? boot[k] : tail;
      const auto want = gae_double_sum(sr, sv, b, term[k], gamma, lambda);
      for (std::size_t j = 0; j < want.size(); ++j)
        r.worst = std::max(r.worst, std::abs(want[j] - got.advantages[start + j]));
      start = k + 1;
    }
    // lambda = 1 telescoping without internal boundaries
    std::vector<char> none(len, 0);
    std::vector<double> nx(len);
    for (std::size_t k = 0; k < len; ++k) nx[k] = k + 1 < len ? val[k + 1] : tail;
    const auto full = rollout::gae(rew, val, nx, none, none, len, 1, gamma, 1.0);
    for (std::size_t t = 0; t < len; ++t) {
      double ret = 0.0;
      for (std::size_t k = t; k < len; ++k) ret += std::pow(gamma, static_cast<double>(k - t)) * rew[k];
      ret += std::pow(gamma, static_cast<double>(len - t)) * tail;
      worst_tele = std::max(worst_tele, std::abs(full.advantages[t] + val[t] - ret));
    }
    ++r.cases;
  }
  r.passed = r.worst <= 1e-12 && worst_tele <= 1e-10;
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << "max |recursive - double sum| " << r.worst << " (tolerance 1e-12), max telescoping error "
     << worst_tele << " (tolerance 1e-10)";
  r.detail = os.str();
  return r;
}

double finite_difference_error(const nn::Mlp& net, const Matrix& input, const Matrix& cotangent,
                               const nn::DropoutMask* mask, double step) {
  const auto fw = nn::forward(net, input, mask);
  const auto bw = nn::backward(net, fw.cache, cotangent);
  auto objective = [&](const nn::Mlp& m) { return frobenius_inner(nn::predict(m, input, mask), cotangent); };
  nn::Mlp probe = net;
  double worst = 0.0;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3}); };
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const std::size_t nw = net.layers()[l].weight.size();
    for (std::size_t j = 0; j < nw; ++j) {
      double& w = probe.mutable_layers()[l].weight.values()[j];
      const double orig = w;
      w = orig + step;
      const double up = objective(probe);
      probe.mutable_layers()[l].weight.values()[j] = orig - step;
      const double down = objective(probe);
      probe.mutable_layers()[l].weight.values()[j] = orig;
      worst = std::max(worst, rel(bw.params.layers[l].weight.values()[j], (up - down) / (2 * step)));
    }
    for (std::size_t j = 0; j < net.layers()[l].bias.size(); ++j) {
      double& b = probe.mutable_layers()[l].bias[j];
      const double orig = b;
      b = orig + step;
      const double up = objective(probe);
      probe.mutable_layers()[l].bias[j] = orig - step;
      const double down = objective(probe);
      probe.mutable_layers()[l].bias[j] = orig;
      worst = std::max(worst, rel(bw.params.layers[l].bias[j], (up - down) / (2 * step)));
    }
  }
  Matrix x = input;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double orig = x.values()[j];
    x.values()[j] = orig + step;
    const double up = frobenius_inner(nn::predict(net, x, mask), cotangent);
    x.values()[j] = orig - step;
    const double down = frobenius_inner(nn::predict(net, x, mask), cotangent);
    x.values()[j] = orig;
    worst = std::max(worst, rel(bw.input_grad.values()[j], (up - down) / (2 * step)));
  }
  return worst;
}

SuiteResult gradient_suite(const SuiteOptions& options) {
  SuiteResult r{"network-gradients", true, 0.0, 1e-5, 0, {}};
  Rng rng(options.seed + 5);
  const nn::Activation acts[] = {nn::Activation::relu, nn::Activation::tanh, nn::Activation::identity};
  for (std::size_t i = 0; i < options.gradient_networks; ++i) {
    nn::MlpSpec spec;
    spec.input = 1 + rng.index(5);
    spec.hidden = {2 + rng.index(7), 2 + rng.index(7)};
    spec.output = 1 + rng.index(4);
    spec.hidden_activation = acts[rng.index(3)];
    spec.dropout_rate = rng.bernoulli(0.5) ? 0.3 : 0.0;
    spec.spectral_hidden = rng.bernoulli(0.5);
    auto net = nn::Mlp::make(spec, rng);
    // zero biases put relu units exactly on the kink once inputs are masked
    for (auto& layer : net.mutable_layers())
      for (double& b : layer.bias) b = 0.1 * rng.normal();
    const std::size_t batch = 1 + rng.index(4);
    Matrix in(batch, spec.input), cot(batch, spec.output);
    for (double& v : in.values()) v = rng.normal();
    for (double& v : cot.values()) v = rng.normal();
    nn::DropoutMask mask = nn::sample_dropout_mask(net, rng, batch);
    r.worst = std::max(r.worst, finite_difference_error(net, in, cot, spec.dropout_rate > 0 ? &mask : nullptr));
    ++r.cases;
  }
  // policy heads
  for (std::size_t i = 0; i < options.gradient_networks; ++i) {
    const std::size_t m = 1 + rng.index(4);
    dist::DiagGaussian g{std::vector<double>(m), std::vector<double>(m)};
    std::vector<double> a(m);
    for (std::size_t j = 0; j < m; ++j) {
      g.mean[j] = rng.normal();
      g.log_std[j] = rng.uniform(-1.0, 1.0);
      a[j] = rng.normal();
    }
    const auto grad = dist::log_prob_grad(g, a);
    const double h = 1e-6;
    for (std::size_t j = 0; j < m; ++j) {
      auto up = g, down = g;
      up.mean[j] += h;
      down.mean[j] -= h;
      const double fd = (dist::log_prob(up, a) - dist::log_prob(down, a)) / (2 * h);
      r.worst = std::max(r.worst, std::abs(fd - grad.mean[j]) / std::max({std::abs(fd), std::abs(grad.mean[j]), 1e-3}));
      up = g;
      down = g;
      up.log_std[j] += h;
      down.log_std[j] -= h;
      const double fs = (dist::log_prob(up, a) - dist::log_prob(down, a)) / (2 * h);
      r.worst = std::max(r.worst, std::abs(fs - grad.log_std[j]) / std::max({std::abs(fs), std::abs(grad.log_std[j]), 1e-3}));
    }
    ++r.cases;
  }
  r.passed = r.worst < r.tolerance;
  r.detail = describe("max relative error", r.worst, r.tolerance);
  return r;
}

std::vector<double> jacobi_eigenvalues(Matrix a, double tol, std::size_t max_sweeps) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw DimensionError("jacobi_eigenvalues: matrix must be square");
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        total += a(i, j) * a(i, j);
        if (i != j) off += a(i, j) * a(i, j);
      }
    if (off <= tol * tol * std::max(total, 1e-300)) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

SuiteResult spectral_suite(const SuiteOptions& options) {
  SuiteResult r{"spectral-norm", true, 0.0, 1e-3, 0, {}};
  Rng rng(options.seed + 6);
  std::size_t outside = 0;
  for (std::size_t i = 0; i < options.spectral_matrices; ++i) {
    const std::size_t rows = i == 0 ? 64 : 1 + rng.index(64);
    const std::size_t cols = i == 0 ? 64 : 1 + rng.index(64);
    nn::DenseLayer layer;
    layer.weight = Matrix(rows, cols);
    for (double& v : layer.weight.values()) v = rng.normal();
    layer.bias.assign(rows, 0.0);
    layer.spectral.enabled = true;
    layer.spectral.u.resize(rows);
    for (double& v : layer.spectral.u) v = rng.normal();
    const auto res = nn::spectral_normalize(layer, 50);
    const Matrix gram = rows >= cols ? transposed_matmul(res.weight, res.weight) : matmul_transposed(res.weight, res.weight);
    const double top = std::sqrt(std::max(0.0, jacobi_eigenvalues(gram).front()));
    const double err = std::abs(top - 1.0);
    r.worst = std::max(r.worst, err);
    if (err > r.tolerance) ++outside;
    ++r.cases;
  }
  r.passed = outside == 0;
  r.detail = describe("max |sigma_max(W / sigma) - 1|", r.worst, r.tolerance) + ", matrices outside tolerance: " +
             std::to_string(outside);
  return r;
}

std::vector<std::string> suite_names() { return {"theorem", "gradients", "gae", "spectral", "all"}; }

std::vector<SuiteResult> run_suite(const std::string& name, const SuiteOptions& options) {
  if (name == "theorem")
    return {theorem_suite(options), decomposition_suite(options), estimator_suite(options), lipschitz_suite(options)};
  if (name == "gradients") return {gradient_suite(options)};
  if (name == "gae") return {gae_suite(options)};
  if (name == "spectral") return {spectral_suite(options)};
  if (name == "all")
    return {theorem_suite(options),  decomposition_suite(options), estimator_suite(options), lipschitz_suite(options),
            gae_suite(options),      gradient_suite(options),      spectral_suite(options)};
  std::string known;
  for (const auto& n : suite_names()) known += " " + n;
  throw std::invalid_argument("unknown suite '" + name + "'; available:" + known);
}

}  // namespace vsop::verify
