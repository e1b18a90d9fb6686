#include "vsop/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace vsop::dist {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)

void check_dims(const DiagGaussian& d, std::span<const double> action) {
  if (d.mean.size() != d.log_std.size() || action.size() != d.mean.size())
    throw std::invalid_argument("DiagGaussian: action dimension mismatch");
}

void check_index(const Categorical& d, std::size_t action) {
  if (action >= d.logits.size())
    throw InvalidActionError("Categorical: action " + std::to_string(action) + " outside [0, " +
                             std::to_string(d.logits.size()) + ")");
}

}  // namespace

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double shift = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (double& v : p) {
    v = std::exp(v - shift);
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double shift = *std::max_element(out.begin(), out.end());
  double total = 0.0;
  for (double v : out) total += std::exp(v - shift);
  const double log_z = shift + std::log(total);
  for (double& v : out) v -= log_z;
  return out;
}

double log_prob(const DiagGaussian& d, std::span<const double> action) {
  check_dims(d, action);
  double lp = 0.0;
  for (std::size_t i = 0; i < action.size(); ++i) {
    const double z = (action[i] - d.mean[i]) * std::exp(-d.log_std[i]);
    lp += -0.5 * (z * z + 2.0 * d.log_std[i] + kLog2Pi);
  }
  return lp;
}

double log_prob(const Categorical& d, std::size_t action) {
  check_index(d, action);
  return log_softmax(d.logits)[action];
}

std::vector<double> sample(const DiagGaussian& d, Rng& rng) {
  std::vector<double> a(d.mean.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = d.mean[i] + std::exp(d.log_std[i]) * rng.normal();
  return a;
}

std::size_t sample(const Categorical& d, Rng& rng) {
  const auto p = softmax(d.logits);
  const double u = rng.uniform();
  double cdf = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    cdf += p[i];
    if (u < cdf) return i;
  }
  // u fell into the rounding gap above the final cdf value
  for (std::size_t i = p.size(); i-- > 0;)
    if (p[i] > 0.0) return i;
  return p.size() - 1;
}

double entropy(const DiagGaussian& d) {
  double h = 0.0;
  for (double ls : d.log_std) h += ls + 0.5 * (kLog2Pi + 1.0);
  return h;
}

double entropy(const Categorical& d) {
  const auto p = softmax(d.logits);
  const auto lp = log_softmax(d.logits);
  double h = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) h -= p[i] * lp[i];
  return h;
}

GaussianGrad log_prob_grad(const DiagGaussian& d, std::span<const double> action) {
  check_dims(d, action);
  GaussianGrad g{std::vector<double>(action.size()), std::vector<double>(action.size())};
  for (std::size_t i = 0; i < action.size(); ++i) {
    const double inv_var = std::exp(-2.0 * d.log_std[i]);
    const double diff = action[i] - d.mean[i];
    g.mean[i] = diff * inv_var;
    g.log_std[i] = diff * diff * inv_var - 1.0;
  }
  return g;
}

std::vector<double> log_prob_grad(const Categorical& d, std::size_t action) {
  check_index(d, action);
  auto g = softmax(d.logits);
  for (double& v : g) v = -v;
  g[action] += 1.0;
  return g;
}

GaussianGrad entropy_grad(const DiagGaussian& d) {
  return {std::vector<double>(d.mean.size(), 0.0), std::vector<double>(d.log_std.size(), 1.0)};
}

std::vector<double> entropy_grad(const Categorical& d) {
  const auto p = softmax(d.logits);
  const auto lp = log_softmax(d.logits);
  const double h = entropy(d);
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) g[i] = -p[i] * (lp[i] + h);
  return g;
}

std::size_t mode(const Categorical& d) {
  return static_cast<std::size_t>(std::max_element(d.logits.begin(), d.logits.end()) - d.logits.begin());
}

}  // namespace vsop::dist
