#include "vsop/optim.hpp"

#include <algorithm>
#include <cmath>

namespace vsop::optim {

Kind parse_kind(std::string_view name) {
  if (name == "adam") return Kind::adam;
  if (name == "rmsprop") return Kind::rmsprop;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

std::string_view to_string(Kind kind) { return kind == Kind::adam ? "adam" : "rmsprop"; }

void step(OptimizerState& state, std::span<ParamBlock> params, std::span<const GradBlock> grads, double lr,
          double decay_coeff) {
  if (params.size() != grads.size())
    throw std::invalid_argument("optim::step: " + std::to_string(params.size()) + " parameter blocks but " +
                                std::to_string(grads.size()) + " gradient blocks");
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].values.size() != grads[b].values.size())
      throw std::invalid_argument("optim::step: gradient for '" + params[b].name + "' has wrong size");
    for (double g : grads[b].values)
      if (!std::isfinite(g)) throw NonFiniteGradientError("non-finite gradient in block '" + params[b].name + "'");
  }
  if (state.m_.empty()) {
    for (const auto& p : params) {
      state.m_.emplace_back(p.values.size(), 0.0);
      state.v_.emplace_back(p.values.size(), 0.0);
    }
  } else if (state.m_.size() != params.size()) {
    throw std::invalid_argument("optim::step: parameter block layout changed between steps");
  }

  ++state.steps_;
  const auto& cfg = state.config_;
  const double t = static_cast<double>(state.steps_);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);

  for (std::size_t b = 0; b < params.size(); ++b) {
    auto p = params[b].values;
    auto g = grads[b].values;
    auto& m = state.m_[b];
    auto& v = state.v_[b];
    if (m.size() != p.size()) throw std::invalid_argument("optim::step: block '" + params[b].name + "' resized");
    const double decay = params[b].decay ? decay_coeff : 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      double update = 0.0;
      if (cfg.kind == Kind::adam) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        update = m_hat / (std::sqrt(v_hat) + cfg.epsilon);
      } else {
        v[i] = cfg.alpha * v[i] + (1.0 - cfg.alpha) * g[i] * g[i];
        update = g[i] / (std::sqrt(v[i]) + cfg.epsilon);
      }
      p[i] -= lr * update + lr * 2.0 * decay * p[i];
    }
  }
}

double LrSchedule::at(std::size_t update) const {
  if (!anneal) return base_lr;
  const double frac = 1.0 - static_cast<double>(update) / static_cast<double>(std::max<std::size_t>(total_updates, 1));
  return std::max(0.0, base_lr * frac);
}

double beta_from_dropout(double p, std::size_t buffer_size) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("beta_from_dropout: p must lie in [0, 1)");
  if (buffer_size == 0) throw std::invalid_argument("beta_from_dropout: buffer size must be >= 1");
  return (1.0 - p) / (2.0 * static_cast<double>(buffer_size));
}

}  // namespace vsop::optim
