#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vsop::optim {

enum class Kind { adam, rmsprop };

Kind parse_kind(std::string_view name);
std::string_view to_string(Kind kind);

struct OptimizerConfig {
  Kind kind = Kind::adam;
  double epsilon = 1e-8;
  double beta1 = 0.9;   // adam
  double beta2 = 0.999; // adam
  double alpha = 0.99;  // rmsprop smoothing
};

// A named, mutable view of one parameter block. `decay` selects whether the
// weight-decay term applies to the block.
struct ParamBlock {
  std::string name;
  std::span<double> values;
  bool decay = true;
};

struct GradBlock {
  std::string name;
  std::span<const double> values;
};

class NonFiniteGradientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OptimizerState {
 public:
  explicit OptimizerState(OptimizerConfig config = {}) : config_(config) {}

  const OptimizerConfig& config() const { return config_; }
  std::uint64_t step_count() const { return steps_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
  friend void step(OptimizerState&, std::span<ParamBlock>, std::span<const GradBlock>, double, double);

  OptimizerConfig config_;
  std::uint64_t steps_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

// One optimizer update:
//   adam:    p <- p - lr * m_hat / (sqrt(v_hat) + eps) - lr * 2 * decay_coeff * p
//   rmsprop: p <- p - lr * g / (sqrt(v) + eps)         - lr * 2 * decay_coeff * p
// The decay term is the gradient of decay_coeff * ||p||^2 scaled by lr.
void step(OptimizerState& state, std::span<ParamBlock> params, std::span<const GradBlock> grads, double lr,
          double decay_coeff);

struct LrSchedule {
  double base_lr = 3e-4;
  std::size_t total_updates = 1;
  bool anneal = true;

  // base_lr * (1 - t / total_updates) when annealing, floored at zero.
  double at(std::size_t update) const;
};

// Weight-decay precision implied by dropout rate p and buffer size |D|:
// (1 - p) / (2 |D|).
double beta_from_dropout(double p, std::size_t buffer_size);

}  // namespace vsop::optim
