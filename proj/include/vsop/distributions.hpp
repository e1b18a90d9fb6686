#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "vsop/rng.hpp"

namespace vsop::dist {

class InvalidActionError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Independent normal with state-independent log standard deviations.
struct DiagGaussian {
  std::vector<double> mean;
  std::vector<double> log_std;
};

struct Categorical {
  std::vector<double> logits;
};

// Max-shifted softmax.
std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);

double log_prob(const DiagGaussian& d, std::span<const double> action);
double log_prob(const Categorical& d, std::size_t action);

std::vector<double> sample(const DiagGaussian& d, Rng& rng);
std::size_t sample(const Categorical& d, Rng& rng);

double entropy(const DiagGaussian& d);
double entropy(const Categorical& d);

struct GaussianGrad {
  std::vector<double> mean;
  std::vector<double> log_std;
};

// d log pi / d(mean, log_std): (a - mu) / sigma^2 and (a - mu)^2 / sigma^2 - 1.
GaussianGrad log_prob_grad(const DiagGaussian& d, std::span<const double> action);
// d log pi / d logits = onehot(a) - softmax(logits).
std::vector<double> log_prob_grad(const Categorical& d, std::size_t action);

// Entropy gradients: 1 per log_std entry; -p_i (log p_i + H) per logit.
GaussianGrad entropy_grad(const DiagGaussian& d);
std::vector<double> entropy_grad(const Categorical& d);

std::size_t mode(const Categorical& d);

}  // namespace vsop::dist
