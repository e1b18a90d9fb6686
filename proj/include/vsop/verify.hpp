#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vsop/matrix.hpp"
#include "vsop/nn.hpp"
#include "vsop/rng.hpp"

namespace vsop::verify {

struct SuiteResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;      // worst observed error or violation
  double tolerance = 0.0;  // threshold the worst value is compared with
  std::size_t cases = 0;
  std::string detail;
};

struct SuiteOptions {
  std::uint64_t seed = 20240601;
  std::size_t theorem_instances = 1000;
  std::size_t decomposition_instances = 100;
  std::size_t estimator_instances = 20;
  std::size_t estimator_samples = 100000;
  std::size_t gae_trajectories = 100;
  std::size_t gradient_networks = 20;
  std::size_t spectral_matrices = 50;
};

SuiteResult theorem_suite(const SuiteOptions& options = {});
SuiteResult decomposition_suite(const SuiteOptions& options = {});
SuiteResult estimator_suite(const SuiteOptions& options = {});
SuiteResult lipschitz_suite(const SuiteOptions& options = {});
SuiteResult gae_suite(const SuiteOptions& options = {});
SuiteResult gradient_suite(const SuiteOptions& options = {});
SuiteResult spectral_suite(const SuiteOptions& options = {});

std::vector<std::string> suite_names();
// "theorem" covers the bound, decomposition, estimator and Lipschitz checks;
// "all" runs every suite.
std::vector<SuiteResult> run_suite(const std::string& name, const SuiteOptions& options = {});

// Helpers shared with the tests.
// Explicit GAE double sum h_t = sum_k (gamma lambda)^(k-t) delta_k over one
// episode segment without boundaries except the last entry.
std::vector<double> gae_double_sum(const std::vector<double>& rewards, const std::vector<double>& values,
                                   double bootstrap, bool terminal, double gamma, double lambda);

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
std::vector<double> jacobi_eigenvalues(Matrix a, double tol = 1e-14, std::size_t max_sweeps = 100);

// Max relative error between backward() and central differences of
// sum(cotangent * forward(input)) over every parameter.
double finite_difference_error(const nn::Mlp& net, const Matrix& input, const Matrix& cotangent,
                               const nn::DropoutMask* mask, double step = 1e-6);

}  // namespace vsop::verify
