#include "doctest.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "vsop/verify.hpp"

using namespace vsop;

TEST_CASE("gae double sum examples") {
  const auto h = verify::gae_double_sum({1.0, 1.0}, {0.0, 0.0}, 0.0, true, 0.5, 1.0);
  CHECK(h[0] == doctest::Approx(1.5));
  CHECK(h[1] == doctest::Approx(1.0));
  const auto b = verify::gae_double_sum({0.0}, {1.0}, 2.0, false, 0.9, 0.5);
  CHECK(b[0] == doctest::Approx(0.9 * 2.0 - 1.0));
}

TEST_CASE("jacobi eigenvalues against Eigen") {
  Rng rng(4);
  for (std::size_t n : {1u, 2u, 5u, 12u}) {
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) a(i, j) = a(j, i) = rng.normal();
    Eigen::MatrixXd e(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) e(i, j) = a(i, j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(e);
    auto mine = verify::jacobi_eigenvalues(a);
    std::sort(mine.begin(), mine.end());
    for (std::size_t i = 0; i < n; ++i) CHECK(mine[i] == doctest::Approx(solver.eigenvalues()(i)).epsilon(1e-10));
  }
}

TEST_CASE("certification suites") {
  verify::SuiteOptions o;
  o.theorem_instances = 100;
  o.decomposition_instances = 10;
  o.estimator_instances = 3;
  o.estimator_samples = 20000;
  o.gradient_networks = 5;
  for (const auto& r : verify::run_suite("theorem", o)) CHECK_MESSAGE(r.passed, r.name << " " << r.detail);
  const auto gae = verify::gae_suite(o);
  CHECK(gae.passed);
  CHECK(gae.worst < 1e-12);
  const auto grad = verify::gradient_suite(o);
  CHECK(grad.passed);
  CHECK(grad.worst < 1e-5);
  CHECK_THROWS(verify::run_suite("nope", o));
}

TEST_CASE("spectral suite reports its error measure") {
  verify::SuiteOptions o;
  o.spectral_matrices = 5;
  const auto r = verify::spectral_suite(o);
  CHECK(r.cases == 5);
  CHECK(std::isfinite(r.worst));
  CHECK(r.tolerance == 1e-3);
}
