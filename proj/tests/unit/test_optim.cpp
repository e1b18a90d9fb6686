#include <cmath>

#include "doctest.h"
#include "vsop/optim.hpp"

using namespace vsop::optim;

namespace {

double adam_once(OptimizerState& st, double& p, double g, double lr, double decay = 0.0) {
  std::vector<double> pv = {p};
  std::vector<double> gv = {g};
  std::vector<ParamBlock> params = {{"p", pv, true}};
  std::vector<GradBlock> grads = {{"p", gv}};
  step(st, params, grads, lr, decay);
  p = pv[0];
  return p;
}

}  // namespace

TEST_CASE("adam first step") {
  OptimizerState st;
  double p = 0.0;
  adam_once(st, p, 1.0, 0.1);
  CHECK(p == doctest::Approx(-0.1 / (1 + 1e-8)).epsilon(1e-14));
  CHECK(st.step_count() == 1);
}

TEST_CASE("zero gradient leaves parameters") {
  OptimizerState st;
  double p = 1.25;
  for (int i = 0; i < 3; ++i) adam_once(st, p, 0.0, 0.1);
  CHECK(p == 1.25);
  OptimizerState rms(OptimizerConfig{Kind::rmsprop});
  adam_once(rms, p, 0.0, 0.1);
  CHECK(p == 1.25);
}

TEST_CASE("three-step adam trace against a scalar recurrence") {
  OptimizerState st;
  double p = 0.5;
  double m = 0, v = 0, q = 0.5;
  const double g[3] = {1, -1, 1};
  for (int t = 1; t <= 3; ++t) {
    adam_once(st, p, g[t - 1], 0.01);
    m = 0.9 * m + 0.1 * g[t - 1];
    v = 0.999 * v + 0.001 * g[t - 1] * g[t - 1];
    const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
    q -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    CHECK(p == doctest::Approx(q).epsilon(1e-14));
  }
  for (const auto& s : st.second_moments())
    for (double x : s) CHECK(x >= 0.0);
  CHECK(st.step_count() == 3);
}

TEST_CASE("rmsprop and decay terms") {
  OptimizerState st(OptimizerConfig{Kind::rmsprop, 1e-5});
  double p = 2.0;
  adam_once(st, p, 0.5, 0.01, 0.25);
  const double vv = 0.01 * 0.25;
  CHECK(p == doctest::Approx(2.0 - 0.01 * 0.5 / (std::sqrt(vv) + 1e-5) - 0.01 * 2 * 0.25 * 2.0).epsilon(1e-14));

  // decay applies outside the adaptive scaling and skips blocks without decay
  OptimizerState ad;
  std::vector<double> a = {1.0}, b = {1.0}, g = {0.0};
  std::vector<ParamBlock> params = {{"a", a, true}, {"b", b, false}};
  std::vector<GradBlock> grads = {{"a", g}, {"b", g}};
  step(ad, params, grads, 0.1, 0.5);
  CHECK(a[0] == doctest::Approx(1.0 - 0.1 * 2 * 0.5 * 1.0));
  CHECK(b[0] == 1.0);
}

TEST_CASE("non-finite gradient names its block") {
  OptimizerState st;
  std::vector<double> a = {1.0}, g = {std::nan("")};
  std::vector<ParamBlock> params = {{"critic.w0", a, true}};
  std::vector<GradBlock> grads = {{"critic.w0", g}};
  try {
    step(st, params, grads, 0.1, 0.0);
    FAIL("expected an error");
  } catch (const NonFiniteGradientError& e) {
    CHECK(std::string(e.what()).find("critic.w0") != std::string::npos);
  }
}

TEST_CASE("beta from dropout") {
  CHECK(beta_from_dropout(0.02, 2048) == doctest::Approx(0.98 / 4096).epsilon(1e-14));
  CHECK(beta_from_dropout(0.02, 2048) == doctest::Approx(2.393e-4).epsilon(1e-3));
  CHECK(beta_from_dropout(0.0, 1) == 0.5);
  CHECK(beta_from_dropout(0.5, 100) == doctest::Approx(2.5e-3).epsilon(1e-14));
}

TEST_CASE("learning rate schedule endpoints") {
  LrSchedule s{3e-4, 100, true};
  CHECK(s.at(0) == 3e-4);
  CHECK(s.at(100) == 0.0);
  CHECK(s.at(50) == doctest::Approx(1.5e-4));
  LrSchedule flat{3e-4, 100, false};
  CHECK(flat.at(99) == 3e-4);
}

TEST_CASE("adam with annealed lr decreases a convex quadratic") {
  OptimizerState st;
  std::vector<double> x = {3.0, -2.0, 1.0};
  const double scale[3] = {1.0, 4.0, 0.5};
  auto loss = [&] {
    double l = 0;
    for (int i = 0; i < 3; ++i) l += 0.5 * scale[i] * x[i] * x[i];
    return l;
  };
  LrSchedule sched{0.05, 400, true};
  double prev = loss();
  for (std::size_t t = 0; t < 400; ++t) {
    std::vector<double> g(3);
    for (int i = 0; i < 3; ++i) g[i] = scale[i] * x[i];
    std::vector<ParamBlock> params = {{"x", x, false}};
    std::vector<GradBlock> grads = {{"x", g}};
    step(st, params, grads, sched.at(t), 0.0);
    const double now = loss();
    if (t >= 10) CHECK(now <= prev + 1e-12);
    prev = now;
  }
  CHECK(prev < 1e-2);
}
