#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "perpetua/sre.hpp"
#include "perpetua/stats.hpp"

using namespace perpetua;
using fixtures::code_of;

namespace {

AffinePairSampler constant_a(double a, std::function<double(RandomStream &)> b) {
  return [a, b](RandomStream &rng) { return AffinePair{std::log(a), b(rng)}; };
}

// A = exp(-2(W1 - W2)), W1 ~ Exp(1), W2 ~ Exp(2). E A^nu = 1 at nu = 1/2.
AffinePair analytic_pair(RandomStream &rng, double b_scale) {
  const double w1 = rng.exponential();
  const double w2 = rng.exponential() / 2.0;
  return {-2.0 * (w1 - w2), b_scale * (1.0 + w1)};
}

} // namespace

TEST_CASE("conditions") {
  RandomStream rng(41);
  const auto half = check_conditions(constant_a(0.5, [](auto &) { return 1.0; }), 1000, rng);
  CHECK(half.log_a.value == std::log(0.5));
  CHECK(half.verdict == SreVerdict::Convergent);
  const auto big = check_conditions(constant_a(1.5, [](auto &) { return 1.0; }), 1000, rng);
  CHECK(big.verdict == SreVerdict::Divergent);
  CHECK(code_of([&] { check_conditions(constant_a(0.5, [](auto &) { return 1.0; }), 10, rng); }) ==
        ErrorCode::InvalidParameter);
}

TEST_CASE("stationary draws") {
  RandomStream rng(42);
  const auto d = stationary_draw(constant_a(0.5, [](auto &) { return 1.0; }), rng);
  CHECK(std::abs(d.value - 2.0) <= d.truncation_bound + 1e-15);
  CHECK(d.truncation_bound < 1e-10);

  const AffinePairSampler zero = [](RandomStream &r) {
    return AffinePair{-std::numeric_limits<double>::infinity(), r.normal()};
  };
  RandomStream r1(43), r2(43);
  for (int i = 0; i < 100; ++i) {
    CHECK(stationary_sample(zero, r1) == r2.normal());
  }
  CHECK(code_of([&] { stationary_draw(constant_a(1.0, [](auto &) { return 1.0; }), rng, 1e-12, 1000); }) ==
        ErrorCode::NonConvergent);
}

TEST_CASE("fixed point in law") {
  const AffinePairSampler s = [](RandomStream &rng) {
    return AffinePair{std::log(rng.uniform()), rng.normal() + 0.5};
  };
  RandomStream rng(44);
  const int n = 50'000;
  std::vector<double> v(n), w(n);
  for (int i = 0; i < n; ++i) {
    v[i] = stationary_sample(s, rng);
    const auto p = s(rng);
    w[i] = std::exp(p.log_a) * stationary_sample(s, rng) + p.b;
  }
  CHECK(ks_two_sample(Sample(v), Sample(w)).statistic < 0.012);
}

TEST_CASE("moment recursion") {
  RandomStream rng(45);
  const auto zero = sre_moments(constant_a(0.5, [](auto &) { return 0.0; }), 3, 1000, rng);
  for (double m : zero.moments) CHECK(m == 0.0);

  // A = 1/2, B ~ Exp(1): E V = 2, E V^2 = (2 + 2 * 0.5 * 2) / 0.75.
  const auto r = sre_moments(constant_a(0.5, [](auto &g) { return g.exponential(); }), 2,
                             200'000, rng);
  CHECK(std::abs(r.moments[0] - 2.0) < 3 * r.std_errors[0]);
  CHECK(std::abs(r.moments[1] - 16.0 / 3.0) < 3 * r.std_errors[1]);

  CHECK(code_of([&] { sre_moments(constant_a(1.2, [](auto &) { return 1.0; }), 1, 1000, rng); }) ==
        ErrorCode::MomentDiverges);
  CHECK(code_of([&] { sre_moments(constant_a(0.5, [](auto &) { return 1.0; }), 1, 10, rng); }) ==
        ErrorCode::TooSmall);
}

TEST_CASE("kesten exponent") {
  RandomStream r1(46), r2(46);
  const double nu = kesten_exponent([](RandomStream &g) { return analytic_pair(g, 1.0); },
                                    0.05, 0.95, 200'000, r1);
  CHECK(nu == doctest::Approx(0.5).epsilon(0.02));
  const double scaled = kesten_exponent([](RandomStream &g) { return analytic_pair(g, 7.0); },
                                        0.05, 0.95, 200'000, r2);
  CHECK(scaled == nu);

  std::vector<double> contracting(1000, -0.1);
  CHECK(code_of([&] { kesten_root(contracting, 0.01, 5.0); }) == ErrorCode::NoSignChange);

  // Exactly lognormal: log A ~ N(m, s^2) has root -2m / s^2.
  std::vector<double> logs(1'000'000);
  RandomStream r3(47);
  for (auto &x : logs) x = -0.3 + 0.6 * r3.normal();
  CHECK(kesten_root(logs, 0.1, 5.0) == doctest::Approx(0.6 / 0.36).epsilon(0.02));
  CHECK(log_mean_power(std::vector<double>{std::log(2.0), std::log(8.0)}, 1.0) ==
        doctest::Approx(std::log(5.0)));
}
