#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "perpetua/limitlaws.hpp"
#include "perpetua/stats.hpp"

using namespace perpetua;
using fixtures::code_of;

namespace {

// Generator of the exponential swap fixture.
Eigen::MatrixXd swap_generator() {
  Eigen::MatrixXd q(2, 2);
  q << -1, 1, 2, -2;
  return q;
}

// E_i int_0^inf b(Y_s) exp(-int_0^s a) ds by Feynman-Kac.
Eigen::VectorXd feynman_kac(const Eigen::VectorXd &a, const Eigen::VectorXd &b) {
  const Eigen::MatrixXd m = Eigen::MatrixXd(a.asDiagonal()) - swap_generator();
  return m.lu().solve(b);
}

struct Moments {
  double mean;
  double se;
};

template <class F> Moments mc_mean(int n, F &&f) {
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double v = f();
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  return {mean, std::sqrt((s2 / n - mean * mean) / n)};
}

} // namespace

TEST_CASE("theorem 1 limit") {
  const auto m = fixtures::swap_exponential();
  RandomStream rng(61);

  const auto flat = fixtures::fns({0.5, 0.5}, {2.0, 2.0});
  for (int i = 0; i < 100; ++i) {
    CHECK(theorem1_sample(m, flat, rng) == doctest::Approx(4.0).epsilon(1e-10));
  }
  const auto zero = fixtures::fns({1.0, -0.25}, {0.0, 0.0});
  CHECK(theorem1_sample(m, zero, rng) == 0.0);
  CHECK(code_of([&] { theorem1_law(m, fixtures::fns({1.0, -2.0}, {1, 1})); }) ==
        ErrorCode::NotStable);

  // Two-state chains are reversible, so the stationary limit has the mean of
  // the forward discounted integral started from pi.
  for (const auto &f : {fixtures::fns({1.0, -0.25}, {1.0, 2.0}),
                        fixtures::fns({0.7, 0.7}, {1.0, -3.0})}) {
    const double exact = m.limiting().dot(feynman_kac(f.a, f.b));
    const auto law = theorem1_law(m, f);
    const auto mc = mc_mean(200'000, [&] { return law.draw(rng).value; });
    CHECK(std::abs(mc.mean - exact) < 4 * mc.se);
  }
  CHECK(m.limiting().dot(feynman_kac(fixtures::fns({1.0, -0.25}, {1, 2}).a,
                                     fixtures::fns({1.0, -0.25}, {1, 2}).b)) ==
        doctest::Approx(3.0));
}

TEST_CASE("mixture weights follow pi") {
  const auto m = fixtures::cyclic3(SojournLaw::exponential(1), SojournLaw::exponential(0.5),
                                   SojournLaw::uniform(0.5, 1.5));
  const auto law = theorem1_law(m, fixtures::fns({1, 0.5, 2}, {1, 1, 1}));
  RandomStream rng(62);
  const int n = 100'000;
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < n; ++i) freq(sample_index(law.weights, rng)) += 1;
  for (int j = 0; j < 3; ++j) {
    const double p = m.limiting()(j);
    CHECK(std::abs(freq(j) / n - p) < 3 * std::sqrt(p * (1 - p) / n));
  }
}

TEST_CASE("theorem 2 gaussian case") {
  // Centred a = (1, -1) on a symmetric swap: cycle integral W0 - W1 with
  // variance 2 over a mean cycle of 2, so the limit is N(0, 1).
  const auto m = fixtures::swap(SojournLaw::exponential(1), SojournLaw::exponential(1));
  const auto f = fixtures::fns({0.5, -1.5}, {1, 1});
  const auto p = theorem2_params(m, f);
  CHECK(p.mean_a == doctest::Approx(-0.5));
  CHECK(p.sigma2(0) == doctest::Approx(2.0));
  CHECK(p.scale(1) == doctest::Approx(1.0));
  RandomStream rng(63);
  const int n = 50'000;
  std::vector<double> xs(n);
  bool equal = true;
  for (auto &x : xs) {
    const auto d = theorem2a_sample(m, f, rng);
    equal = equal && d.x == d.y;
    x = d.x;
  }
  CHECK(equal);
  CHECK_FALSE(ks_one_sample(Sample(xs), fixtures::normal_cdf).reject);

  const auto m3 = fixtures::cyclic3(SojournLaw::gamma(2, 0.5), SojournLaw::weibull(1.5, 1),
                                    SojournLaw::uniform(0.2, 1.0));
  const auto f3 = fixtures::fns({0.2, -1.0, 0.4}, {1, 1, 1});
  const auto p3 = theorem2_params(m3, f3);
  for (int j = 0; j < 3; ++j) {
    const auto mc = cycle_integral_variance(m3, j, f3.a, 400'000, rng);
    CHECK(std::abs(p3.sigma2(j) - mc.variance) < 4 * mc.std_error);
    CHECK(p3.scale(j) * p3.scale(j) ==
          doctest::Approx(p3.sigma2(j) / mean_cycle_length(m3, j)));
  }

  const auto heavy = fixtures::swap(SojournLaw::pareto(1.5, 1), SojournLaw::exponential(1));
  CHECK(code_of([&] { theorem2_params(heavy, fixtures::fns({1, -2}, {1, 1})); }) ==
        ErrorCode::InfiniteVarianceSuspected);
}

TEST_CASE("theorem 2 critical case") {
  const auto m = fixtures::swap(SojournLaw::exponential(1), SojournLaw::exponential(1));
  RandomStream rng(64);
  CHECK(code_of([&] { theorem2b_law(m, fixtures::fns({1, -0.5}, {1, 1})); }) ==
        ErrorCode::NotCritical);
  CHECK(code_of([&] { theorem2b_law(m, fixtures::fns({1, -1}, {0, 0})); }) ==
        ErrorCode::InvalidParameter);
  const auto f = fixtures::fns({1, -1}, {1, 1});
  const int n = 50'000;
  std::vector<double> ys(n);
  bool support = true;
  for (auto &y : ys) {
    const auto d = theorem2b_sample(m, f, rng);
    support = support && d.y >= 0 && d.y >= d.x;
    y = d.y;
  }
  CHECK(support);
  CHECK_FALSE(ks_one_sample(Sample(ys), [](double v) {
                return v <= 0 ? 0.0 : 2 * fixtures::normal_cdf(v) - 1;
              }).reject);
}

TEST_CASE("theorem 3 parameters") {
  // Pareto(1.5, 1) out of 0, Exp(1) out of 1: pi = (3/4, 1/4), E a = 1/2.
  const auto m = fixtures::swap(SojournLaw::pareto(1.5, 1), SojournLaw::exponential(1));
  const auto f = fixtures::fns({1, -1}, {1, 1});
  const auto p = theorem3_params(m, f);
  CHECK(p.alpha == 1.5);
  CHECK(p.heavy.size() == 1);
  CHECK(p.alpha_plus(0) == doctest::Approx(std::pow(0.5, 1.5)));
  CHECK(p.alpha_minus(0) == 0.0);
  CHECK(p.sigma(1) == doctest::Approx(0.5));
  CHECK(p.beta(0) == -1.0);
  CHECK(p.cycle_length(0) == doctest::Approx(4.0));

  const auto flipped = theorem3_params(m, fixtures::fns({-1, 1}, {1, 1}));
  CHECK(flipped.beta(0) == 1.0);
  CHECK(flipped.sigma(0) == doctest::Approx(p.sigma(0)));

  // Relabelled mirror image: same law with states swapped, then a -> -a.
  const auto mirror = fixtures::swap(SojournLaw::exponential(1), SojournLaw::pareto(1.5, 1));
  const auto same = theorem3_params(mirror, fixtures::fns({-1, 1}, {1, 1}));
  CHECK(same.beta(0) == p.beta(1));
  CHECK(same.sigma(0) == doctest::Approx(p.sigma(1)));
  const auto pm = theorem3_params(mirror, fixtures::fns({1, -1}, {1, 1}));
  CHECK(pm.beta(1) == -p.beta(0));
  CHECK(pm.sigma(1) == doctest::Approx(p.sigma(0)));

  // Mixed signs with an explicit tail matrix.
  const auto m3 = fixtures::cyclic3(SojournLaw::pareto(1.4, 2), SojournLaw::pareto(1.4, 1),
                                    SojournLaw::exponential(1));
  const auto f3 = fixtures::fns({1.0, -0.5, 0.2}, {1, 1, 1});
  const auto p3 = theorem3_params(m3, f3);
  const double ea = expectation_pi(m3, f3.a);
  const double plus = std::pow(2.0, 1.4) * std::pow(1.0 - ea, 1.4);
  const double minus = std::pow(0.5 + ea, 1.4);
  CHECK(p3.alpha_plus(2) == doctest::Approx(plus));
  CHECK(p3.alpha_minus(2) == doctest::Approx(minus));
  CHECK(p3.beta(1) == doctest::Approx((minus - plus) / (minus + plus)));

  CHECK(code_of([&] {
          theorem3_params(fixtures::swap_exponential(), fixtures::fns({1, -1}, {1, 1}));
        }) == ErrorCode::EmptyHeavySet);
  CHECK(code_of([&] { theorem3_params(m, f, 2.5, Eigen::MatrixXd::Ones(2, 2)); }) ==
        ErrorCode::UnsupportedAlpha);
}

TEST_CASE("theorem 3 samplers") {
  const auto m = fixtures::swap(SojournLaw::pareto(1.5, 1), SojournLaw::exponential(1));
  RandomStream rng(65);
  const auto p = theorem3_params(m, fixtures::fns({1, -1}, {1, 1}));
  bool equal = true;
  std::vector<double> tail;
  for (int i = 0; i < 100'000; ++i) {
    const auto d = theorem3a_sample(p, m, rng);
    equal = equal && d.x == d.y;
    if (d.x < 0) tail.push_back(-d.x);
  }
  CHECK(equal);
  CHECK(hill_index(Sample(tail), 500).alpha == doctest::Approx(1.5).epsilon(0.15));

  CHECK(code_of([&] { theorem3b_law(p, m, 100); }) == ErrorCode::NotCritical);
  const auto critical = fixtures::fns({1, -3}, {1, 1});
  const auto pc = theorem3_params(m, critical);
  CHECK(std::abs(pc.mean_a) < 1e-12);
  bool ordered = true;
  for (int i = 0; i < 2000; ++i) {
    const auto d = theorem3b_sample(pc, m, 128, rng);
    ordered = ordered && d.y >= std::max(d.x, 0.0);
  }
  CHECK(ordered);
}

TEST_CASE("theorem 4 constant a") {
  Eigen::VectorXd start(2);
  start << 1, 0;
  const auto m = fixtures::swap_exponential(start);
  RandomStream rng(66);
  CHECK(code_of([&] { theorem4a_law(m, fixtures::fns({-1, -2}, {1, 1})); }) ==
        ErrorCode::NotConstantA);
  CHECK(code_of([&] { theorem4a_law(m, fixtures::fns({1, 1}, {1, 1})); }) ==
        ErrorCode::NotDivergent);
  CHECK(theorem4a_sample(m, fixtures::fns({-1, -1}, {0, 0}), rng) == 0.0);
  for (int i = 0; i < 50; ++i) {
    CHECK(theorem4a_sample(m, fixtures::fns({-0.5, -0.5}, {3, 3}), rng) ==
          doctest::Approx(6.0).epsilon(1e-9));
  }
  // Started from state 0: E int_0^inf b(Y_s) e^{as} ds.
  const auto f = fixtures::fns({-0.8, -0.8}, {1.0, -2.0});
  const double exact = feynman_kac(-f.a, f.b)(0);
  const auto law = theorem4a_law(m, f);
  const auto mc = mc_mean(200'000, [&] { return law.draw(rng).value; });
  CHECK(std::abs(mc.mean - exact) < 4 * mc.se);
}

TEST_CASE("theorem 4 zero a") {
  const auto m = fixtures::swap_exponential();
  const auto s = theorem4b_check(m, fixtures::fns({0, 0}, {1, 3}));
  CHECK(s.mean_b == doctest::Approx(2.0 / 3 + 1.0));
  CHECK(theorem4b_check(m, fixtures::fns({0, 0}, {-1, -3})).mean_b == -s.mean_b);
  CHECK(s.anchor == 0);
  // Cycle integral (1 - 5/3) W0 + (3 - 5/3) W1 with W0 ~ Exp(1), W1 ~ Exp(2).
  const double var = std::pow(2.0 / 3, 2) * 1.0 + std::pow(4.0 / 3, 2) * 0.25;
  CHECK(s.variance == doctest::Approx(var));
  CHECK(s.clt_scale == doctest::Approx(std::sqrt(var / 1.5)));
  const auto flat = theorem4b_check(m, fixtures::fns({0, 0}, {2.5, 2.5}));
  CHECK(flat.clt_scale == 0.0);
  RandomStream rng(67);
  const auto traj = simulate(m, 1e4, rng);
  CHECK(compute_phi_i(traj, fixtures::fns({0, 0}, {2.5, 2.5}), 1e4).i() ==
        doctest::Approx(2.5e4).epsilon(1e-10));
  CHECK(code_of([&] { theorem4b_check(m, fixtures::fns({0, 1}, {1, 1})); }) ==
        ErrorCode::InvalidParameter);
}
