#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fixtures.hpp"
#include "perpetua/perpetuity.hpp"

using namespace perpetua;
using fixtures::code_of;

namespace {

// int_0^t b(Y_s) exp(-int_s^t a(Y_r) dr) ds by adaptive quadrature on each
// segment.
std::pair<double, double> quadrature_phi_i(const Trajectory &traj,
                                           const StateFns &f, double t) {
  std::vector<double> cum{0.0};
  for (const auto &s : traj.segments()) {
    cum.push_back(cum.back() + f.a(s.state) * s.duration);
  }
  auto big_a = [&](double s) {
    const std::size_t k = traj.segment_index(s);
    const auto &seg = traj.segments()[k];
    return cum[k] + f.a(seg.state) * (s - seg.start);
  };
  const double at = big_a(t);
  double total = 0.0;
  for (const auto &seg : traj.segments()) {
    if (seg.start >= t) break;
    const double hi = std::min(seg.end(), t);
    const double a0 = big_a(seg.start);
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        [&](double s) {
          return f.b(seg.state) * std::exp(-(at - a0 - f.a(seg.state) * (s - seg.start)));
        },
        seg.start, hi, 10, 1e-13);
  }
  return {std::exp(-at), total};
}

} // namespace

TEST_CASE("g function branches") {
  CHECK(g_fun(0, 2, 3) == 6.0);
  CHECK(g_fun(1, 2, std::log(2.0)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(g_fun(1e-10, 1, 1) - 1.0) < 1e-9);
  // Continuity across the series threshold.
  for (double c : {0.99e-8, 1.01e-8, -0.99e-8, -1.01e-8}) {
    const double exact = -std::expm1(-c * 2.0) / c;
    CHECK(g_fun(c, 1.0, 2.0) == doctest::Approx(exact).epsilon(1e-14));
  }
  for (double c : {-3.0, -1e-9, 0.0, 1e-9, 0.7}) {
    for (double d : {-2.0, 1.5}) {
      CHECK(g_fun_signed_log(c, d, 1.3).value() ==
            doctest::Approx(g_fun(c, d, 1.3)).epsilon(1e-13));
    }
  }
  const auto big = g_fun_signed_log(-2.0, 1.0, 1000.0);
  CHECK(big.log_abs == doctest::Approx(2000.0 - std::log(2.0)));
}

TEST_CASE("signed log arithmetic") {
  CHECK(signed_log_add(signed_log(3), signed_log(-3)).sign == 0);
  CHECK(signed_log_add(signed_log(2), signed_log(-5)).value() == doctest::Approx(-3));
  CHECK(signed_log_add(signed_log(0), signed_log(-5)).value() == doctest::Approx(-5));
  CHECK(signed_log_add(signed_log(1e-300), signed_log(1e-300)).value() ==
        doctest::Approx(2e-300));
}

TEST_CASE("accumulate") {
  const auto one = accumulate(SignedLogFunctional{}, 1.0, 1.0, 1.0);
  CHECK(one.phi() == doctest::Approx(std::exp(-1.0)));
  CHECK(one.i() == doctest::Approx(1.0 - std::exp(-1.0)));

  const auto m = fixtures::swap_exponential();
  RandomStream rng(31);
  const auto traj = simulate(m, 50, rng);
  const auto zero_b = compute_phi_i(traj, fixtures::fns({1, -2}, {0, 0}), 50);
  CHECK(zero_b.i_sign == 0);
  CHECK(zero_b.i() == 0.0);

  const auto f0 = fixtures::fns({0, 0}, {1.5, -0.5});
  const auto r = compute_phi_i(traj, f0, 50);
  double direct = 0;
  for (const auto &s : traj.segments()) {
    direct += f0.b(s.state) * std::max(0.0, std::min(s.end(), 50.0) - s.start);
  }
  CHECK(r.phi() == 1.0);
  CHECK(r.i() == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("closed form matches quadrature") {
  const auto m = fixtures::cyclic3(SojournLaw::exponential(1), SojournLaw::weibull(1.5, 1),
                                   SojournLaw::uniform(0.2, 1.2));
  const auto f = fixtures::fns({0.4, -0.3, 0.1}, {1.0, -2.0, 0.5});
  RandomStream rng(32);
  for (int rep = 0; rep < 10; ++rep) {
    const auto traj = simulate(m, 20, rng);
    const double times[] = {0.0, 0.7, 5.0, 13.3, 20.0};
    const auto grid = compute_phi_i_grid(traj, f, times);
    for (int k = 0; k < 5; ++k) {
      const auto [phi, i] = quadrature_phi_i(traj, f, times[k]);
      CHECK(grid[k].phi() == doctest::Approx(phi).epsilon(1e-12));
      CHECK(grid[k].i() == doctest::Approx(i).epsilon(1e-9));
    }
  }
}

TEST_CASE("composition over split intervals") {
  const auto m = fixtures::swap_exponential();
  const auto f = fixtures::fns({0.8, -0.6}, {1.0, 2.0});
  RandomStream rng(33);
  const auto traj = simulate(m, 40, rng);
  const auto ci = cycle_index(traj, 1);
  const auto q = cycle_quantities(traj, ci, f);
  SignedLogFunctional acc = q.pre_cycle;
  for (const auto &c : q.cycles) acc = compose(acc, c);
  const double end = ci.epochs().back();
  const auto direct = compute_phi_i(traj, f, end);
  CHECK(acc.log_phi == doctest::Approx(direct.log_phi).epsilon(1e-12));
  CHECK(acc.i() == doctest::Approx(direct.i()).epsilon(1e-12));
  CHECK(q.cycles.size() == ci.complete_cycles());

  CHECK(code_of([&] { compute_phi_i(traj, f, traj.coverage() + 1); }) ==
        ErrorCode::OutOfRange);
  const double unsorted[] = {2.0, 1.0};
  CHECK(code_of([&] { compute_phi_i_grid(traj, f, unsorted); }) == ErrorCode::OutOfRange);
}

TEST_CASE("cycle quantities") {
  const auto m = fixtures::swap_exponential();
  RandomStream rng(34);
  const auto traj = simulate_from(m, 0, 30, rng);
  const auto q = cycle_quantities(traj, cycle_index(traj, 0), fixtures::fns({1, 1}, {1, 1}));
  CHECK(q.pre_cycle.phi() == 1.0);
  CHECK(q.pre_cycle.i() == 0.0);
  const auto zero = cycle_quantities(traj, cycle_index(traj, 1), fixtures::fns({1, 1}, {0, 0}));
  for (const auto &c : zero.cycles) CHECK(c.i() == 0.0);
}

TEST_CASE("cycle integral moments") {
  const auto m = fixtures::swap_exponential();
  const Eigen::VectorXd constant = Eigen::VectorXd::Constant(2, 0.7);
  CHECK(cycle_integral_moments(m, 0, constant).variance == 0.0);

  Eigen::VectorXd f(2);
  f << 1.0, -0.25;
  // Swap chain: cycle integral is (f0 - Ef) W0 + (f1 - Ef) W1 with
  // independent exponential sojourns.
  const double ef = expectation_pi(m, f);
  const double c0 = f(0) - ef, c1 = f(1) - ef;
  const double exact = c0 * c0 * 1.0 + c1 * c1 * 0.25;
  CHECK(cycle_integral_moments(m, 0, f).variance == doctest::Approx(exact));
  CHECK(cycle_integral_moments(m, 1, f).variance == doctest::Approx(exact));
  CHECK(std::abs(cycle_integral_moments(m, 0, f).mean) < 1e-12);

  const auto m3 = fixtures::cyclic3(SojournLaw::gamma(2, 0.5), SojournLaw::uniform(0.5, 1.5),
                                    SojournLaw::weibull(2, 1));
  Eigen::VectorXd g(3);
  g << 2.0, -1.0, 0.3;
  RandomStream rng(35);
  for (int j = 0; j < 3; ++j) {
    const auto mc = cycle_integral_variance(m3, j, g, 400'000, rng);
    CHECK(std::abs(mc.variance - cycle_integral_moments(m3, j, g).variance) <
          4 * mc.std_error);
    CHECK_FALSE(mc.infinite_variance_suspected);
  }
}

TEST_CASE("infinite variance is flagged") {
  const auto m = fixtures::swap(SojournLaw::pareto(1.5, 1), SojournLaw::exponential(1));
  Eigen::VectorXd f(2);
  f << 1.0, -1.0;
  CHECK(std::isinf(cycle_integral_moments(m, 0, f).variance));
  RandomStream rng(36);
  const auto mc = cycle_integral_variance(m, 0, f, 200'000, rng);
  CHECK(mc.infinite_variance_suspected);
  CHECK(mc.tail_index == doctest::Approx(1.5).epsilon(0.15));
}

TEST_CASE("log phi grows at the ergodic rate") {
  const auto m = fixtures::swap_exponential();
  const auto f = fixtures::fns({1.0, -0.25}, {1.0, 2.0});
  const double ea = expectation_pi(m, f.a);
  RandomStream rng(37);
  const double t = 1e4;
  const int reps = 200;
  double s = 0, s2 = 0;
  for (int r = 0; r < reps; ++r) {
    const double v = compute_phi_i(simulate(m, t, rng), f, t).log_phi / t;
    s += v;
    s2 += v * v;
  }
  const double mean = s / reps;
  const double se = std::sqrt((s2 / reps - mean * mean) / reps);
  CHECK(std::abs(mean + ea) < 3 * se);
}
