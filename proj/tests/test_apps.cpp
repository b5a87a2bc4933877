#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "perpetua/apps.hpp"
#include "perpetua/stats.hpp"

using namespace perpetua;
using fixtures::code_of;

TEST_CASE("h transforms") {
  for (auto name : {"identity", "arctan", "exp"}) {
    const auto h = HTransform::parse(name);
    REQUIRE(h.has_value());
    CHECK(h->name() == name);
    double worst = 0;
    double prev = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 1000; ++k) {
      const double x = -5.0 + 10.0 * k / 999.0;
      const double y = h->h(x);
      CHECK(y > prev);
      prev = y;
      worst = std::max(worst, std::abs(h->inverse(y) - x));
      // h' = 1 / beta by central differences.
      const double e = 1e-6;
      const double slope = (h->h(x + e) - h->h(x - e)) / (2 * e);
      CHECK(slope * h->beta(x) == doctest::Approx(1.0).epsilon(1e-6));
      const double bp = (h->beta(x + e) - h->beta(x - e)) / (2 * e);
      CHECK(h->beta_prime(x) == doctest::Approx(bp).epsilon(1e-5).scale(1.0));
    }
    CHECK(worst < 1e-12);
  }
  CHECK_FALSE(HTransform::parse("log").has_value());
  CHECK(code_of([] { HTransform(HTransform::Kind::Arctan).inverse(2.0); }) ==
        ErrorCode::DomainError);
  CHECK(code_of([] { HTransform(HTransform::Kind::Exp).inverse(-1.0); }) ==
        ErrorCode::DomainError);
}

TEST_CASE("pitchfork closed forms") {
  const auto m = fixtures::swap_exponential();
  RandomStream rng(71);
  const double times[] = {0.0, 0.1, 1.0, 3.0, 10.0, 40.0};
  const double rho0 = 0.3;
  // d(rho^-2)/dt = 2 b - 2 a rho^-2; at a = 0 this is the a -> 0 limit 2t + rho0^-2.
  for (double a : {0.7, 0.0}) {
    const auto s = pitchfork_path(m, fixtures::fns({a, a}, {1, 1}), rho0, times, rng);
    for (std::size_t k = 0; k < std::size(times); ++k) {
      const double t = times[k];
      const double exact =
          a > 0 ? 1.0 / (1.0 / a + (1.0 / (rho0 * rho0) - 1.0 / a) * std::exp(-2 * a * t))
                : 1.0 / (2 * t + 1.0 / (rho0 * rho0));
      CHECK(s.rho_sq[k] == doctest::Approx(exact).epsilon(1e-12));
      CHECK(s.log_rho_sq[k] == doctest::Approx(std::log(exact)).epsilon(1e-12).scale(1.0));
    }
  }
  CHECK(code_of([&] { pitchfork_path(m, fixtures::fns({1, 1}, {1, 0}), 1, times, rng); }) ==
        ErrorCode::NonPositiveB);

  // Strongly unstable path: rho^2 underflows but its log stays exact.
  const double far[] = {2000.0};
  const auto s = pitchfork_path(m, fixtures::fns({-1, -1}, {1, 1}), 1.0, far, rng);
  CHECK(s.log_rho_sq[0] == doctest::Approx(-4000.0 - std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("pitchfork stationary law") {
  const auto m = fixtures::swap_exponential();
  RandomStream rng(72);
  const auto f = fixtures::fns({1.0, -0.25}, {1.0, 2.0});
  bool positive = true;
  for (int i = 0; i < 10'000; ++i) positive = positive && pitchfork_stationary_sample(m, f, rng) > 0;
  CHECK(positive);
  for (int i = 0; i < 100; ++i) {
    CHECK(pitchfork_stationary_sample(m, fixtures::fns({0.6, 0.6}, {2, 2}), rng) ==
          doctest::Approx(0.3).epsilon(1e-9));
  }
}

TEST_CASE("small-ball exponent") {
  const auto m = fixtures::swap_exponential();
  RandomStream rng(73);
  CHECK(code_of([&] { smallball_exponent(m, fixtures::fns({1, 0.5}, {1, 1}), 1000, rng); }) ==
        ErrorCode::NoSignChange);
  // a = (1, -1): A = exp(-2 W0 + 2 W1), E A^nu = 1/(1 + 2nu) * 2/(2 - 2nu),
  // which is 1 at nu = 1/2.
  const double nu = smallball_exponent(m, fixtures::fns({1.0, -1.0}, {1, 1}), 200'000, rng);
  CHECK(std::abs(nu - 0.5) < 0.01);
  const double eps = 0.5;
  const double v[] = {0.1, 0.2, 0.6, 0.9};
  CHECK(smallball_ratio(v, 1.0, eps) == doctest::Approx(0.5 / 0.5));
}

TEST_CASE("gaussian OU transition on a frozen state") {
  // One state worth of path: constant coefficients give the classical OU law.
  const auto m = fixtures::swap(SojournLaw::exponential(1), SojournLaw::exponential(1));
  const auto f = fixtures::fns({0.8, 0.8}, {1.5, 1.5});
  RandomStream rng(74);
  const double x0 = 2.0, t = 0.9;
  const double mean = x0 * std::exp(-0.8 * t);
  const double sd = 1.5 * std::sqrt(-std::expm1(-1.6 * t) / 1.6);
  const auto x = fixtures::draws(50'000, [&] {
    return gou_sample(m, f, HTransform(), x0, t, rng);
  });
  CHECK_FALSE(ks_one_sample(x, [&](double v) { return fixtures::normal_cdf((v - mean) / sd); }).reject);

  const auto zero = fixtures::fns({0.5, -0.2}, {0, 0});
  const auto traj = simulate(m, 5.0, rng);
  const double phi = compute_phi_i(traj, zero, 5.0).phi();
  for (auto kind : {HTransform::Kind::Identity, HTransform::Kind::Arctan, HTransform::Kind::Exp}) {
    const HTransform h(kind);
    CHECK(gou_draw_on(traj, zero, h, 0.4, 5.0, rng).value ==
          doctest::Approx(h.inverse(h.h(0.4) * phi)));
  }
}

TEST_CASE("OU stationary law") {
  const auto m = fixtures::swap_exponential();
  RandomStream rng(75);
  const auto f = fixtures::fns({1.0, 0.5}, {1.0, 2.0});
  int positive = 0;
  const int n = 40'000;
  for (int i = 0; i < n; ++i) positive += gou_stationary_sample(m, f, HTransform(), rng) > 0;
  CHECK(std::abs(positive / double(n) - 0.5) < 3 * 0.5 / std::sqrt(n));
  CHECK(gou_stationary_sample(m, fixtures::fns({1, 1}, {0, 0}), HTransform(), rng) == 0.0);
  const HTransform arctan(HTransform::Kind::Arctan);
  for (int i = 0; i < 1000; ++i) {
    const auto d = gou_stationary_draw(gou_z_law(m, f), arctan, rng);
    CHECK(std::isfinite(d.value));
  }
}

TEST_CASE("stable-noise OU") {
  const auto m = fixtures::swap_exponential();
  RandomStream rng(76);
  const auto zero = fixtures::fns({0.5, 0.5}, {0, 0});
  CHECK(stable_ou_sample(m, zero, 1.5, 2.0, 3.0, rng) == doctest::Approx(2.0 * std::exp(-1.5)));
  CHECK(code_of([&] { stable_ou_sample(m, zero, 2.5, 1.0, 1.0, rng); }) ==
        ErrorCode::UnsupportedAlpha);
  CHECK(code_of([&] { stable_ou_sample(m, fixtures::fns({1, 1}, {-1, 1}), 1.5, 1.0, 1.0, rng); }) ==
        ErrorCode::InvalidParameter);

  // Symmetric about x0 Phi on a frozen path.
  const auto f = fixtures::fns({0.4, 0.9}, {1.0, 0.5});
  const auto traj = simulate(m, 4.0, rng);
  const double centre = 1.5 * compute_phi_i(traj, f, 4.0).phi();
  int above = 0;
  const int n = 40'000;
  for (int i = 0; i < n; ++i) above += stable_ou_sample_on(traj, f, 1.5, 1.5, 4.0, rng) > centre;
  CHECK(std::abs(above / double(n) - 0.5) < 0.0075);

  int pos = 0;
  for (int i = 0; i < n; ++i) pos += stable_ou_stationary_sample(m, f, 1.5, rng) > 0;
  CHECK(std::abs(pos / double(n) - 0.5) < 0.0075);
}

TEST_CASE("divergence cases") {
  for (auto name : {"pitchfork-gaussian", "pitchfork-critical", "pitchfork-stable",
                    "pitchfork-stable-critical", "pitchfork-constant", "pitchfork-zero",
                    "ou-gaussian", "ou-critical", "ou-stable", "ou-stable-critical",
                    "ou-constant", "ou-zero"}) {
    const auto c = parse_divergence_case(name);
    REQUIRE(c.has_value());
    CHECK(to_string(*c) == name);
  }
  const auto m = fixtures::swap_exponential();
  const auto f = fixtures::fns({1.0, -0.25}, {1, 2});
  CHECK(code_of([&] {
          check_divergence_case(m, f, {DivergenceCase::PitchforkGaussian, 10});
        }) == ErrorCode::CaseMismatch);
  CHECK(code_of([&] {
          check_divergence_case(m, fixtures::fns({-1, -1}, {1, 1}),
                                {DivergenceCase::PitchforkZero, 10});
        }) == ErrorCode::CaseMismatch);

  RandomStream rng(77);
  const auto zero = fixtures::fns({0, 0}, {1, 2});
  const DivergenceSpec spec{DivergenceCase::PitchforkZero, 1e4};
  // rho^-2 = 1 + 2 int b, so rho^-2 / t settles at 2 E_pi b.
  const double mean_b = expectation_pi(m, zero.b);
  for (int i = 0; i < 20; ++i) {
    CHECK(divergence_transform(m, zero, spec, rng) == doctest::Approx(2 * mean_b).epsilon(0.05));
  }
  // a = (2, -4) is critical. rho^-2 never drops below min(rho0^-2, b / a) = 1/2.
  const auto crit = fixtures::fns({2.0, -4.0}, {1, 1});
  CHECK(expectation_pi(m, crit.a) == doctest::Approx(0.0).scale(1.0));
  const DivergenceSpec cs{DivergenceCase::PitchforkCritical, 400};
  for (int i = 0; i < 200; ++i) {
    CHECK(divergence_transform(m, crit, cs, rng) >= std::log(0.5) / 20.0 - 1e-12);
  }
}
