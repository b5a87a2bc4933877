#include "perpetua/apps.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "perpetua/distributions.hpp"
#include "perpetua/error.hpp"

namespace perpetua {

namespace {

constexpr int kMaxConsecutiveRejections = 10'000;
constexpr double kCriticalTolerance = 1e-12;

StateFns pitchfork_fns(const StateFns &fns) { return {2.0 * fns.a, fns.b}; }

StateFns ou_noise_fns(const StateFns &fns) {
  return {2.0 * fns.a, fns.b.array().square().matrix()};
}

StateFns stable_noise_fns(const StateFns &fns, double alpha_star) {
  return {alpha_star * fns.a, fns.b.array().pow(alpha_star).matrix()};
}

void require_positive_b(const StateFns &fns) {
  if (!(fns.b.minCoeff() > 0.0)) {
    fail(ErrorCode::NonPositiveB, "the pitchfork needs b > 0 in every state");
  }
}

void require_stable_noise(const StateFns &fns, double alpha_star) {
  if (!(alpha_star > 1.0 && alpha_star < 2.0)) {
    fail(ErrorCode::UnsupportedAlpha,
         "noise index must lie in (1, 2), got " + std::to_string(alpha_star));
  }
  if (fns.b.minCoeff() < 0.0) {
    fail(ErrorCode::InvalidParameter, "stable noise needs b >= 0");
  }
}

double log_pitchfork_inverse(const SignedLogFunctional &f, double rho0) {
  const SignedLog initial{1, -2.0 * std::log(rho0) + f.log_phi};
  const SignedLog forcing{f.i_sign, std::log(2.0) + f.log_abs_i};
  return signed_log_add(initial, forcing).log_abs;
}

// h(x0) Phi^(a) + sqrt(I^(2a, b^2)) N, redrawn while outside the range of h.
SignedLog ou_h_value(const SignedLogFunctional &drift,
                     const SignedLogFunctional &noise, const HTransform &h,
                     double x0, RandomStream &rng, int &rejections) {
  const SignedLog start = signed_log(h.h(x0));
  const SignedLog mean{start.sign,
                       start.sign == 0 ? start.log_abs
                                       : start.log_abs + drift.log_phi};
  const double log_sd = 0.5 * noise.log_abs_i;
  for (int tries = 0; tries < kMaxConsecutiveRejections; ++tries) {
    const double z = rng.normal();
    SignedLog y = mean;
    if (noise.i_sign > 0 && z != 0.0) {
      y = signed_log_add(mean, SignedLog{z > 0.0 ? 1 : -1,
                                         log_sd + std::log(std::abs(z))});
    }
    if (h.kind() == HTransform::Kind::Identity || h.in_range(y.value())) {
      return y;
    }
    ++rejections;
  }
  fail(ErrorCode::DomainError,
       std::string("value keeps leaving the range of the ") +
           std::string(h.name()) + " transform");
}

bool is_pitchfork(DivergenceCase c) {
  switch (c) {
  case DivergenceCase::PitchforkGaussian:
  case DivergenceCase::PitchforkCritical:
  case DivergenceCase::PitchforkStable:
  case DivergenceCase::PitchforkStableCritical:
  case DivergenceCase::PitchforkConstant:
  case DivergenceCase::PitchforkZero:
    return true;
  default:
    return false;
  }
}

void mismatch(const DivergenceSpec &spec, const std::string &why) {
  fail(ErrorCode::CaseMismatch,
       std::string(to_string(spec.kind)) + " does not apply: " + why);
}

} // namespace

std::optional<HTransform> HTransform::parse(std::string_view name) {
  if (name == "identity") return HTransform(Kind::Identity);
  if (name == "arctan") return HTransform(Kind::Arctan);
  if (name == "exp") return HTransform(Kind::Exp);
  return std::nullopt;
}

std::string_view HTransform::name() const {
  switch (kind_) {
  case Kind::Identity:
    return "identity";
  case Kind::Arctan:
    return "arctan";
  case Kind::Exp:
    return "exp";
  }
  return "identity";
}

double HTransform::h(double x) const {
  switch (kind_) {
  case Kind::Identity:
    return x;
  case Kind::Arctan:
    return std::atan(x);
  case Kind::Exp:
    return std::exp(x);
  }
  return x;
}

double HTransform::inverse(double y) const {
  if (!in_range(y)) {
    fail(ErrorCode::DomainError, std::to_string(y) + " is outside the range of " +
                                     std::string(name()));
  }
  switch (kind_) {
  case Kind::Identity:
    return y;
  case Kind::Arctan:
    return std::tan(y);
  case Kind::Exp:
    return std::log(y);
  }
  return y;
}

bool HTransform::in_range(double y) const {
  switch (kind_) {
  case Kind::Identity:
    return std::isfinite(y);
  case Kind::Arctan:
    return std::abs(y) < std::numbers::pi / 2.0;
  case Kind::Exp:
    return y > 0.0 && std::isfinite(y);
  }
  return false;
}

double HTransform::beta(double x) const {
  switch (kind_) {
  case Kind::Identity:
    return 1.0;
  case Kind::Arctan:
    return x * x + 1.0;
  case Kind::Exp:
    return std::exp(-x);
  }
  return 1.0;
}

double HTransform::beta_prime(double x) const {
  switch (kind_) {
  case Kind::Identity:
    return 0.0;
  case Kind::Arctan:
    return 2.0 * x;
  case Kind::Exp:
    return -std::exp(-x);
  }
  return 0.0;
}

PitchforkState pitchfork_path_on(const Trajectory &traj, const StateFns &fns,
                                 double rho0, std::span<const double> times) {
  if (!(rho0 > 0.0)) {
    fail(ErrorCode::InvalidParameter, "rho0 must be positive");
  }
  require_positive_b(fns);
  const auto grid = compute_phi_i_grid(traj, pitchfork_fns(fns), times);
  PitchforkState s{rho0, {times.begin(), times.end()}, {}, {}};
  s.rho_sq.reserve(grid.size());
  s.log_rho_sq.reserve(grid.size());
  for (const auto &f : grid) {
    const double log_rho_sq = -log_pitchfork_inverse(f, rho0);
    s.log_rho_sq.push_back(log_rho_sq);
    s.rho_sq.push_back(std::exp(log_rho_sq));
  }
  return s;
}

PitchforkState pitchfork_path(const SemiMarkovModel &model, const StateFns &fns,
                              double rho0, std::span<const double> times,
                              RandomStream &rng) {
  fns.check(model.size());
  require_positive_b(fns);
  const double horizon = times.empty() ? 0.0 : *std::max_element(times.begin(), times.end());
  const auto traj = simulate(model, horizon, rng);
  return pitchfork_path_on(traj, fns, rho0, times);
}

MixtureLimitLaw<double> pitchfork_stationary_law(const SemiMarkovModel &model,
                                                 const StateFns &fns) {
  fns.check(model.size());
  require_positive_b(fns);
  auto z = theorem1_law(model, pitchfork_fns(fns));
  auto component = [inner = z.component](int u, RandomStream &rng) {
    return 1.0 / (2.0 * inner(u, rng));
  };
  return {z.weights, component, z.tag};
}

double pitchfork_stationary_sample(const SemiMarkovModel &model,
                                   const StateFns &fns, RandomStream &rng) {
  return pitchfork_stationary_law(model, fns).draw(rng).value;
}

double smallball_exponent(const SemiMarkovModel &model, const StateFns &fns,
                          int reps, RandomStream &rng) {
  fns.check(model.size());
  if (fns.a.minCoeff() >= 0.0) {
    fail(ErrorCode::NoSignChange,
         "a >= 0 in every state, so E[A^nu] < 1 for all nu > 0");
  }
  const double mean_a = expectation_pi(model, fns.a);
  if (!(mean_a > 0.0)) {
    fail(ErrorCode::NotStable, "small-ball exponent needs E_pi a > 0");
  }
  if (reps < 1000) {
    fail(ErrorCode::TooSmall, "root search needs reps >= 1000");
  }
  const auto doubled = pitchfork_fns(fns);
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < model.size(); ++j) {
    const auto sampler = cycle_pair_sampler(model, doubled, j);
    std::vector<double> log_a(reps);
    for (auto &v : log_a) v = sampler(rng).log_a;
    double lo = 1e-3;
    while (log_mean_power(log_a, lo) >= 0.0 && lo > 1e-9) lo *= 0.1;
    double hi = 1.0;
    while (log_mean_power(log_a, hi) <= 0.0 && hi < 1e4) hi *= 2.0;
    best = std::min(best, kesten_root(log_a, lo, hi));
  }
  return best;
}

double smallball_ratio(std::span<const double> rho_sq, double nu, double eps) {
  if (rho_sq.empty()) {
    fail(ErrorCode::TooSmall, "no samples");
  }
  const auto below = std::count_if(rho_sq.begin(), rho_sq.end(),
                                   [eps](double v) { return v < eps; });
  return std::pow(eps, -nu) * static_cast<double>(below) /
         static_cast<double>(rho_sq.size());
}

GouDraw gou_draw_on(const Trajectory &traj, const StateFns &fns,
                    const HTransform &h, double x0, double t, RandomStream &rng) {
  const auto drift = compute_phi_i(traj, fns, t);
  const auto noise = compute_phi_i(traj, ou_noise_fns(fns), t);
  GouDraw d{0.0, 0};
  const auto y = ou_h_value(drift, noise, h, x0, rng, d.rejections);
  d.value = h.inverse(y.value());
  return d;
}

GouDraw gou_draw(const SemiMarkovModel &model, const StateFns &fns,
                 const HTransform &h, double x0, double t, RandomStream &rng) {
  fns.check(model.size());
  const auto traj = simulate(model, t, rng);
  return gou_draw_on(traj, fns, h, x0, t, rng);
}

double gou_sample(const SemiMarkovModel &model, const StateFns &fns,
                  const HTransform &h, double x0, double t, RandomStream &rng) {
  return gou_draw(model, fns, h, x0, t, rng).value;
}

MixtureLimitLaw<double> gou_z_law(const SemiMarkovModel &model,
                                  const StateFns &fns) {
  fns.check(model.size());
  return theorem1_law(model, ou_noise_fns(fns));
}

GouDraw gou_stationary_draw(const MixtureLimitLaw<double> &z_law,
                            const HTransform &h, RandomStream &rng) {
  const double z = std::max(0.0, z_law.draw(rng).value);
  const double sd = std::sqrt(z);
  GouDraw d{0.0, 0};
  for (int tries = 0; tries < kMaxConsecutiveRejections; ++tries) {
    const double y = sd * rng.normal();
    if (h.in_range(y)) {
      d.value = h.inverse(y);
      return d;
    }
    ++d.rejections;
  }
  fail(ErrorCode::DomainError,
       std::string("value keeps leaving the range of the ") +
           std::string(h.name()) + " transform");
}

double gou_stationary_sample(const SemiMarkovModel &model, const StateFns &fns,
                             const HTransform &h, RandomStream &rng) {
  return gou_stationary_draw(gou_z_law(model, fns), h, rng).value;
}

double stable_ou_sample_on(const Trajectory &traj, const StateFns &fns,
                           double alpha_star, double x0, double t,
                           RandomStream &rng) {
  require_stable_noise(fns, alpha_star);
  const auto drift = compute_phi_i(traj, fns, t);
  const auto noise = compute_phi_i(traj, stable_noise_fns(fns, alpha_star), t);
  const double scale =
      noise.i_sign == 0 ? 0.0 : std::exp(noise.log_abs_i / alpha_star);
  const double s = stable_sample({alpha_star, 1.0, 0.0, 0.0}, rng);
  return x0 * drift.phi() + scale * s;
}

double stable_ou_sample(const SemiMarkovModel &model, const StateFns &fns,
                        double alpha_star, double x0, double t,
                        RandomStream &rng) {
  fns.check(model.size());
  require_stable_noise(fns, alpha_star);
  const auto traj = simulate(model, t, rng);
  return stable_ou_sample_on(traj, fns, alpha_star, x0, t, rng);
}

MixtureLimitLaw<double> stable_ou_stationary_law(const SemiMarkovModel &model,
                                                 const StateFns &fns,
                                                 double alpha_star) {
  fns.check(model.size());
  require_stable_noise(fns, alpha_star);
  auto z = theorem1_law(model, stable_noise_fns(fns, alpha_star));
  auto component = [inner = z.component, alpha_star](int u, RandomStream &rng) {
    const double scale = std::pow(std::abs(inner(u, rng)), 1.0 / alpha_star);
    return scale * stable_sample({alpha_star, 1.0, 0.0, 0.0}, rng);
  };
  return {z.weights, component, z.tag};
}

double stable_ou_stationary_sample(const SemiMarkovModel &model,
                                   const StateFns &fns, double alpha_star,
                                   RandomStream &rng) {
  return stable_ou_stationary_law(model, fns, alpha_star).draw(rng).value;
}

namespace {

struct CaseName {
  DivergenceCase kind;
  std::string_view name;
};

constexpr CaseName kCaseNames[] = {
    {DivergenceCase::PitchforkGaussian, "pitchfork-gaussian"},
    {DivergenceCase::PitchforkCritical, "pitchfork-critical"},
    {DivergenceCase::PitchforkStable, "pitchfork-stable"},
    {DivergenceCase::PitchforkStableCritical, "pitchfork-stable-critical"},
    {DivergenceCase::PitchforkConstant, "pitchfork-constant"},
    {DivergenceCase::PitchforkZero, "pitchfork-zero"},
    {DivergenceCase::OuGaussian, "ou-gaussian"},
    {DivergenceCase::OuCritical, "ou-critical"},
    {DivergenceCase::OuStable, "ou-stable"},
    {DivergenceCase::OuStableCritical, "ou-stable-critical"},
    {DivergenceCase::OuConstant, "ou-constant"},
    {DivergenceCase::OuZero, "ou-zero"},
};

} // namespace

std::optional<DivergenceCase> parse_divergence_case(std::string_view name) {
  for (const auto &c : kCaseNames) {
    if (c.name == name) return c.kind;
  }
  return std::nullopt;
}

std::string_view to_string(DivergenceCase c) {
  for (const auto &n : kCaseNames) {
    if (n.kind == c) return n.name;
  }
  return "?";
}

void check_divergence_case(const SemiMarkovModel &model, const StateFns &fns,
                           const DivergenceSpec &spec) {
  fns.check(model.size());
  if (!(spec.t > 0.0)) {
    fail(ErrorCode::InvalidParameter, "t must be positive");
  }
  const double mean_a = expectation_pi(model, fns.a);
  const bool critical = std::abs(mean_a) <= kCriticalTolerance;
  const bool constant =
      fns.a.maxCoeff() == fns.a.minCoeff();
  const auto finite_variance = [&] {
    for (int j = 0; j < model.size(); ++j) {
      if (!std::isfinite(cycle_integral_moments(model, j, fns.a).variance)) {
        return false;
      }
    }
    return true;
  };
  const auto heavy = [&] {
    try {
      const auto p = theorem3_params(model, fns);
      return std::abs(p.alpha - spec.alpha) < 1e-12;
    } catch (const Error &) {
      return false;
    }
  };
  if (is_pitchfork(spec.kind)) {
    if (!(fns.b.minCoeff() > 0.0)) mismatch(spec, "b must be positive");
    if (!(spec.rho0 > 0.0)) mismatch(spec, "rho0 must be positive");
  }
  switch (spec.kind) {
  case DivergenceCase::PitchforkGaussian:
  case DivergenceCase::OuGaussian:
    if (!(mean_a < 0.0) || critical) mismatch(spec, "needs E_pi a < 0");
    if (!finite_variance()) mismatch(spec, "needs finite cycle variance");
    break;
  case DivergenceCase::PitchforkCritical:
  case DivergenceCase::OuCritical:
    if (!critical) mismatch(spec, "needs E_pi a = 0");
    if (!finite_variance()) mismatch(spec, "needs finite cycle variance");
    if (fns.b.cwiseAbs().maxCoeff() == 0.0) mismatch(spec, "needs b != 0");
    break;
  case DivergenceCase::PitchforkStable:
  case DivergenceCase::OuStable:
    if (!(mean_a < 0.0) || critical) mismatch(spec, "needs E_pi a < 0");
    if (!heavy()) mismatch(spec, "needs a heavy transition with the given index");
    break;
  case DivergenceCase::PitchforkStableCritical:
  case DivergenceCase::OuStableCritical:
    if (!critical) mismatch(spec, "needs E_pi a = 0");
    if (!heavy()) mismatch(spec, "needs a heavy transition with the given index");
    break;
  case DivergenceCase::PitchforkConstant:
  case DivergenceCase::OuConstant:
    if (!constant || !(fns.a(0) < 0.0)) mismatch(spec, "needs constant a < 0");
    break;
  case DivergenceCase::PitchforkZero:
  case DivergenceCase::OuZero:
    if (!constant || fns.a(0) != 0.0) mismatch(spec, "needs a = 0");
    break;
  }
}

double divergence_transform_on(const Trajectory &traj,
                               const SemiMarkovModel &model,
                               const StateFns &fns, const DivergenceSpec &spec,
                               RandomStream &rng) {
  const double t = spec.t;
  const double mean_a = expectation_pi(model, fns.a);
  const double root_t = std::sqrt(t);
  const double stable_t = std::pow(t, 1.0 / spec.alpha);
  if (is_pitchfork(spec.kind)) {
    const auto f = compute_phi_i(traj, pitchfork_fns(fns), t);
    const double log_u = log_pitchfork_inverse(f, spec.rho0);
    switch (spec.kind) {
    case DivergenceCase::PitchforkGaussian:
      return (log_u + 2.0 * t * mean_a) / root_t;
    case DivergenceCase::PitchforkCritical:
      return log_u / root_t;
    case DivergenceCase::PitchforkStable:
      return (log_u + 2.0 * t * mean_a) / stable_t;
    case DivergenceCase::PitchforkStableCritical:
      return log_u / stable_t;
    case DivergenceCase::PitchforkConstant:
      return std::exp(log_u + 2.0 * fns.a(0) * t);
    default:
      return std::exp(log_u) / t;
    }
  }
  const auto drift = compute_phi_i(traj, fns, t);
  const auto noise = compute_phi_i(traj, ou_noise_fns(fns), t);
  int rejections = 0;
  const auto y = ou_h_value(drift, noise, spec.h, spec.x0, rng, rejections);
  switch (spec.kind) {
  case DivergenceCase::OuGaussian:
    return (y.log_abs + t * mean_a) / root_t;
  case DivergenceCase::OuCritical:
    return y.log_abs / root_t;
  case DivergenceCase::OuStable:
    return (y.log_abs + t * mean_a) / stable_t;
  case DivergenceCase::OuStableCritical:
    return y.log_abs / stable_t;
  case DivergenceCase::OuConstant:
    return y.sign * std::exp(y.log_abs + fns.a(0) * t);
  default:
    return y.value() / root_t;
  }
}

double divergence_transform(const SemiMarkovModel &model, const StateFns &fns,
                            const DivergenceSpec &spec, RandomStream &rng) {
  check_divergence_case(model, fns, spec);
  const auto traj = simulate(model, spec.t, rng);
  return divergence_transform_on(traj, model, fns, spec, rng);
}

} // namespace perpetua
