#include "perpetua/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "perpetua/error.hpp"

namespace perpetua {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double normal_upper(double z) {
  return 0.5 * boost::math::erfc(z / std::numbers::sqrt2);
}

void require(bool ok, const std::string &what) {
  if (!ok) {
    fail(ErrorCode::InvalidParameter, what);
  }
}

bool all_finite(const std::vector<double> &v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

} // namespace

std::string_view to_string(SojournFamily family) {
  switch (family) {
  case SojournFamily::Exponential: return "exponential";
  case SojournFamily::Pareto: return "pareto";
  case SojournFamily::Weibull: return "weibull";
  case SojournFamily::Gamma: return "gamma";
  case SojournFamily::LogNormal: return "lognormal";
  case SojournFamily::Uniform: return "uniform";
  }
  return "unknown";
}

std::optional<SojournFamily> parse_family(std::string_view name) {
  for (auto f : {SojournFamily::Exponential, SojournFamily::Pareto,
                 SojournFamily::Weibull, SojournFamily::Gamma,
                 SojournFamily::LogNormal, SojournFamily::Uniform}) {
    if (to_string(f) == name) {
      return f;
    }
  }
  return std::nullopt;
}

SojournLaw::SojournLaw(SojournFamily family, std::vector<double> params)
    : family_(family), params_(std::move(params)) {
  require(all_finite(params_), "sojourn parameters must be finite");
  const double p0 = params_[0];
  const double p1 = params_.size() > 1 ? params_[1] : 0.0;
  switch (family_) {
  case SojournFamily::Exponential:
    require(p0 > 0.0, "exponential rate must be positive");
    mean_ = 1.0 / p0;
    break;
  case SojournFamily::Pareto:
    require(p0 > 0.0 && p1 > 0.0, "pareto shape and scale must be positive");
    if (p0 <= 1.0) {
      fail(ErrorCode::InfiniteMean,
           "pareto shape " + std::to_string(p0) + " <= 1 has infinite mean");
    }
    mean_ = p0 * p1 / (p0 - 1.0);
    break;
  case SojournFamily::Weibull:
    require(p0 > 0.0 && p1 > 0.0, "weibull shape and scale must be positive");
    mean_ = p1 * std::tgamma(1.0 + 1.0 / p0);
    break;
  case SojournFamily::Gamma:
    require(p0 > 0.0 && p1 > 0.0, "gamma shape and scale must be positive");
    mean_ = p0 * p1;
    break;
  case SojournFamily::LogNormal:
    require(p1 > 0.0, "lognormal sigma must be positive");
    mean_ = std::exp(p0 + 0.5 * p1 * p1);
    break;
  case SojournFamily::Uniform:
    require(p0 > 0.0 && p1 > p0, "uniform needs 0 < lo < hi");
    mean_ = 0.5 * (p0 + p1);
    break;
  }
  require(std::isfinite(mean_) && mean_ > 0.0, "sojourn mean must be finite");
}

SojournLaw SojournLaw::exponential(double rate) {
  return SojournLaw(SojournFamily::Exponential, {rate});
}
SojournLaw SojournLaw::pareto(double shape, double scale) {
  return SojournLaw(SojournFamily::Pareto, {shape, scale});
}
SojournLaw SojournLaw::weibull(double shape, double scale) {
  return SojournLaw(SojournFamily::Weibull, {shape, scale});
}
SojournLaw SojournLaw::gamma(double shape, double scale) {
  return SojournLaw(SojournFamily::Gamma, {shape, scale});
}
SojournLaw SojournLaw::lognormal(double mu, double sigma) {
  return SojournLaw(SojournFamily::LogNormal, {mu, sigma});
}
SojournLaw SojournLaw::uniform(double lo, double hi) {
  return SojournLaw(SojournFamily::Uniform, {lo, hi});
}

SojournLaw SojournLaw::make(SojournFamily family,
                            std::span<const double> params) {
  const std::size_t want = family == SojournFamily::Exponential ? 1 : 2;
  if (params.size() != want) {
    fail(ErrorCode::InvalidParameter,
         std::string(to_string(family)) + " takes " + std::to_string(want) +
             " parameter(s), got " + std::to_string(params.size()));
  }
  return SojournLaw(family, std::vector<double>(params.begin(), params.end()));
}

std::string SojournLaw::describe() const {
  std::ostringstream out;
  out << to_string(family_) << '(';
  for (std::size_t i = 0; i < params_.size(); ++i) {
    out << (i ? ", " : "") << params_[i];
  }
  out << ')';
  return out.str();
}

double SojournLaw::second_moment() const {
  const double p0 = params_[0];
  const double p1 = params_.size() > 1 ? params_[1] : 0.0;
  switch (family_) {
  case SojournFamily::Exponential: return 2.0 / (p0 * p0);
  case SojournFamily::Pareto:
    return p0 > 2.0 ? p0 * p1 * p1 / (p0 - 2.0) : kInf;
  case SojournFamily::Weibull: return p1 * p1 * std::tgamma(1.0 + 2.0 / p0);
  case SojournFamily::Gamma: return p0 * (p0 + 1.0) * p1 * p1;
  case SojournFamily::LogNormal: return std::exp(2.0 * p0 + 2.0 * p1 * p1);
  case SojournFamily::Uniform: return (p0 * p0 + p0 * p1 + p1 * p1) / 3.0;
  }
  return kInf;
}

double SojournLaw::survival(double x) const {
  if (x <= 0.0) {
    return 1.0;
  }
  const double p0 = params_[0];
  const double p1 = params_.size() > 1 ? params_[1] : 0.0;
  switch (family_) {
  case SojournFamily::Exponential: return std::exp(-p0 * x);
  case SojournFamily::Pareto: return x <= p1 ? 1.0 : std::pow(p1 / x, p0);
  case SojournFamily::Weibull: return std::exp(-std::pow(x / p1, p0));
  case SojournFamily::Gamma: return boost::math::gamma_q(p0, x / p1);
  case SojournFamily::LogNormal: return normal_upper((std::log(x) - p0) / p1);
  case SojournFamily::Uniform:
    if (x <= p0) return 1.0;
    if (x >= p1) return 0.0;
    return (p1 - x) / (p1 - p0);
  }
  return 0.0;
}

double SojournLaw::integrated_tail(double x) const {
  if (x <= 0.0) {
    return mean_;
  }
  const double p0 = params_[0];
  const double p1 = params_.size() > 1 ? params_[1] : 0.0;
  switch (family_) {
  case SojournFamily::Exponential: return std::exp(-p0 * x) / p0;
  case SojournFamily::Pareto:
    if (x <= p1) return (p1 - x) + p1 / (p0 - 1.0);
    return std::pow(p1, p0) * std::pow(x, 1.0 - p0) / (p0 - 1.0);
  case SojournFamily::Weibull:
    return mean_ * boost::math::gamma_q(1.0 / p0, std::pow(x / p1, p0));
  case SojournFamily::Gamma:
    return mean_ * boost::math::gamma_q(p0 + 1.0, x / p1) -
           x * boost::math::gamma_q(p0, x / p1);
  case SojournFamily::LogNormal:
    return mean_ * normal_upper((std::log(x) - p0 - p1 * p1) / p1) -
           x * survival(x);
  case SojournFamily::Uniform:
    if (x <= p0) return (p0 - x) + 0.5 * (p1 - p0);
    if (x >= p1) return 0.0;
    return (p1 - x) * (p1 - x) / (2.0 * (p1 - p0));
  }
  return 0.0;
}

double SojournLaw::equilibrium_survival(double x) const {
  if (x <= 0.0) {
    return 1.0;
  }
  return std::clamp(integrated_tail(x) / mean_, 0.0, 1.0);
}

double SojournLaw::sample(RandomStream &rng) const {
  const double p0 = params_[0];
  const double p1 = params_.size() > 1 ? params_[1] : 0.0;
  switch (family_) {
  case SojournFamily::Exponential: return rng.exponential() / p0;
  case SojournFamily::Pareto: return p1 * std::pow(rng.uniform(), -1.0 / p0);
  case SojournFamily::Weibull:
    return p1 * std::pow(rng.exponential(), 1.0 / p0);
  case SojournFamily::Gamma: return p1 * rng.gamma(p0);
  case SojournFamily::LogNormal: return std::exp(p0 + p1 * rng.normal());
  case SojournFamily::Uniform: return p0 + (p1 - p0) * rng.uniform();
  }
  return 0.0;
}

double SojournLaw::equilibrium_sample(RandomStream &rng) const {
  const double p0 = params_[0];
  const double p1 = params_.size() > 1 ? params_[1] : 0.0;
  const double u = rng.uniform();
  switch (family_) {
  case SojournFamily::Exponential: return -std::log(u) / p0;
  case SojournFamily::Pareto:
    if (u >= 1.0 / p0) return p1 + p1 / (p0 - 1.0) - u * mean_;
    return p1 * std::pow(u * p0, 1.0 / (1.0 - p0));
  case SojournFamily::Weibull:
    return p1 * std::pow(boost::math::gamma_q_inv(1.0 / p0, u), 1.0 / p0);
  case SojournFamily::Uniform: {
    const double width = p1 - p0;
    if (u * mean_ >= 0.5 * width) return p0 - (u * mean_ - 0.5 * width);
    return p1 - std::sqrt(2.0 * width * u * mean_);
  }
  case SojournFamily::Gamma:
  case SojournFamily::LogNormal: return invert_equilibrium(u);
  }
  return 0.0;
}

double SojournLaw::invert_equilibrium(double target) const {
  double lo = 0.0;
  double hi = mean_;
  while (equilibrium_survival(hi) > target) {
    lo = hi;
    hi *= 2.0;
  }
  double s_lo = equilibrium_survival(lo);
  double s_hi = equilibrium_survival(hi);
  while (s_lo - s_hi > 1e-10 && hi - lo > 1e-15 * hi) {
    const double mid = 0.5 * (lo + hi);
    const double s_mid = equilibrium_survival(mid);
    if (s_mid > target) {
      lo = mid;
      s_lo = s_mid;
    } else {
      hi = mid;
      s_hi = s_mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::optional<TailSpec> SojournLaw::tail() const {
  if (family_ != SojournFamily::Pareto) {
    return std::nullopt;
  }
  return TailSpec{params_[0], std::pow(params_[1], params_[0])};
}

void validate_stable(const StableParams &p) {
  if (!(p.alpha > 1.0 && p.alpha <= 2.0)) {
    fail(ErrorCode::UnsupportedAlpha,
         "stable index must lie in (1, 2], got " + std::to_string(p.alpha));
  }
  require(p.sigma > 0.0 && std::isfinite(p.sigma),
          "stable scale must be positive");
  require(p.beta >= -1.0 && p.beta <= 1.0, "stable skewness must be in [-1, 1]");
  require(std::isfinite(p.mu), "stable shift must be finite");
}

namespace {

struct CmsConstants {
  double alpha;
  double shift;
  double scale;

  CmsConstants(double a, double beta) : alpha(a) {
    const double zeta = beta * std::tan(0.5 * std::numbers::pi * a);
    shift = std::atan(zeta) / a;
    scale = std::pow(1.0 + zeta * zeta, 0.5 / a);
  }

  double draw(RandomStream &rng) const {
    const double a = alpha;
    const double v = std::numbers::pi * (rng.uniform() - 0.5);
    const double w = rng.exponential();
    return scale * std::sin(a * (v + shift)) / std::pow(std::cos(v), 1.0 / a) *
           std::pow(std::cos(v - a * (v + shift)) / w, (1.0 - a) / a);
  }
};

} // namespace

double stable_sample(const StableParams &p, RandomStream &rng) {
  validate_stable(p);
  return p.sigma * CmsConstants(p.alpha, p.beta).draw(rng) + p.mu;
}

double stable_tail_constant(double alpha) {
  if (!(alpha > 1.0 && alpha <= 2.0)) {
    fail(ErrorCode::UnsupportedAlpha,
         "stable index must lie in (1, 2], got " + std::to_string(alpha));
  }
  if (alpha == 2.0) {
    return 0.0;
  }
  return 1.0 / (std::tgamma(1.0 - alpha) * std::cos(0.5 * std::numbers::pi * alpha));
}

BrownianMaxPair brownian_max_pair_sample(RandomStream &rng) {
  // 2 M - B is chi(3) and B is uniform on (-(2M - B), 2M - B) given it.
  const double u = std::sqrt(2.0 * rng.gamma(1.5));
  const double x = u * (2.0 * rng.uniform() - 1.0);
  return {x, 0.5 * (u + x)};
}

BrownianMaxPair running_extremes(std::span<const double> increments) {
  double s = 0.0;
  double m = 0.0;
  for (double dx : increments) {
    s += dx;
    m = std::max(m, s);
  }
  return {s, m};
}

BrownianMaxPair sup_stable_path_sample(double alpha, double beta, int steps,
                                       RandomStream &rng) {
  if (steps < 1) {
    fail(ErrorCode::InvalidParameter, "steps must be at least 1");
  }
  validate_stable({alpha, 1.0, beta, 0.0});
  const CmsConstants cms(alpha, beta);
  const double dt = std::pow(static_cast<double>(steps), -1.0 / alpha);
  double s = 0.0;
  double m = 0.0;
  for (int i = 0; i < steps; ++i) {
    s += dt * cms.draw(rng);
    m = std::max(m, s);
  }
  return {s, m};
}

} // namespace perpetua
