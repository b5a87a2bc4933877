#include "perpetua/limitlaws.hpp"

#include <cmath>
#include <string>

#include "perpetua/distributions.hpp"
#include "perpetua/error.hpp"

namespace perpetua {

namespace {

constexpr double kCriticalTolerance = 1e-12;

void require_stable(double mean_a) {
  if (!(mean_a > 0.0)) {
    fail(ErrorCode::NotStable,
         "the limit needs E_pi a > 0 (contraction on average), got " +
             std::to_string(mean_a));
  }
}

void require_critical(double mean_a) {
  if (std::abs(mean_a) > kCriticalTolerance) {
    fail(ErrorCode::NotCritical,
         "the critical case needs E_pi a = 0, got " + std::to_string(mean_a));
  }
}

double constant_a(const StateFns &fns) {
  const double a0 = fns.a(0);
  for (int i = 1; i < fns.a.size(); ++i) {
    if (fns.a(i) != a0) {
      fail(ErrorCode::NotConstantA, "a must take the same value in every state");
    }
  }
  return a0;
}

} // namespace

const char *to_string(TheoremTag tag) {
  switch (tag) {
  case TheoremTag::T1:
    return "T1";
  case TheoremTag::T2a:
    return "T2a";
  case TheoremTag::T2b:
    return "T2b";
  case TheoremTag::T3a:
    return "T3a";
  case TheoremTag::T3b:
    return "T3b";
  case TheoremTag::T4a:
    return "T4a";
  case TheoremTag::T4b:
    return "T4b";
  }
  return "?";
}

int sample_index(const Eigen::VectorXd &weights, RandomStream &rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  const int n = static_cast<int>(weights.size());
  for (int i = 0; i < n; ++i) {
    acc += weights(i);
    if (u < acc) return i;
  }
  for (int i = n - 1; i >= 0; --i) {
    if (weights(i) > 0.0) return i;
  }
  fail(ErrorCode::InvalidParameter, "mixture weights are all zero");
}

int default_anchor(const SemiMarkovModel &model) {
  Eigen::Index j = 0;
  model.limiting().maxCoeff(&j);
  return static_cast<int>(j);
}

MixtureLimitLaw<double> theorem1_law(const SemiMarkovModel &model,
                                     const StateFns &fns, double tol) {
  fns.check(model.size());
  require_stable(expectation_pi(model, fns.a));
  std::vector<AffinePairSampler> samplers;
  for (int j = 0; j < model.size(); ++j) {
    samplers.push_back(cycle_pair_sampler(model, fns, j));
  }
  auto component = [model, fns, samplers, tol](int u, RandomStream &rng) {
    const double t = pi_star_sample(model, u, rng);
    const double v = stationary_sample(samplers[u], rng, tol);
    return g_fun(fns.a(u), fns.b(u), t) + std::exp(-fns.a(u) * t) * v;
  };
  return {model.limiting(), component, TheoremTag::T1};
}

double theorem1_sample(const SemiMarkovModel &model, const StateFns &fns,
                       RandomStream &rng) {
  return theorem1_law(model, fns).draw(rng).value;
}

GaussianCaseParams theorem2_params(const SemiMarkovModel &model,
                                   const StateFns &fns) {
  fns.check(model.size());
  const int n = model.size();
  GaussianCaseParams p;
  p.mean_a = expectation_pi(model, fns.a);
  p.sigma2.resize(n);
  p.cycle_length.resize(n);
  p.scale.resize(n);
  for (int j = 0; j < n; ++j) {
    const auto m = cycle_integral_moments(model, j, fns.a);
    if (!std::isfinite(m.variance)) {
      fail(ErrorCode::InfiniteVarianceSuspected,
           "cycle integral of a - E_pi a at state " + std::to_string(j) +
               " has infinite variance");
    }
    p.sigma2(j) = m.variance;
    p.cycle_length(j) = mean_cycle_length(model, j);
    p.scale(j) = std::sqrt(m.variance / p.cycle_length(j));
  }
  return p;
}

MixtureLimitLaw<LimitPair> theorem2a_law(const SemiMarkovModel &model,
                                         const StateFns &fns) {
  const auto p = theorem2_params(model, fns);
  auto component = [scale = p.scale](int u, RandomStream &rng) {
    const double v = scale(u) * rng.normal();
    return LimitPair{v, v};
  };
  return {model.limiting(), component, TheoremTag::T2a};
}

LimitPair theorem2a_sample(const SemiMarkovModel &model, const StateFns &fns,
                           RandomStream &rng) {
  return theorem2a_law(model, fns).draw(rng).value;
}

MixtureLimitLaw<LimitPair> theorem2b_law(const SemiMarkovModel &model,
                                         const StateFns &fns) {
  fns.check(model.size());
  require_critical(expectation_pi(model, fns.a));
  if (fns.b.cwiseAbs().maxCoeff() == 0.0) {
    fail(ErrorCode::InvalidParameter, "b must not vanish identically");
  }
  const auto p = theorem2_params(model, fns);
  auto component = [scale = p.scale](int u, RandomStream &rng) {
    const auto f = brownian_max_pair_sample(rng);
    return LimitPair{scale(u) * f.endpoint, scale(u) * f.running_max};
  };
  return {model.limiting(), component, TheoremTag::T2b};
}

LimitPair theorem2b_sample(const SemiMarkovModel &model, const StateFns &fns,
                           RandomStream &rng) {
  return theorem2b_law(model, fns).draw(rng).value;
}

StableCaseParams theorem3_params(const SemiMarkovModel &model,
                                 const StateFns &fns) {
  const int n = model.size();
  double alpha = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < n; ++l) {
      if (!model.has_transition(i, l)) continue;
      if (const auto t = model.law(i, l).tail()) {
        alpha = std::min(alpha, t->alpha);
      }
    }
  }
  if (!(alpha < 2.0)) {
    fail(ErrorCode::EmptyHeavySet,
         "no sojourn law has a regularly varying tail with index below 2");
  }
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < n; ++l) {
      if (!model.has_transition(i, l)) continue;
      if (const auto t = model.law(i, l).tail(); t && t->alpha == alpha) {
        c(i, l) = t->c;
      }
    }
  }
  return theorem3_params(model, fns, alpha, c);
}

StableCaseParams theorem3_params(const SemiMarkovModel &model,
                                 const StateFns &fns, double alpha,
                                 const Eigen::MatrixXd &c) {
  fns.check(model.size());
  const int n = model.size();
  if (!(alpha > 1.0 && alpha < 2.0)) {
    fail(ErrorCode::UnsupportedAlpha,
         "heavy-tail index must lie in (1, 2), got " + std::to_string(alpha));
  }
  if (c.rows() != n || c.cols() != n) {
    fail(ErrorCode::InvalidParameter, "tail-constant matrix has wrong shape");
  }
  StableCaseParams p;
  p.alpha = alpha;
  p.mean_a = expectation_pi(model, fns.a);
  p.a_hat = fns.a.array() - p.mean_a;
  const double scale = std::max(1.0, fns.a.cwiseAbs().maxCoeff());
  const auto &mu = model.embedded_stationary();

  double plus = 0.0;
  double minus = 0.0;
  for (int i = 0; i < n; ++i) {
    const double ah = p.a_hat(i);
    if (std::abs(ah) <= kCriticalTolerance * scale) continue;
    for (int l = 0; l < n; ++l) {
      if (!(c(i, l) > 0.0) || !model.has_transition(i, l)) continue;
      p.heavy.push_back({i, l, c(i, l)});
      const double w =
          mu(i) * model.transition(i, l) * c(i, l) * std::pow(std::abs(ah), alpha);
      (ah > 0.0 ? plus : minus) += w;
    }
  }
  if (p.heavy.empty()) {
    fail(ErrorCode::EmptyHeavySet,
         "no heavy transition leaves a state where a differs from E_pi a");
  }
  p.alpha_plus.resize(n);
  p.alpha_minus.resize(n);
  p.sigma.resize(n);
  p.beta.resize(n);
  p.cycle_length.resize(n);
  for (int j = 0; j < n; ++j) {
    p.alpha_plus(j) = plus / mu(j);
    p.alpha_minus(j) = minus / mu(j);
    const double total = p.alpha_plus(j) + p.alpha_minus(j);
    p.sigma(j) = std::pow(total, 1.0 / alpha);
    p.beta(j) = (p.alpha_minus(j) - p.alpha_plus(j)) / total;
    p.cycle_length(j) = mean_cycle_length(model, j);
  }
  return p;
}

MixtureLimitLaw<LimitPair> theorem3a_law(const StableCaseParams &params,
                                         const SemiMarkovModel &model) {
  auto component = [params](int u, RandomStream &rng) {
    const double s =
        params.sigma(u) * std::pow(params.cycle_length(u), -1.0 / params.alpha);
    const double v = stable_sample({params.alpha, s, params.beta(u), 0.0}, rng);
    return LimitPair{v, v};
  };
  return {model.limiting(), component, TheoremTag::T3a};
}

LimitPair theorem3a_sample(const StableCaseParams &params,
                           const SemiMarkovModel &model, RandomStream &rng) {
  return theorem3a_law(params, model).draw(rng).value;
}

MixtureLimitLaw<LimitPair> theorem3b_law(const StableCaseParams &params,
                                         const SemiMarkovModel &model,
                                         int steps) {
  require_critical(params.mean_a);
  auto component = [params, steps](int u, RandomStream &rng) {
    const double s =
        params.sigma(u) * std::pow(params.cycle_length(u), -1.0 / params.alpha);
    const auto f = sup_stable_path_sample(params.alpha, params.beta(u), steps, rng);
    return LimitPair{s * f.endpoint, s * f.running_max};
  };
  return {model.limiting(), component, TheoremTag::T3b};
}

LimitPair theorem3b_sample(const StableCaseParams &params,
                           const SemiMarkovModel &model, int steps,
                           RandomStream &rng) {
  return theorem3b_law(params, model, steps).draw(rng).value;
}

MixtureLimitLaw<double> theorem4a_law(const SemiMarkovModel &model,
                                      const StateFns &fns, double tol) {
  fns.check(model.size());
  const double a = constant_a(fns);
  if (!(a < 0.0)) {
    fail(ErrorCode::NotDivergent, "constant a must be negative, got " +
                                      std::to_string(a));
  }
  std::vector<AffinePairSampler> samplers;
  for (int j = 0; j < model.size(); ++j) {
    // (e^{a len}, int_cycle b e^{a (s - start)}) = (1 / L, Q / L)
    samplers.push_back([model, fns, j](RandomStream &rng) {
      const auto f = sample_cycle_functional(model, fns, j, rng);
      const double b =
          f.i_sign == 0 ? 0.0 : f.i_sign * std::exp(f.log_abs_i - f.log_phi);
      return AffinePair{-f.log_phi, b};
    });
  }
  auto component = [model, fns, a, samplers, tol](int u, RandomStream &rng) {
    int state = model.sample_initial(rng);
    double t = 0.0;
    double pre = 0.0;
    while (state != u) {
      const auto step = model.sample_step(state, rng);
      pre += std::exp(a * t) * g_fun(-a, fns.b(state), step.duration);
      t += step.duration;
      state = step.next;
    }
    return pre + std::exp(a * t) * stationary_sample(samplers[u], rng, tol);
  };
  return {model.limiting(), component, TheoremTag::T4a};
}

double theorem4a_sample(const SemiMarkovModel &model, const StateFns &fns,
                        RandomStream &rng) {
  return theorem4a_law(model, fns).draw(rng).value;
}

Theorem4bSummary theorem4b_check(const SemiMarkovModel &model,
                                 const StateFns &fns) {
  fns.check(model.size());
  if (fns.a.cwiseAbs().maxCoeff() != 0.0) {
    fail(ErrorCode::InvalidParameter, "this case needs a = 0 in every state");
  }
  Theorem4bSummary s;
  s.anchor = default_anchor(model);
  s.mean_b = expectation_pi(model, fns.b);
  const auto m = cycle_integral_moments(model, s.anchor, fns.b);
  s.variance = m.variance;
  s.cycle_length = mean_cycle_length(model, s.anchor);
  s.clt_scale = std::sqrt(s.variance / s.cycle_length);
  return s;
}

} // namespace perpetua
