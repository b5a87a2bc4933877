#include "perpetua/perpetuity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "perpetua/error.hpp"
#include "perpetua/stats.hpp"

namespace perpetua {

namespace {

constexpr double kSeriesThreshold = 1e-8;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(1 - exp(-y)) for y > 0.
double log_one_minus_exp(double y) {
  return y > 1.0 ? std::log1p(-std::exp(-y)) : std::log(-std::expm1(-y));
}

// log(exp(z) - 1) for z > 0.
double log_expm1(double z) {
  return z > 30.0 ? z + std::log1p(-std::exp(-z)) : std::log(std::expm1(z));
}

} // namespace

void StateFns::check(int states) const {
  if (a.size() != states || b.size() != states) {
    fail(ErrorCode::InvalidParameter,
         "a and b need one entry per state (" + std::to_string(states) + ")");
  }
  if (!a.allFinite() || !b.allFinite()) {
    fail(ErrorCode::InvalidParameter, "a and b must be finite");
  }
}

SignedLog signed_log(double x) {
  if (x == 0.0) {
    return {};
  }
  return {x > 0.0 ? 1 : -1, std::log(std::abs(x))};
}

SignedLog signed_log_add(SignedLog x, SignedLog y) {
  if (x.sign == 0) return y;
  if (y.sign == 0) return x;
  const SignedLog &hi = x.log_abs >= y.log_abs ? x : y;
  const SignedLog &lo = x.log_abs >= y.log_abs ? y : x;
  const double d = lo.log_abs - hi.log_abs;
  if (hi.sign == lo.sign) {
    return {hi.sign, hi.log_abs + std::log1p(std::exp(d))};
  }
  if (d == 0.0) {
    return {};
  }
  return {hi.sign, hi.log_abs + std::log1p(-std::exp(d))};
}

double g_fun(double c, double d, double x) {
  if (c == 0.0) {
    return x * d;
  }
  const double y = x * c;
  if (std::abs(y) < kSeriesThreshold) {
    return d * x * (1.0 - 0.5 * y);
  }
  return d * -std::expm1(-y) / c;
}

SignedLog g_fun_signed_log(double c, double d, double x) {
  if (d == 0.0 || x == 0.0) {
    return {};
  }
  const int sign = d > 0.0 ? 1 : -1;
  const double log_d = std::log(std::abs(d));
  const double y = x * c;
  if (c == 0.0) {
    return {sign, log_d + std::log(x)};
  }
  if (std::abs(y) < kSeriesThreshold) {
    return {sign, log_d + std::log(x) + std::log1p(-0.5 * y)};
  }
  if (c > 0.0) {
    return {sign, log_d + log_one_minus_exp(y) - std::log(c)};
  }
  return {sign, log_d + log_expm1(-y) - std::log(-c)};
}

SignedLogFunctional accumulate(const SignedLogFunctional &f, double a, double b,
                               double delta) {
  SignedLogFunctional out;
  out.log_phi = f.log_phi - a * delta;
  SignedLog carried{f.i_sign, f.i_sign == 0 ? kNegInf : f.log_abs_i - a * delta};
  const SignedLog sum = signed_log_add(carried, g_fun_signed_log(a, b, delta));
  out.i_sign = sum.sign;
  out.log_abs_i = sum.log_abs;
  return out;
}

SignedLogFunctional accumulate(const SignedLogFunctional &f, int state,
                               double delta, const StateFns &fns) {
  return accumulate(f, fns.a(state), fns.b(state), delta);
}

SignedLogFunctional compose(const SignedLogFunctional &first,
                            const SignedLogFunctional &second) {
  SignedLogFunctional out;
  out.log_phi = first.log_phi + second.log_phi;
  SignedLog carried{first.i_sign, first.i_sign == 0
                                      ? kNegInf
                                      : first.log_abs_i + second.log_phi};
  const SignedLog sum =
      signed_log_add(carried, SignedLog{second.i_sign, second.log_abs_i});
  out.i_sign = sum.sign;
  out.log_abs_i = sum.log_abs;
  return out;
}

SignedLogFunctional compute_phi_i(const Trajectory &traj, const StateFns &fns,
                                  double t) {
  const double times[] = {t};
  return compute_phi_i_grid(traj, fns, times).front();
}

std::vector<SignedLogFunctional>
compute_phi_i_grid(const Trajectory &traj, const StateFns &fns,
                   std::span<const double> times) {
  std::vector<SignedLogFunctional> out;
  out.reserve(times.size());
  const auto &segs = traj.segments();
  SignedLogFunctional acc;
  std::size_t s = 0;
  double prev = 0.0;
  for (double t : times) {
    if (t < 0.0 || t > traj.coverage() || t < prev) {
      fail(ErrorCode::OutOfRange,
           "evaluation time " + std::to_string(t) +
               " outside [0, " + std::to_string(traj.coverage()) +
               "] or not sorted");
    }
    prev = t;
    while (s < segs.size() && segs[s].end() <= t) {
      acc = accumulate(acc, segs[s].state, segs[s].duration, fns);
      ++s;
    }
    if (s < segs.size() && t > segs[s].start) {
      out.push_back(accumulate(acc, segs[s].state, t - segs[s].start, fns));
    } else {
      out.push_back(acc);
    }
  }
  return out;
}

CycleQuantities cycle_quantities(const Trajectory &traj, const CycleIndex &ci,
                                 const StateFns &fns) {
  CycleQuantities out;
  const int j = ci.state();
  SignedLogFunctional acc;
  bool hit = false;
  for (const auto &seg : traj.segments()) {
    if (seg.state == j) {
      if (hit) {
        out.cycles.push_back(acc);
      } else {
        out.pre_cycle = acc;
        hit = true;
      }
      acc = SignedLogFunctional{};
    }
    acc = accumulate(acc, seg.state, seg.duration, fns);
  }
  if (!hit) {
    fail(ErrorCode::NeverHits,
         "state " + std::to_string(j) + " is never visited on the path");
  }
  return out;
}

SignedLogFunctional sample_cycle_functional(const SemiMarkovModel &model,
                                            const StateFns &fns, int j,
                                            RandomStream &rng) {
  SignedLogFunctional acc;
  simulate_cycle(model, j, rng, [&](int state, double d) {
    acc = accumulate(acc, fns.a(state), fns.b(state), d);
  });
  return acc;
}

double expectation_pi(const SemiMarkovModel &model, const Eigen::VectorXd &f) {
  if (f.size() != model.size()) {
    fail(ErrorCode::InvalidParameter, "function needs one entry per state");
  }
  return model.limiting().dot(f);
}

CycleMoments cycle_integral_moments(const SemiMarkovModel &model, int j,
                                    const Eigen::VectorXd &f) {
  const int n = model.size();
  const double mean_f = expectation_pi(model, f);
  const double scale = std::max(1.0, f.cwiseAbs().maxCoeff());
  Eigen::VectorXd fc = f.array() - mean_f;
  for (int i = 0; i < n; ++i) {
    if (std::abs(fc(i)) <= 1e-12 * scale) {
      fc(i) = 0.0;
    }
  }
  // Killed chain: jumps into j end the cycle.
  Eigen::MatrixXd killed = model.transition_matrix();
  killed.col(j).setZero();
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - killed;
  const auto lu = system.fullPivLu();

  Eigen::VectorXd r1(n);
  for (int i = 0; i < n; ++i) {
    r1(i) = fc(i) * model.mean_sojourn(i);
  }
  const Eigen::VectorXd x = lu.solve(r1);

  Eigen::VectorXd r2 = Eigen::VectorXd::Zero(n);
  bool infinite = false;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      if (!model.has_transition(i, k)) continue;
      const double p = model.transition(i, k);
      const double cont = k == j ? 0.0 : x(k);
      if (fc(i) != 0.0) {
        const double s2 = model.law(i, k).second_moment();
        if (!std::isfinite(s2)) {
          infinite = true;
          continue;
        }
        r2(i) += p * (fc(i) * fc(i) * s2 +
                      2.0 * fc(i) * model.mean_sojourn(i, k) * cont);
      }
    }
  }
  if (infinite) {
    const double inf = std::numeric_limits<double>::infinity();
    return {x(j), inf, inf};
  }
  const Eigen::VectorXd y = lu.solve(r2);
  return {x(j), y(j), std::max(0.0, y(j) - x(j) * x(j))};
}

VarianceEstimate cycle_integral_variance(const SemiMarkovModel &model, int j,
                                         const Eigen::VectorXd &f, int reps,
                                         RandomStream &rng) {
  if (reps < 2) {
    fail(ErrorCode::TooSmall, "need at least two cycles");
  }
  const double mean_f = expectation_pi(model, f);
  std::vector<double> values(reps);
  for (auto &v : values) {
    double integral = 0.0;
    simulate_cycle(model, j, rng, [&](int state, double d) {
      integral += (f(state) - mean_f) * d;
    });
    v = integral;
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= reps;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double v : values) {
    const double d2 = (v - mean) * (v - mean);
    m2 += d2;
    m4 += d2 * d2;
  }
  const double variance = m2 / (reps - 1);
  const double central4 = m4 / reps;
  const double biased2 = m2 / reps;
  const double se = std::sqrt(std::max(0.0, central4 - biased2 * biased2) / reps);

  VarianceEstimate out{variance, se, std::numeric_limits<double>::infinity(),
                       false};
  std::vector<double> magnitudes;
  magnitudes.reserve(values.size());
  for (double v : values) {
    if (std::abs(v) > 0.0) magnitudes.push_back(std::abs(v));
  }
  const int k = std::max(50, reps / 100);
  if (static_cast<int>(magnitudes.size()) >= 10 * k) {
    out.tail_index = hill_index(Sample(std::move(magnitudes)), k).alpha;
    out.infinite_variance_suspected = out.tail_index < 2.0;
  }
  return out;
}

} // namespace perpetua
