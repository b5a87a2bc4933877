#include "perpetua/sre.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "perpetua/error.hpp"

namespace perpetua {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Estimate mean_estimate(const std::vector<double> &x) {
  const double n = static_cast<double>(x.size());
  // Running mean, exact when every value is equal.
  double mean = 0.0;
  double k = 0.0;
  for (double v : x) mean += (v - mean) / ++k;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double var = x.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) {
    c = c * (n - k + i) / i;
  }
  return c;
}

double a_power(double log_a, int k) {
  if (k == 0) return 1.0;
  return std::exp(k * log_a);
}

// E V^1..E V^m from the mixed moments E[A^k B^(m-k)].
std::vector<double> moment_recursion(const std::vector<AffinePair> &pairs,
                                     int order) {
  const int n = static_cast<int>(pairs.size());
  // mixed[k][l] = E[A^k B^l]
  std::vector<std::vector<double>> mixed(order + 1,
                                         std::vector<double>(order + 1, 0.0));
  for (const auto &p : pairs) {
    for (int k = 0; k <= order; ++k) {
      const double ak = a_power(p.log_a, k);
      double bl = 1.0;
      for (int l = 0; k + l <= order; ++l) {
        mixed[k][l] += ak * bl;
        bl *= p.b;
      }
    }
  }
  for (auto &row : mixed) {
    for (auto &v : row) v /= n;
  }
  std::vector<double> ev(order + 1, 0.0);
  ev[0] = 1.0;
  for (int m = 1; m <= order; ++m) {
    double s = 0.0;
    for (int k = 0; k < m; ++k) {
      s += binomial(m, k) * mixed[k][m - k] * ev[k];
    }
    ev[m] = s / (1.0 - mixed[m][0]);
  }
  return ev;
}

} // namespace

const char *to_string(SreVerdict v) {
  switch (v) {
  case SreVerdict::Convergent:
    return "convergent";
  case SreVerdict::Divergent:
    return "divergent";
  case SreVerdict::Inconclusive:
    return "inconclusive";
  }
  return "inconclusive";
}

AffinePairSampler cycle_pair_sampler(const SemiMarkovModel &model,
                                     const StateFns &fns, int j) {
  fns.check(model.size());
  if (j < 0 || j >= model.size()) {
    fail(ErrorCode::InvalidParameter, "anchor state " + std::to_string(j) +
                                          " does not exist");
  }
  return [model, fns, j](RandomStream &rng) {
    const auto f = sample_cycle_functional(model, fns, j, rng);
    return AffinePair{f.log_phi, f.i()};
  };
}

SreDiagnostics check_conditions(const AffinePairSampler &sampler, int reps,
                                RandomStream &rng) {
  if (reps < 1000) {
    fail(ErrorCode::InvalidParameter, "condition check needs reps >= 1000");
  }
  std::vector<double> log_a(reps);
  std::vector<double> log_b(reps);
  bool degenerate_a = false;
  for (int r = 0; r < reps; ++r) {
    const auto p = sampler(rng);
    log_a[r] = p.log_a;
    log_b[r] = p.b == 0.0 ? 0.0 : std::max(0.0, std::log(std::abs(p.b)));
    degenerate_a = degenerate_a || p.log_a == kNegInf;
  }
  SreDiagnostics d;
  d.log_plus_b = mean_estimate(log_b);
  d.log_a = degenerate_a ? Estimate{kNegInf, 0.0} : mean_estimate(log_a);
  if (!std::isfinite(d.log_plus_b.value)) {
    d.verdict = SreVerdict::Inconclusive;
  } else if (d.log_a.upper() < 0.0) {
    d.verdict = SreVerdict::Convergent;
  } else if (d.log_a.lower() > 0.0) {
    d.verdict = SreVerdict::Divergent;
  } else {
    d.verdict = SreVerdict::Inconclusive;
  }
  return d;
}

StationaryDraw stationary_draw(const AffinePairSampler &sampler,
                               RandomStream &rng, double tol,
                               long long max_terms) {
  if (!(tol > 0.0 && tol < 1.0)) {
    fail(ErrorCode::InvalidParameter, "tolerance must lie in (0, 1)");
  }
  const double log_tol = std::log(tol);
  double log_prod = 0.0;
  double sum = 0.0;
  double abs_b = 0.0;
  double sum_log_a = 0.0;
  long long k = 0;
  while (k < max_terms) {
    const auto p = sampler(rng);
    ++k;
    sum += std::exp(log_prod) * p.b;
    abs_b += std::abs(p.b);
    sum_log_a += p.log_a;
    log_prod += p.log_a;
    if (log_prod < log_tol) {
      const double mean_a =
          std::isfinite(sum_log_a) ? std::exp(sum_log_a / k) : 0.0;
      const double bound =
          tol * (abs_b / k) / (1.0 - std::min(mean_a, 0.999));
      return {sum, k, bound};
    }
  }
  fail(ErrorCode::NonConvergent,
       "running product stayed above " + std::to_string(tol) + " for " +
           std::to_string(max_terms) + " terms");
}

double stationary_sample(const AffinePairSampler &sampler, RandomStream &rng,
                         double tol) {
  return stationary_draw(sampler, rng, tol).value;
}

SreMoments sre_moments(const AffinePairSampler &sampler, int order, int reps,
                       RandomStream &rng) {
  constexpr int kBatches = 20;
  if (order < 1) {
    fail(ErrorCode::InvalidParameter, "moment order must be at least 1");
  }
  if (reps < 50 * kBatches) {
    fail(ErrorCode::TooSmall, "moment recursion needs at least 1000 pairs");
  }
  std::vector<AffinePair> pairs(reps);
  for (auto &p : pairs) p = sampler(rng);

  for (int k = 1; k <= order; ++k) {
    std::vector<double> ak(reps);
    for (int r = 0; r < reps; ++r) ak[r] = a_power(pairs[r].log_a, k);
    const auto e = mean_estimate(ak);
    if (e.value + 3.0 * e.std_error >= 1.0) {
      fail(ErrorCode::MomentDiverges,
           "E[A^" + std::to_string(k) + "] = " + std::to_string(e.value) +
               " is not below 1");
    }
  }

  SreMoments out;
  const auto pooled = moment_recursion(pairs, order);
  out.moments.assign(pooled.begin() + 1, pooled.end());

  std::vector<std::vector<double>> per_batch(order);
  const int size = reps / kBatches;
  for (int g = 0; g < kBatches; ++g) {
    std::vector<AffinePair> batch(pairs.begin() + g * size,
                                  pairs.begin() + (g + 1) * size);
    const auto ev = moment_recursion(batch, order);
    for (int m = 1; m <= order; ++m) per_batch[m - 1].push_back(ev[m]);
  }
  for (int m = 0; m < order; ++m) {
    const auto e = mean_estimate(per_batch[m]);
    out.std_errors.push_back(e.std_error);
  }
  return out;
}

double log_mean_power(const std::vector<double> &log_a, double nu) {
  double hi = kNegInf;
  for (double v : log_a) hi = std::max(hi, nu * v);
  if (hi == kNegInf) return kNegInf;
  double s = 0.0;
  for (double v : log_a) s += std::exp(nu * v - hi);
  return hi + std::log(s / static_cast<double>(log_a.size()));
}

double kesten_root(const std::vector<double> &log_a, double lo, double hi) {
  if (!(lo > 0.0 && hi > lo)) {
    fail(ErrorCode::InvalidParameter, "bracket must satisfy 0 < lo < hi");
  }
  const double h_lo = log_mean_power(log_a, lo);
  const double h_hi = log_mean_power(log_a, hi);
  if (!(h_lo < 0.0 && h_hi > 0.0)) {
    fail(ErrorCode::NoSignChange,
         "log E[A^nu] is " + std::to_string(h_lo) + " at " +
             std::to_string(lo) + " and " + std::to_string(h_hi) + " at " +
             std::to_string(hi));
  }
  while (hi - lo > 1e-4) {
    const double mid = 0.5 * (lo + hi);
    if (log_mean_power(log_a, mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double kesten_exponent(const AffinePairSampler &sampler, double lo, double hi,
                       int reps, RandomStream &rng) {
  if (reps < 1000) {
    fail(ErrorCode::TooSmall, "root search needs reps >= 1000");
  }
  std::vector<double> log_a(reps);
  for (auto &v : log_a) v = sampler(rng).log_a;
  return kesten_root(log_a, lo, hi);
}

} // namespace perpetua
