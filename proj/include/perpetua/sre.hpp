#ifndef PERPETUA_SRE_HPP
#define PERPETUA_SRE_HPP

#include <functional>
#include <vector>

#include "perpetua/perpetuity.hpp"
#include "perpetua/rng.hpp"
#include "perpetua/semimarkov.hpp"

namespace perpetua {

/// One coefficient pair of X = A X + B. A is held as log A so that
/// A = 0 (log_a = -inf) and very small or large products stay exact.
struct AffinePair {
  double log_a;
  double b;
};

/// Produces i.i.d. pairs; every call must consume randomness only from the
/// stream it is given.
using AffinePairSampler = std::function<AffinePair(RandomStream &)>;

/// (L, Q) of one renewal cycle at anchor j, i.e. A = exp(-int_cycle a) and
/// B = int_cycle b exp(-int_s^end a).
AffinePairSampler cycle_pair_sampler(const SemiMarkovModel &model,
                                     const StateFns &fns, int j);

struct Estimate {
  double value;
  double std_error;

  double lower() const { return value - 3.0 * std_error; }
  double upper() const { return value + 3.0 * std_error; }
};

enum class SreVerdict { Convergent, Divergent, Inconclusive };

const char *to_string(SreVerdict v);

struct SreDiagnostics {
  Estimate log_a;
  Estimate log_plus_b;
  SreVerdict verdict;
};

/// Monte Carlo check of E log A < 0 and E log+|B| < infinity with
/// three-standard-error intervals.
SreDiagnostics check_conditions(const AffinePairSampler &sampler, int reps,
                                RandomStream &rng);

struct StationaryDraw {
  double value;
  long long terms;
  double truncation_bound;
};

/// Backward series sum_k (prod_{i<k} A_i) B_k, stopped once the running
/// product drops below tol.
StationaryDraw stationary_draw(const AffinePairSampler &sampler,
                               RandomStream &rng, double tol = 1e-12,
                               long long max_terms = 10'000'000);
double stationary_sample(const AffinePairSampler &sampler, RandomStream &rng,
                         double tol = 1e-12);

/// Moments E V^1..E V^m of the fixed point from the binomial recursion.
/// Standard errors come from 20 independent batches.
struct SreMoments {
  std::vector<double> moments;
  std::vector<double> std_errors;
};

SreMoments sre_moments(const AffinePairSampler &sampler, int order, int reps,
                       RandomStream &rng);

/// Positive root of log E A^nu = 0 by bisection on one common sample of A.
double kesten_exponent(const AffinePairSampler &sampler, double lo, double hi,
                       int reps, RandomStream &rng);

/// log E A^nu over a fixed sample of log A.
double log_mean_power(const std::vector<double> &log_a, double nu);

/// Bisection for log_mean_power(log_a, nu) = 0 on [lo, hi] down to width
/// 1e-4; throws NoSignChange unless the ends bracket a root.
double kesten_root(const std::vector<double> &log_a, double lo, double hi);

} // namespace perpetua

#endif // PERPETUA_SRE_HPP
