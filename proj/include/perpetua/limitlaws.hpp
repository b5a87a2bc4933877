#ifndef PERPETUA_LIMITLAWS_HPP
#define PERPETUA_LIMITLAWS_HPP

#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "perpetua/perpetuity.hpp"
#include "perpetua/rng.hpp"
#include "perpetua/semimarkov.hpp"
#include "perpetua/sre.hpp"

namespace perpetua {

enum class TheoremTag { T1, T2a, T2b, T3a, T3b, T4a, T4b };

const char *to_string(TheoremTag tag);

/// Index drawn from a probability vector.
int sample_index(const Eigen::VectorXd &weights, RandomStream &rng);

/// Mixture over states: U ~ weights, then an independent draw from the
/// U-th component.
template <class Value> struct MixtureLimitLaw {
  struct Draw {
    int state;
    Value value;
  };

  Eigen::VectorXd weights;
  std::function<Value(int, RandomStream &)> component;
  TheoremTag tag;

  Draw draw(RandomStream &rng) const {
    const int u = sample_index(weights, rng);
    return {u, component(u, rng)};
  }
};

/// A pair of limit coordinates, (log Phi, log |I|)-shaped.
struct LimitPair {
  double x;
  double y;
};

/// Limit of I_t when E_pi a > 0.
MixtureLimitLaw<double> theorem1_law(const SemiMarkovModel &model,
                                     const StateFns &fns, double tol = 1e-12);
double theorem1_sample(const SemiMarkovModel &model, const StateFns &fns,
                       RandomStream &rng);

/// sigma_j^2 (variance of the centred cycle integral of a), the mean cycle
/// length and the resulting scale sigma_j / sqrt(length) for every anchor.
struct GaussianCaseParams {
  Eigen::VectorXd sigma2;
  Eigen::VectorXd cycle_length;
  Eigen::VectorXd scale;
  double mean_a;
};

GaussianCaseParams theorem2_params(const SemiMarkovModel &model,
                                   const StateFns &fns);

MixtureLimitLaw<LimitPair> theorem2a_law(const SemiMarkovModel &model,
                                         const StateFns &fns);
LimitPair theorem2a_sample(const SemiMarkovModel &model, const StateFns &fns,
                           RandomStream &rng);
MixtureLimitLaw<LimitPair> theorem2b_law(const SemiMarkovModel &model,
                                         const StateFns &fns);
LimitPair theorem2b_sample(const SemiMarkovModel &model, const StateFns &fns,
                           RandomStream &rng);

struct HeavyTransition {
  int from;
  int to;
  double c;
};

struct StableCaseParams {
  double alpha;
  double mean_a;
  Eigen::VectorXd a_hat;
  Eigen::VectorXd alpha_plus;
  Eigen::VectorXd alpha_minus;
  Eigen::VectorXd sigma;
  Eigen::VectorXd beta;
  Eigen::VectorXd cycle_length;
  std::vector<HeavyTransition> heavy;
};

/// Closed-form stable parameters with the heavy set read off the sojourn
/// laws: Pareto transitions with the smallest shape, which must lie in (1, 2).
StableCaseParams theorem3_params(const SemiMarkovModel &model,
                                 const StateFns &fns);
/// Same with an explicit index and tail-constant matrix; c(i, l) > 0 marks
/// (i, l) as heavy.
StableCaseParams theorem3_params(const SemiMarkovModel &model,
                                 const StateFns &fns, double alpha,
                                 const Eigen::MatrixXd &c);

MixtureLimitLaw<LimitPair> theorem3a_law(const StableCaseParams &params,
                                         const SemiMarkovModel &model);
LimitPair theorem3a_sample(const StableCaseParams &params,
                           const SemiMarkovModel &model, RandomStream &rng);
MixtureLimitLaw<LimitPair> theorem3b_law(const StableCaseParams &params,
                                         const SemiMarkovModel &model,
                                         int steps);
LimitPair theorem3b_sample(const StableCaseParams &params,
                           const SemiMarkovModel &model, int steps,
                           RandomStream &rng);

/// Limit of e^{at} I_t for constant a < 0, i.e. int_0^inf b(Y_s) e^{as} ds
/// with Y started from the model's initial law.
MixtureLimitLaw<double> theorem4a_law(const SemiMarkovModel &model,
                                      const StateFns &fns, double tol = 1e-12);
double theorem4a_sample(const SemiMarkovModel &model, const StateFns &fns,
                        RandomStream &rng);

struct Theorem4bSummary {
  double mean_b;
  double variance;
  double cycle_length;
  /// sigma_(b) / sqrt(cycle length); +infinity when the variance is.
  double clt_scale;
  int anchor;
};

Theorem4bSummary theorem4b_check(const SemiMarkovModel &model,
                                 const StateFns &fns);

/// State with the largest limiting probability.
int default_anchor(const SemiMarkovModel &model);

} // namespace perpetua

#endif // PERPETUA_LIMITLAWS_HPP
