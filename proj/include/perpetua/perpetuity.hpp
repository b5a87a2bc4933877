#ifndef PERPETUA_PERPETUITY_HPP
#define PERPETUA_PERPETUITY_HPP

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "perpetua/semimarkov.hpp"

namespace perpetua {

/// Per-state coefficients a(j), b(j).
struct StateFns {
  Eigen::VectorXd a;
  Eigen::VectorXd b;

  void check(int states) const;
};

/// (Phi, I) with Phi = exp(-int a) and I = int b exp(-int_s^t a), held as
/// (log Phi, sign I, log |I|) so that exponentially growing or vanishing
/// values stay representable.
struct SignedLogFunctional {
  double log_phi = 0.0;
  int i_sign = 0;
  double log_abs_i = -std::numeric_limits<double>::infinity();

  double phi() const { return std::exp(log_phi); }
  double i() const { return i_sign == 0 ? 0.0 : i_sign * std::exp(log_abs_i); }
};

struct SignedLog {
  int sign = 0;
  double log_abs = -std::numeric_limits<double>::infinity();

  double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
};

SignedLog signed_log(double x);
SignedLog signed_log_add(SignedLog x, SignedLog y);

/// int_0^x d exp(-c (x - s)) ds, i.e. x d when c = 0 and
/// (d / c)(1 - exp(-x c)) otherwise.
double g_fun(double c, double d, double x);
SignedLog g_fun_signed_log(double c, double d, double x);

/// Extends f by a sojourn of length delta in a state with coefficients (a, b).
SignedLogFunctional accumulate(const SignedLogFunctional &f, double a, double b,
                               double delta);
SignedLogFunctional accumulate(const SignedLogFunctional &f, int state,
                               double delta, const StateFns &fns);

/// Functional over [0, t] from the functionals over [0, s] and [s, t].
SignedLogFunctional compose(const SignedLogFunctional &first,
                            const SignedLogFunctional &second);

SignedLogFunctional compute_phi_i(const Trajectory &traj, const StateFns &fns,
                                  double t);
/// Evaluation at every time of a nondecreasing grid in one pass.
std::vector<SignedLogFunctional>
compute_phi_i_grid(const Trajectory &traj, const StateFns &fns,
                   std::span<const double> times);

/// Functional of the path before the first hit of the anchor and of every
/// complete cycle after it; L = phi() and Q = i() of each entry.
struct CycleQuantities {
  SignedLogFunctional pre_cycle;
  std::vector<SignedLogFunctional> cycles;
};

CycleQuantities cycle_quantities(const Trajectory &traj, const CycleIndex &ci,
                                 const StateFns &fns);

/// One cycle from j of the chain, folded into (L, Q).
SignedLogFunctional sample_cycle_functional(const SemiMarkovModel &model,
                                            const StateFns &fns, int j,
                                            RandomStream &rng);

double expectation_pi(const SemiMarkovModel &model, const Eigen::VectorXd &f);

/// First two moments of the cycle integral of f - E_pi f at anchor j, from
/// the first-passage linear systems. The second moment is +infinity when a
/// sojourn with infinite variance meets a state where f differs from E_pi f.
struct CycleMoments {
  double mean;
  double second;
  double variance;
};

CycleMoments cycle_integral_moments(const SemiMarkovModel &model, int j,
                                    const Eigen::VectorXd &f);

struct VarianceEstimate {
  double variance;
  double std_error;
  double tail_index;
  bool infinite_variance_suspected;
};

/// Monte Carlo variance of the centred cycle integral over reps cycles.
/// Flags suspected infinite variance when a Hill estimate of the tail index
/// of |integral| falls below 2.
VarianceEstimate cycle_integral_variance(const SemiMarkovModel &model, int j,
                                         const Eigen::VectorXd &f, int reps,
                                         RandomStream &rng);

} // namespace perpetua

#endif // PERPETUA_PERPETUITY_HPP
