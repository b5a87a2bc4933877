#ifndef PERPETUA_DISTRIBUTIONS_HPP
#define PERPETUA_DISTRIBUTIONS_HPP

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "perpetua/rng.hpp"

namespace perpetua {

enum class SojournFamily { Exponential, Pareto, Weibull, Gamma, LogNormal, Uniform };

std::string_view to_string(SojournFamily family);
std::optional<SojournFamily> parse_family(std::string_view name);

/// Regular variation of a survival function: survival(x) ~ c * x^(-alpha).
struct TailSpec {
  double alpha;
  double c;
};

/// A sojourn-time law. Parameters by family:
///   Exponential {rate}
///   Pareto      {shape, scale}     survival (scale/x)^shape for x >= scale
///   Weibull     {shape, scale}
///   Gamma       {shape, scale}
///   LogNormal   {mu, sigma}        parameters of the underlying normal
///   Uniform     {lo, hi}           0 < lo < hi
/// All laws are atomless with finite mean; invalid parameters throw at
/// construction.
class SojournLaw {
public:
  static SojournLaw exponential(double rate);
  static SojournLaw pareto(double shape, double scale);
  static SojournLaw weibull(double shape, double scale);
  static SojournLaw gamma(double shape, double scale);
  static SojournLaw lognormal(double mu, double sigma);
  static SojournLaw uniform(double lo, double hi);
  static SojournLaw make(SojournFamily family, std::span<const double> params);

  SojournFamily family() const { return family_; }
  const std::vector<double> &params() const { return params_; }
  std::string describe() const;

  double mean() const { return mean_; }
  /// E[X^2]; +infinity for Pareto with shape <= 2.
  double second_moment() const;
  double survival(double x) const;
  /// Integral of the survival function over [x, infinity).
  double integrated_tail(double x) const;
  /// Survival function of the equilibrium (integrated-tail) law.
  double equilibrium_survival(double x) const;

  double sample(RandomStream &rng) const;
  double equilibrium_sample(RandomStream &rng) const;

  std::optional<TailSpec> tail() const;

private:
  SojournLaw(SojournFamily family, std::vector<double> params);

  double invert_equilibrium(double target) const;

  SojournFamily family_;
  std::vector<double> params_;
  double mean_ = 0.0;
};

/// Stable law in the (alpha, sigma, beta, mu) parametrisation with
/// log characteristic function
///   -sigma^a |t|^a (1 - i beta sign(t) tan(pi a / 2)) + i mu t.
struct StableParams {
  double alpha;
  double sigma = 1.0;
  double beta = 0.0;
  double mu = 0.0;
};

void validate_stable(const StableParams &p);

/// Chambers-Mallows-Stuck draw; alpha must lie in (1, 2].
double stable_sample(const StableParams &p, RandomStream &rng);

/// (int_0^inf x^-alpha sin x dx)^-1, the tail constant of the stable law:
/// x^alpha P[S > x] -> C_alpha (1 + beta) / 2 sigma^alpha.
double stable_tail_constant(double alpha);

struct BrownianMaxPair {
  double endpoint;
  double running_max;
};

/// (B_1, max_{s<=1} B_s) for standard Brownian motion B.
BrownianMaxPair brownian_max_pair_sample(RandomStream &rng);

/// Endpoint and running maximum (floored at zero) of a partial-sum path.
BrownianMaxPair running_extremes(std::span<const double> increments);

/// Euler partial-sum approximation to (S(1), sup_{u<=1} S(u)) for the
/// alpha-stable Levy process with S(1) ~ S_alpha(1, beta, 0).
BrownianMaxPair sup_stable_path_sample(double alpha, double beta, int steps,
                                       RandomStream &rng);

} // namespace perpetua

#endif // PERPETUA_DISTRIBUTIONS_HPP
