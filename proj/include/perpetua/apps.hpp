#ifndef PERPETUA_APPS_HPP
#define PERPETUA_APPS_HPP

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "perpetua/limitlaws.hpp"
#include "perpetua/perpetuity.hpp"
#include "perpetua/rng.hpp"
#include "perpetua/semimarkov.hpp"

namespace perpetua {

/// Monotone map h with h' = 1 / beta that turns the diffusion into an OU
/// process for h(X).
///   Identity  h(x) = x          beta = 1
///   Arctan    h(x) = arctan x   beta = x^2 + 1, range (-pi/2, pi/2)
///   Exp       h(x) = e^x        beta = e^-x, range (0, inf)
class HTransform {
public:
  enum class Kind { Identity, Arctan, Exp };

  explicit HTransform(Kind kind = Kind::Identity) : kind_(kind) {}
  static std::optional<HTransform> parse(std::string_view name);

  Kind kind() const { return kind_; }
  std::string_view name() const;

  double h(double x) const;
  double inverse(double y) const;
  bool in_range(double y) const;
  double beta(double x) const;
  double beta_prime(double x) const;

private:
  Kind kind_;
};

struct PitchforkState {
  double rho0;
  std::vector<double> times;
  std::vector<double> rho_sq;
  /// log rho^2, exact even where rho^2 under- or overflows.
  std::vector<double> log_rho_sq;
};

/// rho_t^2 from rho_t^-2 = rho0^-2 Phi^(2a) + 2 I^(2a, b) along a path.
PitchforkState pitchfork_path_on(const Trajectory &traj, const StateFns &fns,
                                 double rho0, std::span<const double> times);
PitchforkState pitchfork_path(const SemiMarkovModel &model, const StateFns &fns,
                              double rho0, std::span<const double> times,
                              RandomStream &rng);

/// rho^2_inf = 1 / (2 Z), Z the stationary perpetuity for (2a, b).
MixtureLimitLaw<double> pitchfork_stationary_law(const SemiMarkovModel &model,
                                                 const StateFns &fns);
double pitchfork_stationary_sample(const SemiMarkovModel &model,
                                   const StateFns &fns, RandomStream &rng);

/// Smallest Kesten exponent of the cycle pairs with A = exp(-int 2a) over
/// all anchors.
double smallball_exponent(const SemiMarkovModel &model, const StateFns &fns,
                          int reps, RandomStream &rng);
/// eps^-nu * fraction of samples below eps.
double smallball_ratio(std::span<const double> rho_sq, double nu, double eps);

struct GouDraw {
  double value;
  int rejections;
};

GouDraw gou_draw_on(const Trajectory &traj, const StateFns &fns,
                    const HTransform &h, double x0, double t, RandomStream &rng);
GouDraw gou_draw(const SemiMarkovModel &model, const StateFns &fns,
                 const HTransform &h, double x0, double t, RandomStream &rng);
double gou_sample(const SemiMarkovModel &model, const StateFns &fns,
                  const HTransform &h, double x0, double t, RandomStream &rng);

/// h^-1(sqrt(Z) N), Z the stationary perpetuity for (2a, b^2).
GouDraw gou_stationary_draw(const MixtureLimitLaw<double> &z_law,
                            const HTransform &h, RandomStream &rng);
MixtureLimitLaw<double> gou_z_law(const SemiMarkovModel &model,
                                  const StateFns &fns);
double gou_stationary_sample(const SemiMarkovModel &model, const StateFns &fns,
                             const HTransform &h, RandomStream &rng);

/// x0 Phi^(a) + |I^(alpha a, b^alpha)|^(1/alpha) S, S symmetric stable.
double stable_ou_sample_on(const Trajectory &traj, const StateFns &fns,
                           double alpha_star, double x0, double t,
                           RandomStream &rng);
double stable_ou_sample(const SemiMarkovModel &model, const StateFns &fns,
                        double alpha_star, double x0, double t,
                        RandomStream &rng);
MixtureLimitLaw<double> stable_ou_stationary_law(const SemiMarkovModel &model,
                                                 const StateFns &fns,
                                                 double alpha_star);
double stable_ou_stationary_sample(const SemiMarkovModel &model,
                                   const StateFns &fns, double alpha_star,
                                   RandomStream &rng);

enum class DivergenceCase {
  PitchforkGaussian,     // (log rho^-2 + 2 t E a) / sqrt t, E a < 0
  PitchforkCritical,     // log rho^-2 / sqrt t, E a = 0
  PitchforkStable,       // (log rho^-2 + 2 t E a) / t^(1/alpha), E a < 0
  PitchforkStableCritical,
  PitchforkConstant,     // e^{2at} rho^-2, constant a < 0
  PitchforkZero,         // rho^-2 / t, a = 0
  OuGaussian,            // (log|h(X)| + t E a) / sqrt t
  OuCritical,            // log|h(X)| / sqrt t
  OuStable,
  OuStableCritical,
  OuConstant,            // e^{at} h(X)
  OuZero,                // h(X) / sqrt t
};

std::optional<DivergenceCase> parse_divergence_case(std::string_view name);
std::string_view to_string(DivergenceCase c);

struct DivergenceSpec {
  DivergenceCase kind;
  double t;
  double rho0 = 1.0;
  HTransform h{};
  double x0 = 1.0;
  /// Tail index for the stable cases.
  double alpha = 2.0;
};

/// Checks that the model and coefficients sit in the regime named by the
/// case; throws CaseMismatch otherwise.
void check_divergence_case(const SemiMarkovModel &model, const StateFns &fns,
                           const DivergenceSpec &spec);

double divergence_transform_on(const Trajectory &traj,
                               const SemiMarkovModel &model,
                               const StateFns &fns, const DivergenceSpec &spec,
                               RandomStream &rng);
double divergence_transform(const SemiMarkovModel &model, const StateFns &fns,
                            const DivergenceSpec &spec, RandomStream &rng);

} // namespace perpetua

#endif // PERPETUA_APPS_HPP
