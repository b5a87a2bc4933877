#ifndef PERPETUA_CLI_CONFIG_HPP
#define PERPETUA_CLI_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "perpetua/apps.hpp"
#include "perpetua/perpetuity.hpp"
#include "perpetua/semimarkov.hpp"

namespace perpetua::cli {

enum class ExperimentKind {
  Simulate,
  VerifyT1,
  VerifyT2a,
  VerifyT2b,
  VerifyT3a,
  VerifyT3b,
  VerifyT4,
  Pitchfork,
  PitchforkSmallball,
  Ou,
  StableOu,
};

std::optional<ExperimentKind> parse_kind(std::string_view name);
std::string_view to_string(ExperimentKind kind);

struct FunctionsBlock {
  StateFns fns;
  HTransform h{};
  std::optional<double> alpha_star;
  double rho0 = 1.0;
  double x0 = 1.0;
};

struct ExperimentBlock {
  ExperimentKind kind = ExperimentKind::Simulate;
  /// 0 means the kind's default.
  double horizon = 0.0;
  int replications = 1000;
  std::optional<int> anchor;
  /// Threshold on the test statistic; the kind's default when unset.
  std::optional<double> tolerance;
  double grid_step = 1.0;
  int steps = 1000;
  /// Reps for auxiliary estimates such as root finding.
  int aux_reps = 100'000;
  std::optional<DivergenceCase> divergence;
};

struct RunBlock {
  std::uint64_t seed = 1;
  /// 0 means PERPETUA_WORKERS or the hardware concurrency.
  int workers = 0;
  std::string output = "perpetua_run";
};

struct ExperimentConfig {
  std::optional<SemiMarkovModel> model;
  FunctionsBlock functions;
  ExperimentBlock experiment;
  RunBlock run;
  std::uint64_t config_hash = 0;

  const SemiMarkovModel &environment() const { return *model; }
  const StateFns &fns() const { return functions.fns; }
};

/// YAML text to a validated config. Syntax problems raise ParseError with
/// the line; semantic problems raise ValidationError naming the underlying
/// error code.
ExperimentConfig parse_config(const std::string &text);
ExperimentConfig load_config(const std::string &path);

struct Overrides {
  std::optional<ExperimentKind> kind;
  std::optional<std::uint64_t> seed;
  std::optional<int> replications;
  std::optional<double> horizon;
  std::optional<std::string> output;
  std::optional<int> workers;
};

void apply_overrides(ExperimentConfig &config, const Overrides &o);

/// Checks the hypotheses of the chosen experiment against the model.
void validate_experiment(const ExperimentConfig &config);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text);

} // namespace perpetua::cli

#endif // PERPETUA_CLI_CONFIG_HPP
