#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "perpetua/cli/config.hpp"
#include "perpetua/cli/emit.hpp"
#include "perpetua/cli/runner.hpp"
#include "perpetua/error.hpp"

namespace pc = perpetua::cli;

int main(int argc, char **argv) {
  CLI::App app{"Perpetuities driven by semi-Markov environments"};
  std::string kind;
  std::string config_path;
  pc::Overrides overrides;
  std::uint64_t seed = 0;
  int reps = 0;
  double horizon = 0.0;
  std::string out;
  int workers = 0;

  app.add_option("kind", kind,
                 "simulate, verify-t1, verify-t2a, verify-t2b, verify-t3a, "
                 "verify-t3b, verify-t4, pitchfork, pitchfork-smallball, ou, "
                 "stable-ou")
      ->required();
  app.add_option("--config", config_path, "YAML experiment config")->required();
  auto *seed_opt = app.add_option("--seed", seed, "master seed");
  auto *reps_opt = app.add_option("--reps", reps, "replications")->check(CLI::PositiveNumber);
  auto *horizon_opt = app.add_option("--horizon", horizon, "time horizon")->check(CLI::PositiveNumber);
  auto *out_opt = app.add_option("--out", out, "output prefix for .csv and .json");
  auto *workers_opt = app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const auto parsed = pc::parse_kind(kind);
    if (!parsed) {
      std::cerr << "error: unknown experiment kind '" << kind << "'\n";
      return 1;
    }
    overrides.kind = *parsed;
    if (*seed_opt) overrides.seed = seed;
    if (*reps_opt) overrides.replications = reps;
    if (*horizon_opt) overrides.horizon = horizon;
    if (*out_opt) overrides.output = out;
    if (*workers_opt) overrides.workers = workers;

    auto config = pc::load_config(config_path);
    pc::apply_overrides(config, overrides);
    const auto record = pc::run(config);
    pc::emit(record, config.run.output);

    std::cout << record.experiment << ": " << (record.pass() ? "PASS" : "FAIL")
              << " (" << record.rows.size() << " rows, "
              << record.failures << " failed replications)\n";
    for (const auto &c : record.checks) {
      std::cout << "  " << c.name << " = " << c.statistic
                << " (threshold " << c.threshold << ") "
                << (c.pass ? "ok" : "FAIL") << "\n";
    }
    return record.pass() ? 0 : 2;
  } catch (const perpetua::Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
