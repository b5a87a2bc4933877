#ifndef PERPETUA_CLI_RUNNER_HPP
#define PERPETUA_CLI_RUNNER_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "perpetua/cli/config.hpp"

namespace perpetua::cli {

inline constexpr int kSchemaVersion = 1;

struct Check {
  std::string name;
  double statistic;
  double threshold;
  bool pass;
  std::optional<double> p_value;
};

struct ResultRecord {
  std::string experiment;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  int replications = 0;
  int failures = 0;
  int workers = 1;
  double horizon = 0.0;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<Check> checks;
  nlohmann::json estimates = nlohmann::json::object();
  std::vector<std::string> errors;
  double wall_time = 0.0;

  bool pass() const;
};

/// Worker count: the configured value, else PERPETUA_WORKERS, else the
/// hardware concurrency.
int resolve_workers(int configured);

/// Runs the experiment. Replication r draws from stream r of the seed and
/// its reference draw from an auxiliary stream, so the rows do not depend
/// on the worker count. Throws when more than 0.1% of replications fail.
ResultRecord run(const ExperimentConfig &config);

} // namespace perpetua::cli

#endif // PERPETUA_CLI_RUNNER_HPP
