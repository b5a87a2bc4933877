#include "perpetua/cli/emit.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "perpetua/error.hpp"

namespace perpetua::cli {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string to_csv(const ResultRecord &record) {
  std::string out;
  for (std::size_t c = 0; c < record.columns.size(); ++c) {
    if (c) out += ',';
    out += record.columns[c];
  }
  out += '\n';
  for (const auto &row : record.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_double(row[c]);
    }
    out += '\n';
  }
  return out;
}

nlohmann::json to_json(const ResultRecord &record) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(record.config_hash));
  nlohmann::json checks = nlohmann::json::array();
  for (const auto &c : record.checks) {
    nlohmann::json j{{"name", c.name},
                     {"statistic", c.statistic},
                     {"threshold", c.threshold},
                     {"pass", c.pass}};
    if (c.p_value) j["p_value"] = *c.p_value;
    checks.push_back(j);
  }
  return {
      {"schema_version", kSchemaVersion},
      {"experiment", record.experiment},
      {"seed", record.seed},
      {"config_hash", hash},
      {"replications", record.replications},
      {"failures", record.failures},
      {"errors", record.errors},
      {"workers", record.workers},
      {"horizon", record.horizon},
      {"columns", record.columns},
      {"rows", record.rows.size()},
      {"estimates", record.estimates},
      {"checks", checks},
      {"verdict", record.pass() ? "PASS" : "FAIL"},
      {"wall_time_s", record.wall_time},
  };
}

namespace {

void write_file(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  }
  out << text;
  if (!out) {
    fail(ErrorCode::IoError, "write to " + path + " failed");
  }
}

} // namespace

void emit(const ResultRecord &record, const std::string &path) {
  write_file(path + ".csv", to_csv(record));
  write_file(path + ".json", to_json(record).dump(2) + "\n");
}

} // namespace perpetua::cli
