#ifndef PERPETUA_CLI_EMIT_HPP
#define PERPETUA_CLI_EMIT_HPP

#include <string>

#include <json.hpp>

#include "perpetua/cli/runner.hpp"

namespace perpetua::cli {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

std::string to_csv(const ResultRecord &record);
nlohmann::json to_json(const ResultRecord &record);

/// Writes <path>.csv and <path>.json.
void emit(const ResultRecord &record, const std::string &path);

} // namespace perpetua::cli

#endif // PERPETUA_CLI_EMIT_HPP
