#pragma once

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace fnnforge::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kNumerical = 3 };

/// Executes a resolved invocation (the "invocation" object stored in every manifest),
/// writing under `out_dir`. Throws on failure.
void execute(const nlohmann::json& invocation, const std::filesystem::path& out_dir, int jobs, std::ostream& log);

/// Parses command-line arguments, runs the command and maps errors to exit codes.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace fnnforge::cli
