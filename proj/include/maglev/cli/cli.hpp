#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "maglev/cli/report.hpp"
#include "maglev/cli/scenario.hpp"

namespace maglev::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 1;
inline constexpr int exit_numerical = 2;

struct Options {
  std::string command;
  std::filesystem::path scenario;
  std::optional<std::filesystem::path> out;
  Format format = Format::Csv;
  std::optional<std::uint64_t> seed;
  int sweep = 0;        // simulate: replicas with derived seeds
  unsigned workers = 0;
};

const std::vector<std::string>& command_names();

/// Runs one command. Throws ValidationError or maglev::Error.
Report run_command(const Options& options, const Scenario& scenario);

/// Full front end: parses arguments, runs, writes outputs, maps failures to
/// exit codes 0 (success), 1 (validation) and 2 (numerical failure).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace maglev::cli
