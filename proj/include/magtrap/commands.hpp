#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "magtrap/config.hpp"

namespace magtrap {

enum class Command { simulate, levels, twist, trap, drift, reduce };

const char* to_string(Command command);
std::optional<Command> parse_command(std::string_view name);

// Environment variable overriding the default output directory.
inline constexpr const char* kOutDirEnv = "MAGTRAP_OUT_DIR";

// --out, then $MAGTRAP_OUT_DIR, then ./magtrap-out/<command>.
std::filesystem::path resolve_output_dir(const std::optional<std::string>& cli_out, Command command);

struct CommandOptions {
    std::filesystem::path out_dir;
    bool force = false;
    std::optional<std::uint64_t> seed;  // overrides [trap] seed
    unsigned threads = 0;               // 0 = hardware concurrency
};

struct CommandOutcome {
    std::string summary;  // one line
    std::vector<std::string> warnings;
    std::vector<std::filesystem::path> files;
};

// Runs the command and writes its artifacts; throws Error on failure.
CommandOutcome run_command(const RunConfig& config, Command command, const CommandOptions& options);

// Exit status for a failure: 1 for user errors, 2 for numerical failures.
int exit_code_for(const Error& error);

// Loads the config, runs, prints warnings and the summary (or the
// diagnostic) and returns the exit status 0, 1 or 2.
int run_command_reporting(const std::filesystem::path& config_path, Command command,
                          const CommandOptions& options, std::ostream& out, std::ostream& err);

}  // namespace magtrap
