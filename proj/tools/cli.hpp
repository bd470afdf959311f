#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace contagion::cli {

enum ExitCode : int { ok = 0, config_error = 2, unresolved = 3, io_error = 4 };

/// Parses `key = value` text; `#` starts a comment. Keys are lowercased and
/// underscores become dashes. Throws ConfigError on malformed lines.
[[nodiscard]] std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text);

/// Settings held by a --config file: key/value text, or a run manifest (its `config`
/// object, plus `master_seed` as `seed`).
[[nodiscard]] std::vector<std::pair<std::string, std::string>> load_config(const std::string& path,
                                                                           std::string_view command);

/// Appends `--key=value` for every config entry whose flag is absent from `args`, so
/// flags on the command line win. `args` excludes the program name.
[[nodiscard]] std::vector<std::string> expand_config(std::vector<std::string> args);

/// Runs one CLI invocation; `args` excludes the program name. Returns the exit code.
int run(std::vector<std::string> args);
int run(int argc, const char* const* argv);

}  // namespace contagion::cli
