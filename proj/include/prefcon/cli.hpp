#ifndef PREFCON_CLI_HPP
#define PREFCON_CLI_HPP

#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace prefcon::cli {

/// Exit codes.
inline constexpr int exit_ok = 0;
inline constexpr int exit_domain_error = 1;
inline constexpr int exit_usage_error = 2;

using EnvLookup = std::function<std::optional<std::string>(std::string const &)>;

[[nodiscard]] EnvLookup process_environment();

/// Parses a "key = value" config file; '#' starts a comment line.
[[nodiscard]] std::map<std::string, std::string> read_config_file(std::string const & path);

/// Runs one invocation. args[0] is the program name.
int run(std::vector<std::string> args, std::ostream & out, std::ostream & err, EnvLookup const & env = process_environment());

} // namespace prefcon::cli

#endif // PREFCON_CLI_HPP
