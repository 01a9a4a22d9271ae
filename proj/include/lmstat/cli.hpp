#pragma once

#include <iosfwd>
#include <string_view>
#include <vector>

namespace lmstat::cli {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitValidation = 2;

/// One value per line; blank lines and text after '#' are ignored.
/// Throws ValidationError naming `source` and the line on malformed input.
std::vector<double> read_series(std::istream& in, std::string_view source);

/// Parses argv, runs the subcommand, writes results to `out` and
/// diagnostics to `err`. Never throws.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lmstat::cli
