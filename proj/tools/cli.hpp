#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace scalekit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitResolution = 2;  // unknown model, unreadable or unwritable file
inline constexpr int kExitValidation = 3;  // invalid spec, malformed document or CSV
inline constexpr int kExitExhausted = 4;   // sampling gave up
inline constexpr int kExitUsage = 64;

struct CommandResult {
  int exit_code = kExitOk;
  std::vector<std::filesystem::path> artifacts;  // files written, in order
  std::string summary;                           // human-readable report (stdout)
  std::string error;                             // diagnostics (stderr)
};

/// Runs one command line. `args` excludes the program name. Never throws.
CommandResult run(const std::vector<std::string>& args);

/// Parses a multiply-add count such as "500MF", "4GF" or "2.5e8".
/// Throws std::invalid_argument.
double parse_flops(const std::string& text);

}  // namespace scalekit::cli
