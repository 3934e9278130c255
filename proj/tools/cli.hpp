#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

// Command-line front end. The executable is a thin wrapper around run_cli so
// tests can drive every subcommand in-process.
namespace shotwright::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Record written as manifest.json next to every command's outputs.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;
  std::vector<std::string> outputs;
  std::string tool_version;
  double duration_seconds = 0.0;

  /// Pretty-printed JSON with keys in a fixed order.
  std::string to_json() const;
};

/// `args` excludes the program name. Returns the process exit code: 0 on
/// success, 1 on runtime failures, 2 on usage errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace shotwright::cli
