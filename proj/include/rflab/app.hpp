#pragma once

// Subcommands of the rflab command-line tool. Each returns its exit status:
//   0 success (flows ending in blowup or step underflow included)
//   1 an explicit-constant check failed
//   2 invalid configuration or input values
//   3 trajectory CSV does not match the schema
//   4 unexpected internal error

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rflab {

/// Environment variable selecting the default output directory.
inline constexpr const char* kOutDirEnv = "RFLAB_OUT_DIR";

struct CliOptions {
  std::string config;
  /// Output path prefix; extensions are appended.
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  std::string trajectory;
  std::vector<std::string> checks;
  /// "section.key=v1,v2,..."
  std::optional<std::string> grid;
};

int cmd_flow(const CliOptions& opts, std::ostream& out, std::ostream& err);
int cmd_check(const CliOptions& opts, std::ostream& out, std::ostream& err);
int cmd_constants(const CliOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const CliOptions& opts, std::ostream& out, std::ostream& err);

/// The same computations without writing files, as JSON text: flow gives
/// {"meta", "trajectory"}, check the report array, constants the tables.
std::string flow_json(const CliOptions& opts);
std::string check_json(const CliOptions& opts);
std::string constants_json(const CliOptions& opts);

/// Runs `body`, mapping exceptions to exit codes and messages on `err`.
int guarded(const std::function<int()>& body, std::ostream& err);

}  // namespace rflab
