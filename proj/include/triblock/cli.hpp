#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "triblock/error.hpp"
#include "triblock/io.hpp"

namespace triblock::cli {

inline constexpr const char* kVersion = "0.1.0";

enum class ParamType { number, integer, string, boolean, number_list };

struct Param {
  std::string name;
  ParamType type = ParamType::number;
  Json fallback;
  std::string help;
  std::optional<double> min, max;  ///< inclusive; per element for lists
  std::vector<std::string> choices;
};

/// Parameter schema of a command; throws on unknown commands.
const std::vector<Param>& schema(const std::string& command);
const std::vector<std::string>& commands();

/// Defaults, then the config file object, then flag strings. Unknown keys, type
/// mismatches and out-of-range values throw invalid_input.
Json resolve_config(const std::string& command, const Json& file, const std::map<std::string, std::string>& flags);

/// Hash of the resolved config (canonical compact dump), embedded in every artifact.
std::string config_hash(const Json& resolved);

/// Executes a resolved config, writing artifacts and manifest.json into config["out"].
/// Returns the manifest.
Json execute(const Json& resolved, std::ostream& out);

/// Full command line entry point (argv[0] is the program name). Errors are reported
/// as JSON on err and through a nonzero exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int exit_code(ErrorKind kind);

}  // namespace triblock::cli
