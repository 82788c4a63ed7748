#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "bansac/bench.hpp"

namespace bansac {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2 };

/// Bad flags or out-of-range values. `usage` holds the help text to show.
class CliError : public std::runtime_error {
 public:
  CliError(const std::string& what, std::string usage) : std::runtime_error(what), usage_(std::move(usage)) {}
  const std::string& usage() const { return usage_; }

 private:
  std::string usage_;
};

/// Parses the flags of the `bench` command (program name excluded) into a
/// validated matrix. Unset flags take the defaults of the chosen problem.
TrialMatrix parse_cli(const std::vector<std::string>& args);

/// Entry point of the command-line tool. `args` excludes the program name.
/// Commands: bench (the default), generate, estimate.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bansac
