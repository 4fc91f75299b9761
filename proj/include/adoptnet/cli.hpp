#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace adoptnet {

struct Command {
  std::string subcommand;
  std::vector<std::string> scenarios;
  std::optional<std::string> channel;
  std::optional<double> budget;
  std::optional<int> horizon;
  std::optional<int> steps;
  std::optional<std::pair<std::uint64_t, std::uint64_t>> seeds;
  std::optional<std::string> constant_u;  // simulate: fixed control, comma list
  std::string out_dir = "out";
  int jobs = 1;
  std::vector<std::string> overrides;  // dotted.path=json_value
};

// Executes one parsed command; returns a process exit status. Infeasible
// policies are data (status 0); errors print to err and return nonzero.
int run_command(const Command& cmd, std::ostream& out, std::ostream& err);

// argv front door: parses flags into a Command and dispatches.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace adoptnet
