#pragma once

// The quasifeff command-line tool: curvature dumps, embeddability checks and
// CR-invariance checks. Exit codes: 0 success or criterion satisfied,
// 1 criterion or invariance check failed, 2 usage or configuration error.

#include "qf/config.hpp"

#include "json.hpp"

#include <iosfwd>
#include <string>

namespace qf {

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct CommandResult {
    nlohmann::json report;
    std::string text;
    std::string latex;
    int exit_code = 0;
};

CommandResult cmd_curvature(const RunConfig& cfg);
CommandResult cmd_check(const RunConfig& cfg);
CommandResult cmd_invariance(const RunConfig& cfg);

}  // namespace qf
