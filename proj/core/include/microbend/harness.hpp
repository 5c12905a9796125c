#pragma once

#include <iosfwd>

#include "microbend/run_config.hpp"

namespace microbend::harness {

// Exit codes: 0 success, 1 validation failure, 2 solver failure, 3 check failure.
int run_cell(const RunConfig& cfg, std::ostream& out);
int run_simulate(const RunConfig& cfg, std::ostream& out);
int run_converge(const RunConfig& cfg, std::ostream& out);
int run_check(const RunConfig& cfg, std::ostream& out);

// Maps exceptions from the command bodies onto the exit-code contract.
int dispatch(const std::string& command, const RunConfig& cfg, std::ostream& out,
             std::ostream& err);

}  // namespace microbend::harness
