#pragma once

// Command-line front end. `run_cli` is the whole program minus process
// plumbing, so tests can drive it in-process.

#include <iosfwd>
#include <string>
#include <vector>

namespace strikelab::cli {

/// args excludes the program name. Returns the process exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace strikelab::cli
