#pragma once
// Command-line front end. Subcommands: run, converge, conserve, check.

#include <ostream>
#include <span>
#include <string>

namespace fvi {

/// `args` excludes the program name. Returns the process exit status:
/// 0 on success, 1 on runtime failure, 2 on usage errors.
int parse_and_dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace fvi
