#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace coa {

// Command-line entry point. `args` excludes the program name. Returns 0 on
// success, 1 on domain errors (a JSON error object is written to `err`), and 2
// on usage errors.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace coa
