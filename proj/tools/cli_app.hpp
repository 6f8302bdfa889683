#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cvqkd::cli {

// Run the command-line tool on the given arguments (argv[0] excluded),
// writing normal output to `out` and diagnostics to `err`.  Returns the
// process exit code: 0 success, 1 numeric/domain/runtime error, 2 usage
// error.  Factored out of main() so tests can drive the full CLI in
// process.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace cvqkd::cli
