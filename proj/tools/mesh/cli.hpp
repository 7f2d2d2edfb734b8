#pragma once

#include <iosfwd>

namespace mesh::cli {

/// Parses arguments, runs one command and returns the exit code: 0 success,
/// 1 usage, 2 data, 3 numerical. Errors are written to `err` as one JSON line.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace mesh::cli
