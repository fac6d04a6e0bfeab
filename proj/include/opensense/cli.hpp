#pragma once

namespace opensense {

// Command-line front end (gen-trace, train-qlbs, simulate, compare,
// openworld, update-exp). Exposed as a function so tests can drive the
// exact CLI paths in-process.
int run_cli(int argc, const char* const* argv);

}  // namespace opensense
