#pragma once

#include "stratwave/profiles.hpp"

#include <string>

namespace stratwave {

// Builds a profile from a command-line spec: "step:<layer>,<halfspace>,<thickness>",
// "exp:<ninf>,<ns>,<delta>[,<clip_tol>]", or a path to a CSV file with header
// `Z,N`. Throws IoError on malformed specs, AssumptionError on invalid
// parameters.
VerticalProfile profile_from_spec(const std::string& spec);

// Command-line entry point. Returns the process exit code:
//   0  success
//   1  usage, input, or model-assumption error
//   2  numerical failure
// Errors are reported to stderr as a single line `error: <kind>: <detail>`.
int run_cli(int argc, const char* const* argv);

} // namespace stratwave
