#pragma once

namespace rlc {

// Full command-line entry point.  Returns the process exit code:
//   0  success (including --help)
//   1  runtime failure (I/O, transport, lock conflicts, training errors)
//   2  usage errors (unknown flags, bad values, invalid config combinations)
int run_cli(int argc, const char* const* argv);

}  // namespace rlc
