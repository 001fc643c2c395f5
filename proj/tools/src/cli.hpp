#pragma once

#include <iosfwd>

namespace vulnpipe::cli {

/// Process exit statuses.
enum ExitCode : int {
  kOk = 0,
  kFlagged = 2,     // review found at least one flagged function
  kUsage = 64,
  kData = 65,
  kUnavailable = 69,  // scorer backend unreachable
  kSoftware = 70,     // scorer backend failure, internal error
  kIo = 74,
  kProtocol = 76,     // scorer backend broke the protocol
};

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vulnpipe::cli
