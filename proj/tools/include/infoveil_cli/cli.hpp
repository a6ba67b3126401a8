#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "infoveil/error.hpp"

namespace infoveil::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNotFound = 3;      // missing file, snapshot, query id
inline constexpr int kExitData = 4;          // validation or analytic precondition failed
inline constexpr int kExitCorrupt = 5;       // snapshot hash mismatch
inline constexpr int kExitUnavailable = 6;   // source, store or bind failure

int exitCodeFor(ErrorCode code);

/// Runs one command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace infoveil::cli
