// Command-line front end: generate, ingest, train, detect, eval, ablate.
#pragma once

#include <iosfwd>

namespace mrad {

/// Exit codes: 0 success, 1 configuration error, 2 data error, 3 internal error.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitData = 2, kExitInternal = 3 };

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mrad
