#pragma once

#include <iosfwd>

namespace fracac::cli {

// Exit codes: 0 success, 1 numerical failure (failure.json written), 2 bad
// config, flags or output directory.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fracac::cli
