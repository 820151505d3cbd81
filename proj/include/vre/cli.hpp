#pragma once

#include <iosfwd>

namespace vre::cli {

/// Entry point of the `vre` command. Returns the process exit code:
/// 0 success, 2 validation, 3 simulated cloud, 4 state or lock.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}
