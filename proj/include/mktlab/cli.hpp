#pragma once

#include <ostream>

namespace mktlab {

/// Entry point behind the mktlab executable. Returns 0 on success, 2 for
/// usage or configuration errors, 1 for runtime failures.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mktlab
