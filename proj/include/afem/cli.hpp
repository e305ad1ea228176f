#pragma once

#include <iosfwd>

namespace afem {

/// Exit codes: 0 success, 1 bad arguments, 2 solver failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace afem
