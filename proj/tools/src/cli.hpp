#pragma once

#include <iosfwd>

namespace coastal::tools {

/// Exit codes: 0 success, 1 runtime failure, 2 invalid usage or input.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace coastal::tools
