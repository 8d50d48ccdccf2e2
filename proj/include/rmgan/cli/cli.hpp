#pragma once

#include <ostream>

namespace rmgan::cli {

// Exit codes: 0 success, 1 usage error (usage text on err), 2 runtime error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rmgan::cli
