#pragma once

#include <iosfwd>

namespace nof1::cli {

// Entry point of the nof1 command; returns the process exit code
// (0 ok, 2 validation, 3 inestimable, 4 infeasible everywhere).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nof1::cli
