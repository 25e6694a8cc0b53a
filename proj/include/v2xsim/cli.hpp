#pragma once

#include <ostream>

namespace v2xsim::cli {

/// Full command-line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace v2xsim::cli
