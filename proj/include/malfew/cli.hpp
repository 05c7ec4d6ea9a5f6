#pragma once

#include <ostream>

namespace malfew::cli {

/// Entry point of the malfew tool. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace malfew::cli
