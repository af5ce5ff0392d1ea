#pragma once

#include <ostream>

#include "popagg/config.hpp"
#include "popagg/domain.hpp"

namespace popagg::cli {

// Full command line entry point; returns the process exit code (2 for usage errors).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

Domain load_domain(const RunConfig& config);

}  // namespace popagg::cli
