#pragma once

#include <iosfwd>
#include <string>

namespace sitest {

/// Runs a cross-check battery ("fock", "distributions", "tests" or "all"),
/// printing one PASS/FAIL/SKIP line per check with its residual. Returns the
/// number of failures. Throws std::invalid_argument for an unknown suite.
int run_verify(const std::string& suite, std::ostream& out);

}  // namespace sitest
