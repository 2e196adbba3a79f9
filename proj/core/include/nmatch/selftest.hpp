#pragma once

#include <ostream>

namespace nmatch {

// Runs the quick invariant suite, printing one line per check.
// Returns the number of failed checks (0 means all good).
int run_selftest(std::ostream& os);

}  // namespace nmatch
