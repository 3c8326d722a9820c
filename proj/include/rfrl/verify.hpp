#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rfrl {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

using CheckList = std::vector<CheckResult>;

/// Property suites with fixed seeds, one per module plus the two numerical
/// oracle lemmas. Each returns per-check results.
CheckList verify_mdp_core();
CheckList verify_model_class();
CheckList verify_raffle();
CheckList verify_replearn();
CheckList verify_hard_instances();
CheckList verify_simulation();
CheckList verify_elliptical();
CheckList verify_harness();

/// Runs the named suite ("all" runs everything), printing one line per check.
/// Returns true iff every check passed. Throws std::invalid_argument for an
/// unknown suite name.
bool run_verify(const std::string& suite, std::ostream& out);

}  // namespace rfrl
