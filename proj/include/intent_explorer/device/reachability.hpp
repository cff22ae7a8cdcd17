#pragma once

#include <cstddef>
#include <set>
#include <string>

#include "intent_explorer/device/app_model.hpp"

namespace intent_explorer::device {

struct ReachabilityLimits {
    std::size_t max_stack_depth = 8;
    std::size_t max_states = 200000;
};

struct ReachabilityResult {
    std::set<std::string> internal;  // reachable internal activities
    std::set<std::string> external;
    std::size_t states_explored = 0;
    bool truncated = false;  // max_states hit before the frontier emptied
};

// Breadth-first search over simulator states keyed by (activity stack,
// loading ticks, valuation of the control variables with lists reduced to
// their distinct sorted members). Control variables are those read by a
// guard or template condition, plus whatever mutations copy into them. The
// search stops early once every declared activity has been seen. set_text
// is tried with "x" and every string literal a guard, `if` or `where`
// compares the bound variable against; editable widgets without a binding
// are skipped because they cannot affect guards.
ReachabilityResult explore_reachable(const AppModel& model, const ReachabilityLimits& limits = {});

}  // namespace intent_explorer::device
