#include "intent_explorer/runner/config.hpp"

#include <chrono>

namespace intent_explorer::runner {

std::map<llm::RoleTag, llm::ModelRole> RunConfig::default_roles() {
    return {{llm::RoleTag::fast, {llm::RoleTag::fast, "gpt-3.5-turbo-16k-0613", 16000, 0.0}},
            {llm::RoleTag::fast_short, {llm::RoleTag::fast_short, "gpt-3.5-turbo-0613", 4000, 0.0}},
            {llm::RoleTag::strong, {llm::RoleTag::strong, "gpt-4-0613", 8000, 0.0}}};
}

void RunConfig::validate() const {
    persona.validate();
    if (!budget.any()) throw ValidationError("a budget is required: max_tasks, max_actions or wall_seconds");
    if ((budget.max_tasks && *budget.max_tasks < 0) || (budget.max_actions && *budget.max_actions < 0) ||
        (budget.wall_seconds && *budget.wall_seconds < 0)) {
        throw ValidationError("budgets must not be negative");
    }
    if (max_actions_per_task < 1) throw ValidationError("max_actions_per_task must be at least 1");
    if (critique_period < 1) throw ValidationError("critique_period must be at least 1");
    if (recent_tasks == 0 || relevant_tasks == 0 || widget_observations == 0) {
        throw ValidationError("retrieval sizes must be positive");
    }
    if (external_limit < 0 || max_forced_backs < 0) throw ValidationError("external limits must not be negative");
    for (auto tag : {llm::RoleTag::fast, llm::RoleTag::fast_short, llm::RoleTag::strong}) {
        const auto it = roles.find(tag);
        if (it == roles.end()) throw ValidationError("no model bound to role " + std::string(llm::to_string(tag)));
        if (it->second.model.empty()) throw ValidationError("empty model name for role " + std::string(llm::to_string(tag)));
    }
}

RunClock RunClock::ticking(std::int64_t step_ms) {
    RunClock c;
    c.ticking_ = true;
    c.step_ = step_ms;
    return c;
}

RunClock RunClock::wall() {
    RunClock c;
    c.ticking_ = false;
    c.start_ = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
                   .count();
    return c;
}

std::int64_t RunClock::now() {
    if (ticking_) return ++ticks_ * step_;
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

double RunClock::elapsed_seconds() {
    if (ticking_) return static_cast<double>(ticks_ * step_) / 1000.0;
    return static_cast<double>(now() - start_) / 1000.0;
}

}  // namespace intent_explorer::runner
