#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>

#include "intent_explorer/agents/agents.hpp"
#include "intent_explorer/llm/chat.hpp"

namespace intent_explorer::runner {

// Any combination may be set; the run stops when one is exhausted. Checked
// between tasks, so a started task always finishes.
struct Budget {
    std::optional<int> max_tasks;
    std::optional<int> max_actions;
    std::optional<double> wall_seconds;

    bool any() const noexcept { return max_tasks || max_actions || wall_seconds; }
};

struct RunConfig {
    std::filesystem::path app_model;
    agents::PersonaProfile persona;
    Budget budget;
    int max_actions_per_task = 13;
    int critique_period = 3;
    std::size_t recent_tasks = 20;
    std::size_t relevant_tasks = 5;
    std::size_t widget_observations = 5;
    int external_limit = 3;
    int max_forced_backs = 5;
    std::map<llm::RoleTag, llm::ModelRole> roles = default_roles();
    std::uint64_t seed = 0;
    std::filesystem::path output_dir;
    bool deterministic = false;  // tick clock instead of wall clock
    bool redact_credentials = true;

    static std::map<llm::RoleTag, llm::ModelRole> default_roles();
    // Throws ValidationError.
    void validate() const;
};

// Monotone millisecond clock. The tick variant advances by a fixed step on
// every reading so timestamps depend only on the sequence of events.
class RunClock {
public:
    static RunClock ticking(std::int64_t step_ms = 1000);
    static RunClock wall();

    std::int64_t now();
    double elapsed_seconds();

private:
    bool ticking_ = true;
    std::int64_t step_ = 1000;
    std::int64_t ticks_ = 0;
    std::int64_t start_ = 0;
};

}  // namespace intent_explorer::runner
