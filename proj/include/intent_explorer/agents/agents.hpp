#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "intent_explorer/error.hpp"
#include "intent_explorer/gui/action.hpp"
#include "intent_explorer/gui/serialize.hpp"
#include "intent_explorer/llm/gateway.hpp"
#include "intent_explorer/llm/template.hpp"
#include "intent_explorer/memory/stores.hpp"

namespace intent_explorer::agents {

struct PersonaProfile {
    std::string name;
    std::string goal;                                // empty: default_goal(name)
    std::map<std::string, std::string> credentials;  // shown verbatim to Planner and Actor
    std::vector<std::string> traits;

    void validate() const;
    std::string effective_goal() const;
    // Name, traits and credentials as prompt text.
    std::string profile_text() const;
};

std::string default_goal(const std::string& persona_name);

class PlanningError : public Error {
public:
    using Error::Error;
};

class ActorError : public Error {
public:
    using Error::Error;
};

// "Touch a TextView that has content_desc \"Save\"" and friends, resolved
// against the state the action was chosen on.
std::string describe_action(const gui::Action& action, const gui::GuiState& state);

// Textual key of a page used to store and retrieve task knowledge: the
// activity name plus the stable textual properties of every widget.
std::string state_key(const gui::GuiState& state);

// Working-memory events as the numbered list shown to Critic and Reflector.
std::string history_text(const memory::WorkingMemory& memory);

struct PlannerInput {
    std::vector<memory::TaskRecord> recent;    // oldest first
    std::vector<memory::TaskRecord> relevant;  // best first
    memory::Coverage coverage;
    std::string current_activity;
    std::string state;  // serialized current page
    int max_actions = 13;
};

class Planner {
public:
    Planner(llm::Gateway& gateway, PersonaProfile persona, std::string app_name);

    // One re-prompt on a malformed answer, then PlanningError.
    memory::Task plan(const PlannerInput& input);

    llm::TemplateSchema schema() const;
    std::string build_prompt(const PlannerInput& input) const;
    const std::string& last_prompt() const noexcept { return last_prompt_; }

private:
    llm::Gateway& gateway_;
    PersonaProfile persona_;
    std::string app_name_;
    std::string last_prompt_;
};

class Actor {
public:
    Actor(llm::Gateway& gateway, PersonaProfile persona, std::string app_name);

    // Returned actions always pass validate() and address a widget of
    // `state` that supports them. Throws ActorError when the model keeps
    // failing.
    gui::Action select(const memory::WorkingMemory& memory, const gui::GuiState& state,
                       const std::string& annotated_state);

    // One schema per action type available on `state`, then wait, back, end_task.
    static std::vector<llm::FunctionSchema> functions(const gui::GuiState& state);
    std::vector<llm::ChatMessage> thread(const memory::WorkingMemory& memory, const std::string& annotated_state) const;
    static gui::Action action_from_call(const llm::FunctionCall& call, const gui::GuiState& state);

private:
    llm::Gateway& gateway_;
    PersonaProfile persona_;
    std::string app_name_;
};

class Critic {
public:
    Critic(llm::Gateway& gateway, PersonaProfile persona, std::string app_name);

    // Absent when the answer cannot be parsed or breaks the flag/plan pairing.
    std::optional<memory::Critique> criticise(const memory::WorkingMemory& memory, const std::string& state);
    llm::TemplateSchema schema() const;

private:
    llm::Gateway& gateway_;
    PersonaProfile persona_;
    std::string app_name_;
};

class Observer {
public:
    explicit Observer(llm::Gateway& gateway);

    memory::Observation observe(const gui::Action& action, const std::string& action_description,
                                const gui::StateDiff& diff);
    std::size_t model_calls() const noexcept { return model_calls_; }

private:
    llm::Gateway& gateway_;
    std::size_t model_calls_ = 0;
};

enum class Termination { end_task, cap, error, crash };
std::string_view to_string(Termination reason);

struct ReflectionInput {
    const memory::WorkingMemory* memory = nullptr;
    Termination termination = Termination::end_task;
    std::string detail;       // crash or error message
    std::string final_state;  // serialized; empty after a crash
    std::string start_state_key;
    int max_actions = 13;
};

class Reflector {
public:
    Reflector(llm::Gateway& gateway, PersonaProfile persona, std::string app_name);

    // Builds the record and stores it. A crash forces success=false; an
    // unparseable answer (after one re-prompt) yields "reflection failed".
    memory::TaskRecord reflect(const ReflectionInput& input, memory::TaskStore& store);
    llm::TemplateSchema schema() const;

private:
    llm::Gateway& gateway_;
    PersonaProfile persona_;
    std::string app_name_;
};

inline constexpr const char* kReflectionFailed = "reflection failed";

}  // namespace intent_explorer::agents
