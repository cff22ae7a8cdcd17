#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "intent_explorer/gui/action.hpp"
#include "intent_explorer/gui/serialize.hpp"
#include "intent_explorer/gui/signature.hpp"
#include "intent_explorer/memory/embedding.hpp"

namespace intent_explorer::memory {

struct Task {
    std::string description;
    std::string end_condition;
    std::string reasoning;
    std::string persona;
};

struct Observation {
    std::string summary;
    gui::StateDiff diff;
    gui::Action action;
};

inline constexpr const char* kNoChangeSummary = "The action produced no visible change.";

struct Critique {
    std::string review;
    bool needs_workaround = false;
    std::optional<std::string> plan;  // present iff needs_workaround
};

struct TaskRecord {
    std::string description;
    std::string end_condition;
    bool success = false;
    std::string summary;
    std::vector<std::string> reflections;
    std::string start_state_key;
    EmbeddingVector embedding;
    bool duplicate = false;  // an earlier record has the same description
};

nlohmann::ordered_json to_json(const TaskRecord& record);
TaskRecord task_record_from_json(const nlohmann::json& j);

struct WidgetObservationEntry {
    gui::WidgetSignature signature;
    EmbeddingVector state_embedding;
    gui::ActionType action = gui::ActionType::touch;
    std::string observation;
    int sequence = 0;  // assigned by the store, 1-based per signature
};

nlohmann::ordered_json to_json(const WidgetObservationEntry& entry);
WidgetObservationEntry widget_entry_from_json(const nlohmann::json& j);

}  // namespace intent_explorer::memory
