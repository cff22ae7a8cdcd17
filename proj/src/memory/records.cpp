#include "intent_explorer/memory/records.hpp"

#include "intent_explorer/error.hpp"

namespace intent_explorer::memory {

nlohmann::ordered_json to_json(const TaskRecord& record) {
    nlohmann::ordered_json j;
    j["description"] = record.description;
    j["end_condition"] = record.end_condition;
    j["success"] = record.success;
    j["summary"] = record.summary;
    j["reflections"] = record.reflections;
    j["duplicate"] = record.duplicate;
    j["start_state_key"] = record.start_state_key;
    j["embedding"] = record.embedding;
    return j;
}

TaskRecord task_record_from_json(const nlohmann::json& j) {
    TaskRecord r;
    r.description = j.at("description").get<std::string>();
    r.end_condition = j.value("end_condition", "");
    r.success = j.at("success").get<bool>();
    r.summary = j.value("summary", "");
    r.reflections = j.value("reflections", std::vector<std::string>{});
    r.duplicate = j.value("duplicate", false);
    r.start_state_key = j.at("start_state_key").get<std::string>();
    r.embedding = j.value("embedding", EmbeddingVector{});
    return r;
}

nlohmann::ordered_json to_json(const WidgetObservationEntry& entry) {
    nlohmann::ordered_json j;
    j["signature"] = gui::to_json(entry.signature);
    j["sequence"] = entry.sequence;
    j["action"] = gui::to_string(entry.action);
    j["observation"] = entry.observation;
    j["state_embedding"] = entry.state_embedding;
    return j;
}

WidgetObservationEntry widget_entry_from_json(const nlohmann::json& j) {
    WidgetObservationEntry e;
    e.signature = gui::signature_from_json(j.at("signature"));
    e.sequence = j.at("sequence").get<int>();
    const auto type = gui::action_type_from_string(j.at("action").get<std::string>());
    if (!type) throw ParseError("unknown action type in widget entry: " + j["action"].dump());
    e.action = *type;
    e.observation = j.value("observation", "");
    e.state_embedding = j.value("state_embedding", EmbeddingVector{});
    return e;
}

}  // namespace intent_explorer::memory
