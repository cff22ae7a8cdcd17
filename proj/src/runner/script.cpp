#include "intent_explorer/runner/script.hpp"

#include <fstream>
#include <variant>

namespace intent_explorer::runner {

nlohmann::ordered_json to_json(const ScriptStep& step) {
    nlohmann::ordered_json j;
    if (step.reset) {
        j["action"] = "reset";
        j["target"] = nullptr;
        if (step.forced) j["forced"] = true;
        return j;
    }
    j["action"] = gui::to_string(step.type);
    j["target"] = step.target ? gui::to_json(*step.target) : nlohmann::ordered_json();
    if (step.text) j["text"] = *step.text;
    if (step.direction) j["direction"] = gui::to_string(*step.direction);
    if (step.forced) j["forced"] = true;
    return j;
}

ScriptStep script_step_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("script step must be an object");
    ScriptStep s;
    if (j.at("action") == "reset") {
        s.reset = true;
        s.forced = j.value("forced", false);
        return s;
    }
    const auto type = gui::action_type_from_string(j.at("action").get<std::string>());
    if (!type) throw ParseError("unknown action in script step: " + j["action"].dump());
    s.type = *type;
    if (j.contains("target") && !j["target"].is_null()) s.target = gui::signature_from_json(j["target"]);
    if (j.contains("text")) s.text = j["text"].get<std::string>();
    if (j.contains("direction")) {
        s.direction = gui::scroll_direction_from_string(j["direction"].get<std::string>());
        if (!s.direction) throw ParseError("unknown scroll direction " + j["direction"].dump());
    }
    s.forced = j.value("forced", false);
    if (gui::requires_target(s.type) != s.target.has_value()) {
        throw ParseError(std::string(gui::to_string(s.type)) + " step has " + (s.target ? "an unexpected" : "no") +
                         " target");
    }
    return s;
}

nlohmann::ordered_json to_json(const TestScript& script) {
    nlohmann::ordered_json j;
    j["version"] = kScriptVersion;
    j["app_package"] = script.app_package;
    j["task"] = script.task;
    j["end_condition"] = script.end_condition;
    j["success"] = script.success;
    j["expected_terminal_activity"] = script.expected_terminal_activity;
    j["expected_crash_step"] = script.expected_crash_step ? nlohmann::ordered_json(*script.expected_crash_step)
                                                          : nlohmann::ordered_json();
    j["setup"] = nlohmann::ordered_json::array();
    for (const auto& s : script.setup) j["setup"].push_back(to_json(s));
    j["steps"] = nlohmann::ordered_json::array();
    for (const auto& s : script.steps) j["steps"].push_back(to_json(s));
    return j;
}

TestScript script_from_json(const nlohmann::json& j) {
    try {
        if (j.at("version").get<int>() != kScriptVersion) {
            throw ParseError("unsupported script version " + j["version"].dump());
        }
        TestScript t;
        t.app_package = j.at("app_package").get<std::string>();
        t.task = j.at("task").get<std::string>();
        t.end_condition = j.value("end_condition", "");
        t.success = j.value("success", false);
        t.expected_terminal_activity = j.value("expected_terminal_activity", "");
        if (j.contains("expected_crash_step") && !j["expected_crash_step"].is_null()) {
            t.expected_crash_step = j["expected_crash_step"].get<int>();
        }
        for (const auto& s : j.value("setup", nlohmann::json::array())) t.setup.push_back(script_step_from_json(s));
        for (const auto& s : j.at("steps")) t.steps.push_back(script_step_from_json(s));
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed test script: ") + e.what());
    }
}

TestScript load_script(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open script " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return script_from_json(j);
}

void save_script(const std::filesystem::path& path, const TestScript& script) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write script " + path.string());
    out << to_json(script).dump(2) << '\n';
}

ScriptStep make_step(const gui::Action& action, const gui::GuiState& state, bool forced) {
    ScriptStep s{action.type, std::nullopt, action.text, action.direction, forced};
    if (action.target) {
        const gui::Widget* w = state.find(*action.target);
        if (!w) throw ScriptExportError("widget " + std::to_string(*action.target) + " is not on " + state.activity_name);
        s.target = gui::compute_signature(*w, state.activity_name);
    }
    return s;
}

std::string ReplayVerdict::summary() const {
    if (broken_step) {
        const std::string where = broken_phase == "setup" ? " of the setup" : "";
        return "broken script at step " + std::to_string(*broken_step) + where + ": " + broken_reason;
    }
    std::string out = passed ? "passed" : "failed";
    out += ": " + std::to_string(steps_executed) + " steps executed";
    if (crash_step) out += ", crash at step " + std::to_string(*crash_step) + " (" + crash_message + ")";
    else out += ", terminal activity " + terminal_activity + (terminal_activity_matches ? " matches" : " differs");
    return out;
}

nlohmann::ordered_json to_json(const ReplayVerdict& v) {
    nlohmann::ordered_json j;
    j["passed"] = v.passed;
    j["all_steps_executed"] = v.all_steps_executed;
    j["terminal_activity_matches"] = v.terminal_activity_matches;
    j["steps_executed"] = v.steps_executed;
    j["terminal_activity"] = v.terminal_activity;
    j["crash_step"] = v.crash_step ? nlohmann::ordered_json(*v.crash_step) : nlohmann::ordered_json();
    j["crash_message"] = v.crash_message;
    if (v.broken_step) {
        j["broken"] = {{"phase", v.broken_phase}, {"step", *v.broken_step}, {"reason", v.broken_reason}};
    }
    j["summary"] = v.summary();
    return j;
}

namespace {

// Ordinal of the single widget carrying `sig`, or an error message.
std::variant<int, std::string> resolve(const gui::WidgetSignature& sig, const gui::GuiState& state) {
    std::vector<int> hits;
    for (const auto* w : state.preorder()) {
        if (gui::compute_signature(*w, state.activity_name) == sig) hits.push_back(w->id);
    }
    if (hits.size() == 1) return hits.front();
    if (hits.empty()) return "no widget matches " + sig.to_string() + " on " + state.activity_name;
    return std::to_string(hits.size()) + " widgets match " + sig.to_string() + " on " + state.activity_name;
}

}  // namespace

ReplayVerdict replay(const TestScript& script, device::DeviceInterface& device) {
    ReplayVerdict v;
    device.reset();

    auto run_step = [&](const ScriptStep& step, const char* phase, int index) -> bool {
        if (step.reset) {
            device.reset();
            return true;
        }
        const auto state = device.observe();
        gui::Action action{step.type, std::nullopt, step.text, step.direction};
        if (step.target) {
            auto r = resolve(*step.target, state);
            if (const auto* msg = std::get_if<std::string>(&r)) {
                v.broken_phase = phase;
                v.broken_step = index;
                v.broken_reason = *msg;
                return false;
            }
            action.target = std::get<int>(r);
        }
        const auto outcome = device.perform(action);
        if (outcome.crashed) {
            v.crash_step = index;
            v.crash_message = outcome.crash_message;
            if (std::string(phase) == "setup") {
                v.broken_phase = phase;
                v.broken_step = index;
                v.broken_reason = "the app crashed during setup: " + outcome.crash_message;
            }
            return false;
        }
        return true;
    };

    for (std::size_t i = 0; i < script.setup.size(); ++i) {
        if (!run_step(script.setup[i], "setup", static_cast<int>(i) + 1)) {
            v.crash_step.reset();
            return v;
        }
    }
    for (std::size_t i = 0; i < script.steps.size(); ++i) {
        if (!run_step(script.steps[i], "steps", static_cast<int>(i) + 1)) break;
        ++v.steps_executed;
    }
    if (v.broken_step) return v;

    v.all_steps_executed = v.steps_executed == static_cast<int>(script.steps.size());
    if (v.crash_step) {
        v.terminal_activity_matches = script.expected_terminal_activity.empty();
        v.passed = script.expected_crash_step == v.crash_step;
    } else {
        v.terminal_activity = device.current_activity();
        v.terminal_activity_matches = v.terminal_activity == script.expected_terminal_activity;
        v.passed = !script.expected_crash_step && v.all_steps_executed && v.terminal_activity_matches;
    }
    return v;
}

}  // namespace intent_explorer::runner
