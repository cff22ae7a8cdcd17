#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "intent_explorer/device/device.hpp"
#include "intent_explorer/gui/action.hpp"
#include "intent_explorer/gui/signature.hpp"

namespace intent_explorer::runner {

// One replayable action. Widgets are addressed by signature, never by ordinal.
struct ScriptStep {
    gui::ActionType type = gui::ActionType::wait;
    std::optional<gui::WidgetSignature> target;
    std::optional<std::string> text;
    std::optional<gui::ScrollDirection> direction;
    bool forced = false;  // inserted by the runner to return from another app
    bool reset = false;   // restart the app; type and arguments are ignored

    bool operator==(const ScriptStep&) const = default;
};

inline constexpr int kScriptVersion = 1;

struct TestScript {
    std::string app_package;
    std::string task;
    std::string end_condition;
    std::vector<ScriptStep> setup;  // actions since the last reset that led to the task's start page
    std::vector<ScriptStep> steps;
    std::string expected_terminal_activity;  // empty when the task crashed
    std::optional<int> expected_crash_step;  // 1-based index into steps
    bool success = false;

    bool operator==(const TestScript&) const = default;
};

nlohmann::ordered_json to_json(const ScriptStep& step);
ScriptStep script_step_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const TestScript& script);
// Throws ParseError on a wrong version or malformed steps.
TestScript script_from_json(const nlohmann::json& j);
TestScript load_script(const std::filesystem::path& path);
void save_script(const std::filesystem::path& path, const TestScript& script);

class ScriptExportError : public Error {
public:
    using Error::Error;
};

// The step for `action` taken on `state`, with the target resolved to its
// signature. Throws ScriptExportError when the ordinal is not on the page.
ScriptStep make_step(const gui::Action& action, const gui::GuiState& state, bool forced = false);

struct ReplayVerdict {
    bool passed = false;
    bool all_steps_executed = false;
    bool terminal_activity_matches = false;
    int steps_executed = 0;
    std::string terminal_activity;
    std::optional<int> crash_step;
    std::string crash_message;
    std::optional<int> broken_step;  // 1-based within broken_phase
    std::string broken_phase;        // "setup" or "steps"
    std::string broken_reason;

    std::string summary() const;
};

nlohmann::ordered_json to_json(const ReplayVerdict& verdict);

// Resets the device, then performs setup and steps in order. A signature
// that matches zero or several widgets makes the script "broken" at that
// step. Passing means: not broken, and either the recorded crash recurs at
// the same step or all steps ran and the terminal activity matches.
ReplayVerdict replay(const TestScript& script, device::DeviceInterface& device);

}  // namespace intent_explorer::runner
