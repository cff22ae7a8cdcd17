#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "intent_explorer/gui/widget.hpp"

namespace intent_explorer::gui {

enum class ActionType { touch, long_touch, set_text, scroll, wait, back, end_task };
enum class ScrollDirection { up, down };

std::string_view to_string(ActionType type);
std::optional<ActionType> action_type_from_string(std::string_view name);
std::string_view to_string(ScrollDirection direction);
std::optional<ScrollDirection> scroll_direction_from_string(std::string_view name);

// Widget-derived actions need a target; wait/back/end_task never take one.
bool requires_target(ActionType type);

// One GUI action chosen by the Actor (or the random walker, or a replay).
struct Action {
    ActionType type = ActionType::wait;
    std::optional<int> target;
    std::optional<std::string> text;
    std::optional<ScrollDirection> direction;

    static Action touch(int target) { return {ActionType::touch, target, {}, {}}; }
    static Action long_touch(int target) { return {ActionType::long_touch, target, {}, {}}; }
    static Action set_text(int target, std::string value) {
        return {ActionType::set_text, target, std::move(value), {}};
    }
    static Action scroll(int target, ScrollDirection dir) { return {ActionType::scroll, target, {}, dir}; }
    static Action wait() { return {ActionType::wait, {}, {}, {}}; }
    static Action back() { return {ActionType::back, {}, {}, {}}; }
    static Action end_task() { return {ActionType::end_task, {}, {}, {}}; }

    // Throws ValidationError when argument presence does not match the type.
    void validate() const;

    bool operator==(const Action&) const = default;
};

nlohmann::ordered_json to_json(const Action& action);
Action action_from_json(const nlohmann::json& j);

// True when `widget` offers the capability `type` needs (and is displayed).
bool widget_supports(const Widget& widget, ActionType type);

struct WidgetAction {
    ActionType type;
    int target;

    bool operator==(const WidgetAction&) const = default;
};

// Capability-derived actions in ordinal order, then touch, long_touch,
// set_text, scroll. Zero-area widgets contribute nothing.
std::vector<WidgetAction> enumerate_actions(const GuiState& state);

// The action types a single widget offers, in the fixed order above.
std::vector<ActionType> possible_action_types(const Widget& widget);

}  // namespace intent_explorer::gui
