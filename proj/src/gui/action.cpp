#include "intent_explorer/gui/action.hpp"

#include <array>

#include "intent_explorer/error.hpp"

namespace intent_explorer::gui {

namespace {

constexpr std::array<std::pair<ActionType, std::string_view>, 7> kActionNames{{
    {ActionType::touch, "touch"},
    {ActionType::long_touch, "long_touch"},
    {ActionType::set_text, "set_text"},
    {ActionType::scroll, "scroll"},
    {ActionType::wait, "wait"},
    {ActionType::back, "back"},
    {ActionType::end_task, "end_task"},
}};

constexpr std::array<ActionType, 4> kWidgetActionOrder{ActionType::touch, ActionType::long_touch,
                                                       ActionType::set_text, ActionType::scroll};

}  // namespace

std::string_view to_string(ActionType type) {
    for (const auto& [t, name] : kActionNames) {
        if (t == type) return name;
    }
    return "unknown";
}

std::optional<ActionType> action_type_from_string(std::string_view name) {
    for (const auto& [t, n] : kActionNames) {
        if (n == name) return t;
    }
    return std::nullopt;
}

std::string_view to_string(ScrollDirection direction) {
    return direction == ScrollDirection::up ? "up" : "down";
}

std::optional<ScrollDirection> scroll_direction_from_string(std::string_view name) {
    if (name == "up") return ScrollDirection::up;
    if (name == "down") return ScrollDirection::down;
    return std::nullopt;
}

bool requires_target(ActionType type) {
    return type == ActionType::touch || type == ActionType::long_touch || type == ActionType::set_text ||
           type == ActionType::scroll;
}

void Action::validate() const {
    const auto name = std::string(to_string(type));
    if (requires_target(type) && !target) throw ValidationError(name + " requires a target widget");
    if (!requires_target(type) && target) throw ValidationError(name + " takes no target widget");
    if (type == ActionType::set_text && !text) throw ValidationError("set_text requires a text argument");
    if (type != ActionType::set_text && text) throw ValidationError(name + " takes no text argument");
    if (type == ActionType::scroll && !direction) throw ValidationError("scroll requires a direction");
    if (type != ActionType::scroll && direction) throw ValidationError(name + " takes no direction");
}

nlohmann::ordered_json to_json(const Action& action) {
    nlohmann::ordered_json j;
    j["type"] = std::string(to_string(action.type));
    if (action.target) j["target"] = *action.target;
    if (action.text) j["text"] = *action.text;
    if (action.direction) j["direction"] = std::string(to_string(*action.direction));
    return j;
}

Action action_from_json(const nlohmann::json& j) {
    Action a;
    const auto type = action_type_from_string(j.at("type").get<std::string>());
    if (!type) throw ParseError("unknown action type: " + j.at("type").get<std::string>());
    a.type = *type;
    if (j.contains("target")) a.target = j.at("target").get<int>();
    if (j.contains("text")) a.text = j.at("text").get<std::string>();
    if (j.contains("direction")) {
        a.direction = scroll_direction_from_string(j.at("direction").get<std::string>());
        if (!a.direction) throw ParseError("unknown scroll direction");
    }
    a.validate();
    return a;
}

bool widget_supports(const Widget& widget, ActionType type) {
    if (!widget.bounds.has_area()) return false;
    switch (type) {
        case ActionType::touch: return widget.clickable;
        case ActionType::long_touch: return widget.long_clickable;
        case ActionType::set_text: return widget.editable;
        case ActionType::scroll: return widget.scrollable;
        default: return false;
    }
}

std::vector<ActionType> possible_action_types(const Widget& widget) {
    std::vector<ActionType> out;
    for (ActionType t : kWidgetActionOrder) {
        if (widget_supports(widget, t)) out.push_back(t);
    }
    return out;
}

std::vector<WidgetAction> enumerate_actions(const GuiState& state) {
    std::vector<WidgetAction> out;
    for (const Widget* w : state.preorder()) {
        for (ActionType t : possible_action_types(*w)) out.push_back({t, w->id});
    }
    return out;
}

}  // namespace intent_explorer::gui
