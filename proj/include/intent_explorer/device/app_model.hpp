#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "intent_explorer/device/expression.hpp"
#include "intent_explorer/gui/action.hpp"
#include "intent_explorer/gui/hierarchy.hpp"

namespace intent_explorer::device {

// Template elements are <node> (hierarchy attributes plus the simulator-only
// `bind`, `max-len` and `if`) and <repeat list= as= [index=] [where=]>.
struct ActivityModel {
    std::string name;
    bool internal = true;
    std::string package;  // empty: the app's package
    std::vector<gui::XmlElement> template_nodes;
    std::optional<std::vector<gui::XmlElement>> loading_nodes;
};

// Matches rendered widgets on any subset of signature components.
struct WidgetMatcher {
    std::optional<std::string> widget_type;
    std::optional<std::string> resource_id;
    std::optional<std::string> content_description;
    std::optional<std::string> text;

    bool empty() const { return !widget_type && !resource_id && !content_description && !text; }
    bool matches(const gui::Widget& w) const;
};

enum class Navigation { stay, push, replace, pop, root };

struct TransitionRule {
    std::string from;
    gui::ActionType on = gui::ActionType::touch;
    WidgetMatcher match;
    std::optional<Expression> guard;
    std::optional<std::string> to;
    Navigation nav = Navigation::stay;
    std::vector<Mutation> mutations;
    int delay = 0;  // loading ticks consumed by `wait`
    std::optional<std::string> crash;
    int index = 0;  // position in the model's transition list
    int line = 0;

    std::string describe() const;
};

struct VariableDecl {
    std::string name;
    Value initial;
};

struct AppModel {
    std::string package_name;
    std::string app_name;
    std::string initial_activity;
    std::vector<VariableDecl> variables;
    std::vector<ActivityModel> activities;
    std::vector<TransitionRule> transitions;  // first match wins

    const ActivityModel* find_activity(std::string_view name) const;
    std::vector<std::string> internal_activity_names() const;
    std::vector<std::string> external_activity_names() const;
    Variables initial_variables() const;
};

// Parse + validate. ParseError carries the YAML location; ValidationError
// names the offending rule or activity.
AppModel load_app_model(const std::filesystem::path& path);
AppModel load_app_model_from_string(std::string_view text, const std::string& origin = "<memory>");

}  // namespace intent_explorer::device
