#include "intent_explorer/device/app_model.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace intent_explorer::device {

bool WidgetMatcher::matches(const gui::Widget& w) const {
    if (widget_type && w.widget_type != *widget_type) return false;
    if (resource_id && w.resource_id != resource_id) return false;
    if (content_description && w.content_description != content_description) return false;
    if (text && w.text != text) return false;
    return true;
}

std::string TransitionRule::describe() const {
    std::string out = "transition #" + std::to_string(index + 1) + " (from " + from + " on " +
                      std::string(gui::to_string(on));
    if (match.resource_id) out += " resource_id=" + *match.resource_id;
    if (match.content_description) out += " content_description=" + *match.content_description;
    if (match.text) out += " text=" + *match.text;
    return out + ")";
}

const ActivityModel* AppModel::find_activity(std::string_view name) const {
    for (const auto& a : activities) {
        if (a.name == name) return &a;
    }
    return nullptr;
}

std::vector<std::string> AppModel::internal_activity_names() const {
    std::vector<std::string> out;
    for (const auto& a : activities) {
        if (a.internal) out.push_back(a.name);
    }
    return out;
}

std::vector<std::string> AppModel::external_activity_names() const {
    std::vector<std::string> out;
    for (const auto& a : activities) {
        if (!a.internal) out.push_back(a.name);
    }
    return out;
}

Variables AppModel::initial_variables() const {
    Variables vars;
    for (const auto& v : variables) vars[v.name] = v.initial;
    return vars;
}

namespace {

thread_local std::string origin_prefix;

[[noreturn]] void parse_fail(const std::string& what, const YAML::Node& node) {
    const auto mark = node.Mark();
    throw ParseError(origin_prefix + what, mark.is_null() ? 0 : mark.line + 1, mark.is_null() ? 0 : mark.column + 1);
}

void check_keys(const YAML::Node& node, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!node.IsMap()) parse_fail(where + " must be a mapping", node);
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        bool ok = false;
        for (auto a : allowed) ok = ok || a == key;
        if (!ok) parse_fail("unknown key '" + key + "' in " + where, kv.first);
    }
}

std::string scalar(const YAML::Node& node, const std::string& what) {
    if (!node || !node.IsScalar()) parse_fail(what + " must be a scalar", node);
    return node.as<std::string>();
}

Value parse_value(const YAML::Node& node, const std::string& name) {
    if (node.IsSequence()) {
        StringList list;
        for (const auto& item : node) list.push_back(scalar(item, "list item of " + name));
        return list;
    }
    if (!node.IsScalar()) parse_fail("variable " + name + " must be a scalar or a list", node);
    const std::string raw = node.as<std::string>();
    if (node.Tag() == "!") return raw;  // quoted scalar
    if (raw == "true") return true;
    if (raw == "false") return false;
    try {
        std::size_t used = 0;
        const long long n = std::stoll(raw, &used);
        if (used == raw.size()) return static_cast<std::int64_t>(n);
    } catch (const std::exception&) {
    }
    return raw;
}

std::vector<gui::XmlElement> parse_template(const YAML::Node& node, const std::string& what) {
    const std::string text = scalar(node, what);
    try {
        return gui::parse_xml(text);
    } catch (const ParseError& e) {
        const auto mark = node.Mark();
        // Block scalars start on the line after the indicator.
        throw ParseError(origin_prefix + what + ": " + e.what(), mark.line + 1 + e.line(), e.column());
    }
}

Expression parse_expression(const YAML::Node& node, const std::string& what) {
    try {
        return Expression::parse(scalar(node, what));
    } catch (const ParseError& e) {
        parse_fail(what + ": " + e.what(), node);
    }
}

gui::ActionType parse_action(const YAML::Node& node) {
    const auto name = scalar(node, "transition 'on'");
    const auto type = gui::action_type_from_string(name);
    if (!type || *type == gui::ActionType::end_task) parse_fail("unknown device action '" + name + "'", node);
    return *type;
}

Navigation parse_nav(const YAML::Node& node) {
    const auto name = scalar(node, "transition 'nav'");
    if (name == "stay") return Navigation::stay;
    if (name == "push") return Navigation::push;
    if (name == "replace") return Navigation::replace;
    if (name == "pop") return Navigation::pop;
    if (name == "root") return Navigation::root;
    parse_fail("unknown navigation '" + name + "'", node);
}

class TemplateChecker {
public:
    TemplateChecker(const AppModel& model, std::string activity) : model_(model), activity_(std::move(activity)) {}

    void check(const std::vector<gui::XmlElement>& nodes, std::set<std::string> locals) {
        for (const auto& e : nodes) check_element(e, locals);
    }

private:
    const AppModel& model_;
    std::string activity_;

    const VariableDecl* var(std::string_view name) const {
        for (const auto& v : model_.variables) {
            if (v.name == name) return &v;
        }
        return nullptr;
    }

    [[noreturn]] void fail(const gui::XmlElement& e, const std::string& what) const {
        throw ValidationError(origin_prefix + "activity " + activity_ + " template line " + std::to_string(e.line) +
                              ": " + what);
    }

    void check_identifiers(const gui::XmlElement& e, const std::set<std::string>& ids,
                           const std::set<std::string>& locals) const {
        for (const auto& id : ids) {
            if (!locals.count(id) && !var(id)) fail(e, "undeclared variable " + id);
        }
    }

    void check_substitutions(const gui::XmlElement& e, const std::string& value,
                             const std::set<std::string>& locals) const {
        std::size_t pos = 0;
        while ((pos = value.find("${", pos)) != std::string::npos) {
            const auto close = value.find('}', pos);
            if (close == std::string::npos) fail(e, "unterminated ${ in '" + value + "'");
            check_identifiers(e, {value.substr(pos + 2, close - pos - 2)}, locals);
            pos = close + 1;
        }
    }

    Expression expr(const gui::XmlElement& e, const std::string& src) const {
        try {
            return Expression::parse(src);
        } catch (const ParseError& err) {
            fail(e, err.what());
        }
    }

    void check_element(const gui::XmlElement& e, std::set<std::string> locals) {
        if (e.name == "repeat") {
            const std::string* list = e.attribute("list");
            const std::string* as = e.attribute("as");
            if (!list || !as) fail(e, "<repeat> needs list and as attributes");
            const VariableDecl* decl = var(*list);
            if (!decl || kind_of(decl->initial) != ValueKind::list) fail(e, "repeat list " + *list + " is not a list variable");
            locals.insert(*as);
            locals.insert(e.attribute("index") ? *e.attribute("index") : "index");
            if (const std::string* where = e.attribute("where")) check_identifiers(e, expr(e, *where).identifiers(), locals);
            check(e.children, locals);
            return;
        }
        if (e.name != "node") fail(e, "unexpected element <" + e.name + ">");
        for (const auto& [key, value] : e.attributes) {
            if (key == "if") {
                check_identifiers(e, expr(e, value).identifiers(), locals);
            } else if (key == "bind") {
                const VariableDecl* decl = var(value);
                if (!decl || kind_of(decl->initial) != ValueKind::string) fail(e, "bind target " + value + " is not a string variable");
                const std::string* editable = e.attribute("editable");
                if (!editable || *editable != "true") fail(e, "bind is only allowed on editable nodes");
            } else if (key == "max-len") {
                try {
                    if (std::stoi(value) <= 0) throw std::invalid_argument("non-positive");
                } catch (const std::exception&) {
                    fail(e, "max-len must be a positive integer");
                }
            } else {
                check_substitutions(e, value, locals);
            }
        }
        check(e.children, locals);
    }
};

void validate(const AppModel& model) {
    auto fail = [](const std::string& what) { throw ValidationError(origin_prefix + what); };
    if (model.activities.empty()) fail("model declares no activities");
    std::set<std::string> names;
    for (const auto& a : model.activities) {
        if (!names.insert(a.name).second) fail("activity " + a.name + " declared twice");
    }
    if (!model.find_activity(model.initial_activity)) {
        fail("initial activity " + model.initial_activity + " is not declared");
    }
    if (!model.find_activity(model.initial_activity)->internal) fail("initial activity must be internal");
    std::set<std::string> var_names;
    for (const auto& v : model.variables) var_names.insert(v.name);

    for (const auto& a : model.activities) {
        TemplateChecker checker(model, a.name);
        checker.check(a.template_nodes, {});
        if (a.loading_nodes) checker.check(*a.loading_nodes, {});
    }
    for (const auto& t : model.transitions) {
        const std::string rule = t.describe();
        if (!model.find_activity(t.from)) fail(rule + ": source activity " + t.from + " is not declared");
        if (t.to && !model.find_activity(*t.to)) {
            fail(rule + ": target activity " + *t.to + " is not declared (external targets must be listed under external)");
        }
        if ((t.nav == Navigation::push || t.nav == Navigation::replace) && !t.to) {
            fail(rule + ": navigation needs a target activity");
        }
        if (t.nav == Navigation::pop && t.to) fail(rule + ": pop navigation takes no target");
        if (t.delay < 0) fail(rule + ": delay must be non-negative");
        if (gui::requires_target(t.on) == false && !t.match.empty()) fail(rule + ": " + std::string(gui::to_string(t.on)) + " has no target to match");
        if (t.guard) {
            for (const auto& id : t.guard->identifiers()) {
                if (!var_names.count(id)) fail(rule + ": guard references undeclared variable " + id);
            }
        }
        for (const auto& m : t.mutations) {
            if (!var_names.count(m.variable)) fail(rule + ": mutation of undeclared variable " + m.variable);
            for (const auto& id : m.value.identifiers()) {
                if (!var_names.count(id)) fail(rule + ": mutation references undeclared variable " + id);
            }
        }
    }
}

AppModel build(const YAML::Node& root) {
    AppModel model;
    check_keys(root, {"package", "app_name", "initial", "variables", "activities", "transitions", "external"},
               "model");
    model.package_name = scalar(root["package"], "package");
    model.app_name = root["app_name"] ? scalar(root["app_name"], "app_name") : model.package_name;
    model.initial_activity = scalar(root["initial"], "initial");

    if (const auto vars = root["variables"]) {
        if (!vars.IsMap()) parse_fail("variables must be a mapping", vars);
        for (const auto& kv : vars) {
            const auto name = kv.first.as<std::string>();
            model.variables.push_back({name, parse_value(kv.second, name)});
        }
    }

    const auto activities = root["activities"];
    if (!activities || !activities.IsSequence()) parse_fail("activities must be a list", root);
    for (const auto& node : activities) {
        check_keys(node, {"name", "template", "loading", "package"}, "activity");
        ActivityModel a;
        a.name = scalar(node["name"], "activity name");
        if (a.name.empty()) parse_fail("activity name must be non-empty", node);
        a.template_nodes = parse_template(node["template"], "activity " + a.name + " template");
        if (node["loading"]) a.loading_nodes = parse_template(node["loading"], "activity " + a.name + " loading");
        if (node["package"]) a.package = scalar(node["package"], "activity package");
        model.activities.push_back(std::move(a));
    }

    if (const auto external = root["external"]) {
        if (!external.IsSequence()) parse_fail("external must be a list", external);
        for (const auto& e : external) {
            const auto name = scalar(e, "external activity");
            bool found = false;
            for (auto& a : model.activities) {
                if (a.name == name) {
                    a.internal = false;
                    found = true;
                }
            }
            if (!found) throw ValidationError(origin_prefix + "external activity " + name + " is not declared");
        }
    }

    if (const auto transitions = root["transitions"]) {
        if (!transitions.IsSequence()) parse_fail("transitions must be a list", transitions);
        int index = 0;
        for (const auto& node : transitions) {
            check_keys(node, {"from", "on", "match", "guard", "to", "nav", "set", "delay", "crash"}, "transition");
            TransitionRule t;
            t.index = index++;
            t.line = static_cast<int>(node.Mark().line) + 1;
            t.from = scalar(node["from"], "transition 'from'");
            t.on = parse_action(node["on"]);
            if (const auto m = node["match"]) {
                check_keys(m, {"widget_type", "resource_id", "content_description", "text"}, "match");
                if (m["widget_type"]) t.match.widget_type = scalar(m["widget_type"], "match widget_type");
                if (m["resource_id"]) t.match.resource_id = scalar(m["resource_id"], "match resource_id");
                if (m["content_description"]) {
                    t.match.content_description = scalar(m["content_description"], "match content_description");
                }
                if (m["text"]) t.match.text = scalar(m["text"], "match text");
            }
            if (node["guard"]) t.guard = parse_expression(node["guard"], "guard");
            if (node["to"]) {
                t.to = scalar(node["to"], "transition 'to'");
                t.nav = Navigation::push;
            }
            if (node["nav"]) t.nav = parse_nav(node["nav"]);
            if (const auto set = node["set"]) {
                if (!set.IsSequence()) parse_fail("set must be a list of mutations", set);
                for (const auto& m : set) {
                    try {
                        t.mutations.push_back(Mutation::parse(scalar(m, "mutation")));
                    } catch (const ParseError& e) {
                        parse_fail(e.what(), m);
                    }
                }
            }
            if (node["delay"]) t.delay = node["delay"].as<int>();
            if (node["crash"]) t.crash = scalar(node["crash"], "crash message");
            model.transitions.push_back(std::move(t));
        }
    }
    validate(model);
    return model;
}

}  // namespace

AppModel load_app_model_from_string(std::string_view text, const std::string& origin) {
    origin_prefix = origin + ": ";
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        throw ParseError(origin_prefix + e.msg, e.mark.line + 1, e.mark.column + 1);
    }
    if (!root || root.IsNull()) throw ParseError(origin_prefix + "empty model file");
    try {
        return build(root);
    } catch (const YAML::Exception& e) {
        throw ParseError(origin_prefix + e.msg, e.mark.line + 1, e.mark.column + 1);
    }
}

AppModel load_app_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open app model " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_app_model_from_string(buf.str(), path.string());
}

}  // namespace intent_explorer::device
