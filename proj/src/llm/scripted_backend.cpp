#include <fstream>
#include <sstream>

#include "intent_explorer/llm/backend.hpp"

namespace intent_explorer::llm {

namespace {

enum class Scope { any, first, last, system };

Scope scope_from_string(const std::string& name, const std::string& where) {
    if (name == "any") return Scope::any;
    if (name == "first") return Scope::first;
    if (name == "last") return Scope::last;
    if (name == "system") return Scope::system;
    throw ParseError(where + ": unknown scope '" + name + "'");
}

std::string scope_text(const std::vector<ChatMessage>& messages, Scope scope) {
    std::string out;
    switch (scope) {
        case Scope::any:
            for (const auto& m : messages) out += m.content + "\n";
            break;
        case Scope::first:
            for (const auto& m : messages) {
                if (m.role == MessageRole::user) return m.content;
            }
            break;
        case Scope::last:
            if (!messages.empty()) out = messages.back().content;
            break;
        case Scope::system:
            for (const auto& m : messages) {
                if (m.role == MessageRole::system) out += m.content + "\n";
            }
            break;
    }
    return out;
}

std::string substitute_captures(const std::string& text, const std::smatch* captures) {
    if (!captures) return text;
    std::string out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '$' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
            const std::size_t group = static_cast<std::size_t>(text[i + 1] - '0');
            if (group < captures->size()) out += (*captures)[group].str();
            ++i;
        } else {
            out += text[i];
        }
    }
    return out;
}

nlohmann::json expand_arguments(const nlohmann::json& value, const std::optional<nlohmann::json>& state,
                                const std::smatch* captures) {
    if (value.is_object()) {
        if (value.size() == 1 && value.contains("$widget")) {
            return state ? resolve_widget(*state, value["$widget"]) : -1;
        }
        nlohmann::json out = nlohmann::json::object();
        for (const auto& [k, v] : value.items()) out[k] = expand_arguments(v, state, captures);
        return out;
    }
    if (value.is_array()) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& v : value) out.push_back(expand_arguments(v, state, captures));
        return out;
    }
    if (value.is_string()) return substitute_captures(value.get<std::string>(), captures);
    return value;
}

void collect_widgets(const nlohmann::json& node, std::vector<const nlohmann::json*>& out) {
    if (!node.contains("children")) return;
    for (const auto& child : node["children"]) {
        out.push_back(&child);
        collect_widgets(child, out);
    }
}

}  // namespace

struct ScriptedBackend::Rule {
    std::string name;
    std::optional<RoleTag> role;
    std::optional<bool> with_functions;
    std::vector<std::pair<Scope, std::string>> contains;
    std::vector<std::pair<Scope, std::string>> absent;
    std::optional<std::regex> regex;
    Scope regex_scope = Scope::last;
    std::optional<int> times;
    std::vector<nlohmann::json> responses;
    bool cycle = false;
    int fired = 0;
};

ScriptedBackend::ScriptedBackend() = default;
ScriptedBackend::ScriptedBackend(ScriptedBackend&& other) noexcept : rules_(std::move(other.rules_)) {}
ScriptedBackend::~ScriptedBackend() = default;

ScriptedBackend ScriptedBackend::from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open rules file " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return from_json(doc, path.string());
}

ScriptedBackend ScriptedBackend::from_json(const nlohmann::json& document, const std::string& origin) {
    static const std::set<std::string> kRuleKeys{"name",  "role",   "functions", "any",   "first",    "last",
                                                 "system", "absent", "regex",    "regex_scope", "times",
                                                 "response", "responses", "cycle", "comment"};
    if (!document.is_object() || !document.contains("rules") || !document["rules"].is_array()) {
        throw ParseError(origin + ": expected an object with a \"rules\" array");
    }
    ScriptedBackend backend;
    int index = 0;
    for (const auto& r : document["rules"]) {
        ++index;
        const std::string where = origin + ": rule #" + std::to_string(index);
        if (!r.is_object()) throw ParseError(where + " must be an object");
        for (const auto& [key, _] : r.items()) {
            if (!kRuleKeys.count(key)) throw ParseError(where + ": unknown key '" + key + "'");
        }
        Rule rule;
        rule.name = r.value("name", "rule" + std::to_string(index));
        if (r.contains("role")) {
            rule.role = role_tag_from_string(r["role"].get<std::string>());
            if (!rule.role) throw ParseError(where + ": unknown role " + r["role"].dump());
        }
        if (r.contains("functions")) rule.with_functions = r["functions"].get<bool>();
        for (const char* scope : {"any", "first", "last", "system"}) {
            if (!r.contains(scope)) continue;
            for (const auto& s : r[scope]) rule.contains.emplace_back(scope_from_string(scope, where), s.get<std::string>());
        }
        if (r.contains("absent")) {
            for (const auto& s : r["absent"]) rule.absent.emplace_back(Scope::any, s.get<std::string>());
        }
        if (r.contains("regex")) {
            try {
                rule.regex.emplace(r["regex"].get<std::string>());
            } catch (const std::regex_error& e) {
                throw ParseError(where + ": bad regex: " + e.what());
            }
            rule.regex_scope = scope_from_string(r.value("regex_scope", "last"), where);
        }
        if (r.contains("times")) rule.times = r["times"].get<int>();
        rule.cycle = r.value("cycle", false);
        if (r.contains("responses")) {
            for (const auto& resp : r["responses"]) rule.responses.push_back(resp);
        } else if (r.contains("response")) {
            rule.responses.push_back(r["response"]);
        }
        if (rule.responses.empty()) throw ParseError(where + ": needs response or responses");
        for (const auto& resp : rule.responses) {
            if (!resp.is_string() && !(resp.is_object() && (resp.contains("content") || resp.contains("function")))) {
                throw ParseError(where + ": a response is a string, {\"content\": ...} or {\"function\": ..., \"arguments\": ...}");
            }
        }
        backend.rules_.push_back(std::move(rule));
    }
    return backend;
}

CompletionResponse ScriptedBackend::complete(const CompletionRequest& request) {
    std::lock_guard lock(mutex_);
    for (auto& rule : rules_) {
        if (rule.role && *rule.role != request.role.tag) continue;
        if (rule.with_functions && *rule.with_functions != !request.functions.empty()) continue;
        if (rule.times && rule.fired >= *rule.times) continue;
        if (!rule.cycle && rule.responses.size() > 1 && rule.fired >= static_cast<int>(rule.responses.size())) continue;

        bool ok = true;
        for (const auto& [scope, needle] : rule.contains) {
            if (scope_text(request.messages, scope).find(needle) == std::string::npos) {
                ok = false;
                break;
            }
        }
        for (const auto& [scope, needle] : rule.absent) {
            if (ok && scope_text(request.messages, scope).find(needle) != std::string::npos) ok = false;
        }
        if (!ok) continue;

        std::smatch captures;
        std::string haystack;
        if (rule.regex) {
            haystack = scope_text(request.messages, rule.regex_scope);
            if (!std::regex_search(haystack, captures, *rule.regex)) continue;
        }
        const std::smatch* caps = rule.regex ? &captures : nullptr;

        const auto& resp = rule.responses[static_cast<std::size_t>(rule.fired) % rule.responses.size()];
        ++rule.fired;

        CompletionResponse out;
        out.message.role = MessageRole::assistant;
        if (resp.is_string()) {
            out.message.content = substitute_captures(resp.get<std::string>(), caps);
        } else {
            out.message.content = substitute_captures(resp.value("content", ""), caps);
            if (resp.contains("function")) {
                const std::optional<nlohmann::json> state =
                    request.messages.empty() ? std::nullopt : find_embedded_state(request.messages.back().content);
                out.message.function_call = FunctionCall{
                    resp["function"].get<std::string>(),
                    expand_arguments(resp.value("arguments", nlohmann::json::object()), state, caps)};
            }
        }
        return out;
    }
    std::string last = request.messages.empty() ? "" : request.messages.back().content;
    if (last.size() > 200) last = last.substr(0, 200) + "...";
    throw UnscriptedPromptError("no scripted rule matches the " + std::string(to_string(request.role.tag)) +
                                " request ending with: " + last);
}

std::vector<std::pair<std::string, int>> ScriptedBackend::fire_counts() const {
    std::lock_guard lock(mutex_);
    std::vector<std::pair<std::string, int>> out;
    for (const auto& r : rules_) out.emplace_back(r.name, r.fired);
    return out;
}

std::optional<nlohmann::json> find_embedded_state(const std::string& text) {
    const auto key = text.find("\"page_name\"");
    if (key == std::string::npos) return std::nullopt;
    const auto start = text.rfind('{', key);
    if (start == std::string::npos) return std::nullopt;
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) {
            try {
                return nlohmann::json::parse(text.begin() + static_cast<std::ptrdiff_t>(start),
                                             text.begin() + static_cast<std::ptrdiff_t>(i + 1));
            } catch (const nlohmann::json::parse_error&) {
                return std::nullopt;
            }
        }
    }
    return std::nullopt;
}

int resolve_widget(const nlohmann::json& state, const nlohmann::json& query) {
    std::vector<const nlohmann::json*> widgets;
    collect_widgets(state, widgets);
    int skip = query.value("nth", 0);
    for (const auto* w : widgets) {
        bool ok = true;
        for (const auto& [key, expected] : query.items()) {
            if (key == "nth") continue;
            if (key == "text_contains") {
                ok = w->contains("text") && (*w)["text"].get<std::string>().find(expected.get<std::string>()) != std::string::npos;
            } else {
                ok = w->contains(key) && (*w)[key] == expected;
            }
            if (!ok) break;
        }
        if (ok && skip-- == 0) return (*w)["ID"].get<int>();
    }
    return -1;
}

}  // namespace intent_explorer::llm
