#include "intent_explorer/llm/chat.hpp"

#include <algorithm>
#include <limits>

namespace intent_explorer::llm {

std::string_view to_string(MessageRole role) {
    switch (role) {
        case MessageRole::system: return "system";
        case MessageRole::user: return "user";
        case MessageRole::assistant: return "assistant";
        case MessageRole::function: return "function";
    }
    return "user";
}

MessageRole message_role_from_string(std::string_view name) {
    for (auto r : {MessageRole::system, MessageRole::user, MessageRole::assistant, MessageRole::function}) {
        if (to_string(r) == name) return r;
    }
    throw ParseError("unknown message role '" + std::string(name) + "'");
}

nlohmann::ordered_json to_json(const ChatMessage& message) {
    nlohmann::ordered_json j;
    j["role"] = to_string(message.role);
    j["content"] = message.content;
    if (message.function_call) {
        j["function_call"] = {{"name", message.function_call->name}, {"arguments", message.function_call->arguments}};
    }
    return j;
}

ChatMessage message_from_json(const nlohmann::json& j) {
    ChatMessage m;
    m.role = message_role_from_string(j.at("role").get<std::string>());
    m.content = j.value("content", "");
    if (j.contains("function_call")) {
        m.function_call = FunctionCall{j["function_call"].at("name").get<std::string>(),
                                       j["function_call"].value("arguments", nlohmann::json::object())};
    }
    return m;
}

std::optional<std::string> FunctionSchema::check(const FunctionCall& call) const {
    if (call.name != name) return "function " + call.name + " does not match " + name;
    if (!call.arguments.is_object()) return "arguments of " + name + " must be an object";
    for (const auto& [key, value] : call.arguments.items()) {
        const bool known = std::any_of(parameters.begin(), parameters.end(), [&](const ParamSpec& p) { return p.name == key; });
        if (!known) return "unexpected argument " + key + " for " + name;
    }
    for (const auto& p : parameters) {
        if (!call.arguments.contains(p.name)) {
            if (p.required) return "missing argument " + p.name + " for " + name;
            continue;
        }
        const auto& v = call.arguments[p.name];
        switch (p.kind) {
            case ParamKind::integer: {
                if (!v.is_number_integer()) return p.name + " must be an integer";
                const auto n = v.get<long long>();
                if (!p.allowed_integers.empty() &&
                    (n < std::numeric_limits<int>::min() || n > std::numeric_limits<int>::max() ||
                     !p.allowed_integers.count(static_cast<int>(n)))) {
                    return p.name + " " + std::to_string(n) + " is not one of the allowed values";
                }
                break;
            }
            case ParamKind::string:
                if (!v.is_string()) return p.name + " must be a string";
                break;
            case ParamKind::enumeration:
                if (!v.is_string() ||
                    std::find(p.allowed_values.begin(), p.allowed_values.end(), v.get<std::string>()) == p.allowed_values.end()) {
                    return p.name + " must be one of the allowed values";
                }
                break;
        }
    }
    return std::nullopt;
}

// JSON-schema shape used by chat-completion tool definitions.
nlohmann::ordered_json to_json(const FunctionSchema& schema) {
    nlohmann::ordered_json props = nlohmann::ordered_json::object();
    nlohmann::ordered_json required = nlohmann::ordered_json::array();
    for (const auto& p : schema.parameters) {
        nlohmann::ordered_json prop;
        switch (p.kind) {
            case ParamKind::integer:
                prop["type"] = "integer";
                if (!p.allowed_integers.empty()) prop["enum"] = p.allowed_integers;
                break;
            case ParamKind::string: prop["type"] = "string"; break;
            case ParamKind::enumeration:
                prop["type"] = "string";
                prop["enum"] = p.allowed_values;
                break;
        }
        prop["description"] = p.description;
        props[p.name] = prop;
        if (p.required) required.push_back(p.name);
    }
    nlohmann::ordered_json j;
    j["name"] = schema.name;
    j["description"] = schema.description;
    j["parameters"] = {{"type", "object"}, {"properties", props}, {"required", required}};
    return j;
}

std::string_view to_string(RoleTag tag) {
    switch (tag) {
        case RoleTag::fast: return "fast";
        case RoleTag::fast_short: return "fast_short";
        case RoleTag::strong: return "strong";
    }
    return "fast";
}

std::optional<RoleTag> role_tag_from_string(std::string_view name) {
    for (auto t : {RoleTag::fast, RoleTag::fast_short, RoleTag::strong}) {
        if (to_string(t) == name) return t;
    }
    return std::nullopt;
}

}  // namespace intent_explorer::llm
