#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "intent_explorer/error.hpp"

namespace intent_explorer::llm {

enum class MessageRole { system, user, assistant, function };

std::string_view to_string(MessageRole role);
MessageRole message_role_from_string(std::string_view name);

struct FunctionCall {
    std::string name;
    nlohmann::json arguments = nlohmann::json::object();

    bool operator==(const FunctionCall&) const = default;
};

struct ChatMessage {
    MessageRole role = MessageRole::user;
    std::string content;
    std::optional<FunctionCall> function_call;  // assistant only

    static ChatMessage system(std::string content) { return {MessageRole::system, std::move(content), {}}; }
    static ChatMessage user(std::string content) { return {MessageRole::user, std::move(content), {}}; }
    static ChatMessage assistant(std::string content) { return {MessageRole::assistant, std::move(content), {}}; }

    bool operator==(const ChatMessage&) const = default;
};

nlohmann::ordered_json to_json(const ChatMessage& message);
ChatMessage message_from_json(const nlohmann::json& j);

enum class ParamKind { integer, string, enumeration };

struct ParamSpec {
    std::string name;
    std::string description;
    ParamKind kind = ParamKind::string;
    std::set<int> allowed_integers;        // empty: any integer
    std::vector<std::string> allowed_values;  // enumeration members
    bool required = true;
};

struct FunctionSchema {
    std::string name;
    std::string description;
    std::vector<ParamSpec> parameters;

    // Empty when `call` names this function with well-typed, in-range
    // arguments; otherwise a description of the first problem.
    std::optional<std::string> check(const FunctionCall& call) const;
};

nlohmann::ordered_json to_json(const FunctionSchema& schema);

enum class RoleTag { fast, fast_short, strong };

std::string_view to_string(RoleTag tag);
std::optional<RoleTag> role_tag_from_string(std::string_view name);

struct ModelRole {
    RoleTag tag = RoleTag::fast;
    std::string model;
    std::size_t max_context_tokens = 16000;
    double temperature = 0.0;
};

class GatewayError : public Error {
public:
    using Error::Error;
};

class ContextOverflowError : public GatewayError {
public:
    using GatewayError::GatewayError;
};

// The scripted backend has no rule for this request.
class UnscriptedPromptError : public GatewayError {
public:
    using GatewayError::GatewayError;
};

}  // namespace intent_explorer::llm
