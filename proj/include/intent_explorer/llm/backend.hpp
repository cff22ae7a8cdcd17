#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "intent_explorer/llm/chat.hpp"

namespace intent_explorer::llm {

struct CompletionRequest {
    std::vector<ChatMessage> messages;
    std::vector<FunctionSchema> functions;
    ModelRole role;
    std::uint64_t seed = 0;
};

nlohmann::ordered_json to_json(const CompletionRequest& request);

struct CompletionResponse {
    ChatMessage message;
    std::optional<std::size_t> prompt_tokens;  // as reported by the backend
    std::optional<std::size_t> completion_tokens;
};

// Retryable failure talking to a backend.
class TransportError : public GatewayError {
public:
    using GatewayError::GatewayError;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual CompletionResponse complete(const CompletionRequest& request) = 0;
};

// Rule-driven stand-in for a model. Rules are tried in file order; the first
// one whose conditions hold and which still has fires left produces the
// response. The schema is documented in docs/scripted-rules.md.
class ScriptedBackend final : public Backend {
public:
    static ScriptedBackend from_file(const std::filesystem::path& path);
    static ScriptedBackend from_json(const nlohmann::json& document, const std::string& origin = "<rules>");

    ScriptedBackend(ScriptedBackend&&) noexcept;
    ~ScriptedBackend() override;

    CompletionResponse complete(const CompletionRequest& request) override;

    // Fires per rule name, in rule order.
    std::vector<std::pair<std::string, int>> fire_counts() const;

private:
    struct Rule;
    ScriptedBackend();

    std::vector<Rule> rules_;
    mutable std::mutex mutex_;
};

// Answers from a recorded transcript, in order. Each request must equal the
// recorded one, so a replay either reproduces the original run or stops at
// the first divergence. Records without a request (device events) are skipped.
class ReplayBackend final : public Backend {
public:
    explicit ReplayBackend(const std::filesystem::path& transcript);
    explicit ReplayBackend(std::vector<nlohmann::json> records);

    CompletionResponse complete(const CompletionRequest& request) override;
    std::size_t remaining() const;

private:
    std::deque<nlohmann::json> records_;
    std::size_t served_ = 0;
    mutable std::mutex mutex_;
};

struct HttpBackendOptions {
    std::string endpoint;  // e.g. https://api.example.com/v1/chat/completions
    std::string api_key_env = "INTENT_EXPLORER_API_KEY";
    int timeout_seconds = 120;
};

// Chat-completions over HTTPS.
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(HttpBackendOptions options);
    CompletionResponse complete(const CompletionRequest& request) override;

    nlohmann::json build_body(const CompletionRequest& request) const;
    static CompletionResponse parse_response(const nlohmann::json& body);

private:
    HttpBackendOptions options_;
    std::string scheme_host_port_;
    std::string path_;
    std::string api_key_;
};

// Locates the serialized GUI state (the object starting with "page_name")
// embedded in a prompt.
std::optional<nlohmann::json> find_embedded_state(const std::string& text);

// First widget ID in `state` whose properties equal every key of `query`
// (widget_type, resource_id, content_description, text; `text_contains` for
// substrings; `nth` selects a later match). -1 when nothing matches.
int resolve_widget(const nlohmann::json& state, const nlohmann::json& query);

}  // namespace intent_explorer::llm
