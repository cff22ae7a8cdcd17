#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <cstdlib>
#include <fstream>

#include "intent_explorer/llm/backend.hpp"

namespace intent_explorer::llm {

nlohmann::ordered_json to_json(const CompletionRequest& request) {
    nlohmann::ordered_json j;
    j["model"] = request.role.model;
    j["temperature"] = request.role.temperature;
    j["seed"] = request.seed;
    j["messages"] = nlohmann::ordered_json::array();
    for (const auto& m : request.messages) j["messages"].push_back(to_json(m));
    if (!request.functions.empty()) {
        j["functions"] = nlohmann::ordered_json::array();
        for (const auto& f : request.functions) j["functions"].push_back(to_json(f));
    }
    return j;
}

ReplayBackend::ReplayBackend(const std::filesystem::path& transcript) {
    std::ifstream in(transcript, std::ios::binary);
    if (!in) throw Error("cannot open transcript " + transcript.string());
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            auto record = nlohmann::json::parse(line);
            if (record.contains("request")) records_.push_back(std::move(record));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(transcript.string() + ": " + e.what(), n, 1);
        }
    }
}

ReplayBackend::ReplayBackend(std::vector<nlohmann::json> records) {
    for (auto& r : records) {
        if (r.contains("request")) records_.push_back(std::move(r));
    }
}

CompletionResponse ReplayBackend::complete(const CompletionRequest& request) {
    std::lock_guard lock(mutex_);
    if (records_.empty()) throw UnscriptedPromptError("transcript exhausted after " + std::to_string(served_) + " requests");
    const nlohmann::json record = std::move(records_.front());
    records_.pop_front();
    ++served_;
    const nlohmann::json expected = nlohmann::json::parse(to_json(request).dump());
    if (record.at("request") != expected || record.value("role", "") != to_string(request.role.tag)) {
        throw GatewayError("transcript diverges at request " + std::to_string(served_));
    }
    if (record.contains("error")) throw TransportError(record["error"].get<std::string>());
    CompletionResponse out;
    out.message = message_from_json(record.at("response"));
    if (record.contains("usage")) {
        const auto& u = record["usage"];
        if (u.contains("prompt_tokens")) out.prompt_tokens = u["prompt_tokens"].get<std::size_t>();
        if (u.contains("completion_tokens")) out.completion_tokens = u["completion_tokens"].get<std::size_t>();
    }
    return out;
}

std::size_t ReplayBackend::remaining() const {
    std::lock_guard lock(mutex_);
    return records_.size();
}

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
    const auto scheme_end = options_.endpoint.find("://");
    if (scheme_end == std::string::npos) throw ValidationError("endpoint must be an absolute URL: " + options_.endpoint);
    const auto path_start = options_.endpoint.find('/', scheme_end + 3);
    scheme_host_port_ = options_.endpoint.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : options_.endpoint.substr(path_start);
    if (const char* key = std::getenv(options_.api_key_env.c_str())) api_key_ = key;
}

nlohmann::json HttpBackend::build_body(const CompletionRequest& request) const {
    nlohmann::json body;
    body["model"] = request.role.model;
    body["temperature"] = request.role.temperature;
    body["seed"] = request.seed;
    body["messages"] = nlohmann::json::array();
    for (const auto& m : request.messages) {
        nlohmann::json msg;
        // Function results travel as user turns; the agents never emit tool-call ids.
        msg["role"] = m.role == MessageRole::function ? "user" : std::string(to_string(m.role));
        msg["content"] = m.content;
        if (m.function_call) {
            msg["content"] = m.content.empty() ? m.function_call->name + " " + m.function_call->arguments.dump() : m.content;
        }
        body["messages"].push_back(msg);
    }
    if (!request.functions.empty()) {
        body["tools"] = nlohmann::json::array();
        for (const auto& f : request.functions) {
            body["tools"].push_back({{"type", "function"}, {"function", nlohmann::json::parse(to_json(f).dump())}});
        }
        body["tool_choice"] = "required";
    }
    return body;
}

CompletionResponse HttpBackend::parse_response(const nlohmann::json& body) {
    if (!body.contains("choices") || body["choices"].empty()) throw TransportError("response has no choices");
    const auto& message = body["choices"][0].at("message");
    CompletionResponse out;
    out.message.role = MessageRole::assistant;
    if (message.contains("content") && message["content"].is_string()) out.message.content = message["content"];

    const nlohmann::json* fn = nullptr;
    if (message.contains("tool_calls") && message["tool_calls"].is_array() && !message["tool_calls"].empty()) {
        fn = &message["tool_calls"][0].at("function");
    } else if (message.contains("function_call") && message["function_call"].is_object()) {
        fn = &message["function_call"];
    }
    if (fn) {
        FunctionCall call;
        call.name = fn->value("name", "");
        const auto& args = (*fn).contains("arguments") ? (*fn)["arguments"] : nlohmann::json::object();
        if (args.is_string()) {
            // Malformed JSON is kept as a string so the gateway's validation rejects it and retries.
            try {
                call.arguments = nlohmann::json::parse(args.get<std::string>());
            } catch (const nlohmann::json::parse_error&) {
                call.arguments = args;
            }
        } else {
            call.arguments = args;
        }
        out.message.function_call = std::move(call);
    }
    if (body.contains("usage")) {
        const auto& u = body["usage"];
        if (u.contains("prompt_tokens")) out.prompt_tokens = u["prompt_tokens"].get<std::size_t>();
        if (u.contains("completion_tokens")) out.completion_tokens = u["completion_tokens"].get<std::size_t>();
    }
    return out;
}

CompletionResponse HttpBackend::complete(const CompletionRequest& request) {
    if (api_key_.empty()) throw GatewayError("environment variable " + options_.api_key_env + " is not set");
    httplib::Client client(scheme_host_port_);
    client.set_read_timeout(options_.timeout_seconds, 0);
    client.set_connection_timeout(30, 0);
    client.set_bearer_token_auth(api_key_);
    const auto result = client.Post(path_, build_body(request).dump(), "application/json");
    if (!result) throw TransportError("request to " + scheme_host_port_ + " failed: " + httplib::to_string(result.error()));
    if (result->status == 429 || result->status >= 500) {
        throw TransportError("HTTP " + std::to_string(result->status) + " from " + scheme_host_port_);
    }
    if (result->status != 200) {
        throw GatewayError("HTTP " + std::to_string(result->status) + " from " + scheme_host_port_ + ": " +
                           result->body.substr(0, 500));
    }
    try {
        return parse_response(nlohmann::json::parse(result->body));
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("unreadable response body: ") + e.what());
    }
}

}  // namespace intent_explorer::llm
