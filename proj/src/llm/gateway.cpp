#include "intent_explorer/llm/gateway.hpp"

#include <chrono>

namespace intent_explorer::llm {

namespace {

constexpr std::size_t kMessageOverhead = 4;

std::size_t chars_to_tokens(std::size_t chars) { return (chars + 3) / 4; }

std::size_t message_tokens(const ChatMessage& m) {
    std::size_t chars = m.content.size();
    if (m.function_call) chars += m.function_call->name.size() + m.function_call->arguments.dump().size();
    return chars_to_tokens(chars) + kMessageOverhead;
}

std::size_t prompt_chars(const std::vector<ChatMessage>& messages) {
    std::size_t n = 0;
    for (const auto& m : messages) n += m.content.size();
    return n;
}

}  // namespace

std::size_t estimate_tokens(const std::vector<ChatMessage>& messages, const std::vector<FunctionSchema>& functions) {
    std::size_t total = 0;
    for (const auto& m : messages) total += message_tokens(m);
    for (const auto& f : functions) total += chars_to_tokens(to_json(f).dump().size());
    return total;
}

std::size_t fit_context(std::vector<ChatMessage>& messages, const std::vector<FunctionSchema>& functions,
                        std::size_t budget) {
    std::size_t dropped = 0;
    while (estimate_tokens(messages, functions) > budget) {
        std::optional<std::size_t> first_user;
        for (std::size_t i = 0; i < messages.size(); ++i) {
            if (messages[i].role == MessageRole::user) {
                first_user = i;
                break;
            }
        }
        auto is_protected = [&](std::size_t i) {
            return messages[i].role == MessageRole::system || i == first_user || i + 1 == messages.size();
        };
        std::optional<std::size_t> victim;
        for (std::size_t i = 0; i < messages.size(); ++i) {
            if (!is_protected(i)) {
                victim = i;
                break;
            }
        }
        if (!victim) {
            throw ContextOverflowError("prompt needs " + std::to_string(estimate_tokens(messages, functions)) +
                                       " tokens, budget is " + std::to_string(budget));
        }
        const std::size_t i = *victim;
        // An assistant turn goes together with the user turn that answers it.
        const bool pair = messages[i].role == MessageRole::assistant && i + 1 < messages.size() &&
                          messages[i + 1].role != MessageRole::assistant && !is_protected(i + 1);
        messages.erase(messages.begin() + static_cast<std::ptrdiff_t>(i),
                       messages.begin() + static_cast<std::ptrdiff_t>(i + (pair ? 2 : 1)));
        dropped += pair ? 2 : 1;
    }
    return dropped;
}

Gateway::Gateway(std::shared_ptr<Backend> backend, std::map<RoleTag, ModelRole> roles, int max_retries)
    : backend_(std::move(backend)), roles_(std::move(roles)), max_retries_(max_retries) {
    if (!backend_) throw ValidationError("gateway needs a backend");
    if (max_retries_ < 0) throw ValidationError("max_retries must be non-negative");
    for (auto tag : {RoleTag::fast, RoleTag::fast_short, RoleTag::strong}) {
        auto& r = roles_[tag];
        r.tag = tag;
    }
}

void Gateway::set_transcript_sink(TranscriptSink sink) {
    std::lock_guard lock(mutex_);
    sink_ = std::move(sink);
}

void Gateway::set_clock(std::function<std::int64_t()> clock) {
    std::lock_guard lock(mutex_);
    clock_ = std::move(clock);
}

const ModelRole& Gateway::role(RoleTag tag) const { return roles_.at(tag); }

std::map<RoleTag, RoleUsage> Gateway::usage() const {
    std::lock_guard lock(mutex_);
    return usage_;
}

void Gateway::record(RoleTag role, const CompletionRequest& request, const CompletionResponse* response,
                     const std::string* error, int attempt) {
    std::lock_guard lock(mutex_);
    auto& u = usage_[role];
    ++u.requests;
    if (attempt > 0) ++u.retries;
    u.prompt_chars += prompt_chars(request.messages);
    if (response) {
        u.response_chars += response->message.content.size();
        if (response->message.function_call) u.response_chars += response->message.function_call->arguments.dump().size();
        u.prompt_tokens += response->prompt_tokens.value_or(0);
        u.completion_tokens += response->completion_tokens.value_or(0);
    }
    if (!sink_) return;
    const std::int64_t now =
        clock_ ? clock_()
               : std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
                     .count();
    nlohmann::ordered_json rec;
    rec["timestamp"] = now;
    rec["role"] = to_string(role);
    rec["attempt"] = attempt;
    rec["request"] = to_json(request);
    if (response) {
        rec["response"] = to_json(response->message);
        if (response->prompt_tokens || response->completion_tokens) {
            rec["usage"] = nlohmann::ordered_json::object();
            if (response->prompt_tokens) rec["usage"]["prompt_tokens"] = *response->prompt_tokens;
            if (response->completion_tokens) rec["usage"]["completion_tokens"] = *response->completion_tokens;
        }
    }
    if (error) rec["error"] = *error;
    sink_(rec);
}

ChatMessage Gateway::complete(std::vector<ChatMessage> messages, const std::vector<FunctionSchema>& functions,
                              RoleTag role, std::uint64_t seed) {
    std::set<std::string> names;
    for (const auto& f : functions) {
        if (!names.insert(f.name).second) throw ValidationError("duplicate function " + f.name);
    }
    CompletionRequest request;
    request.role = roles_.at(role);
    request.functions = functions;
    request.seed = seed ? seed : default_seed_;
    const std::size_t dropped = fit_context(messages, functions, request.role.max_context_tokens);
    if (dropped > 0) {
        std::lock_guard lock(mutex_);
        usage_[role].dropped_messages += dropped;
    }
    request.messages = std::move(messages);

    std::string last_problem;
    for (int attempt = 0; attempt <= max_retries_; ++attempt) {
        CompletionResponse response;
        try {
            response = backend_->complete(request);
        } catch (const TransportError& e) {
            last_problem = e.what();
            record(role, request, nullptr, &last_problem, attempt);
            continue;
        }
        record(role, request, &response, nullptr, attempt);
        if (functions.empty()) {
            response.message.function_call.reset();
            return response.message;
        }
        const auto& call = response.message.function_call;
        if (!call) {
            last_problem = "reply has no function call";
            continue;
        }
        const FunctionSchema* schema = nullptr;
        for (const auto& f : functions) {
            if (f.name == call->name) schema = &f;
        }
        if (!schema) {
            last_problem = "reply calls unknown function " + call->name;
            continue;
        }
        if (auto problem = schema->check(*call)) {
            last_problem = *problem;
            continue;
        }
        return response.message;
    }
    throw GatewayError(std::string(to_string(role)) + " request failed after " + std::to_string(max_retries_) +
                       " retries: " + last_problem);
}

}  // namespace intent_explorer::llm
