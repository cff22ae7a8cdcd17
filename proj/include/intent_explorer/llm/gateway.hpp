#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>

#include "intent_explorer/llm/backend.hpp"

namespace intent_explorer::llm {

struct RoleUsage {
    std::size_t requests = 0;
    std::size_t retries = 0;
    std::size_t prompt_chars = 0;
    std::size_t response_chars = 0;
    std::size_t prompt_tokens = 0;      // only when the backend reports them
    std::size_t completion_tokens = 0;
    std::size_t dropped_messages = 0;   // removed by the context policy
};

using TranscriptSink = std::function<void(const nlohmann::ordered_json& record)>;

// Estimated prompt size: one token per four characters, rounded up, plus a
// small per-message overhead.
std::size_t estimate_tokens(const std::vector<ChatMessage>& messages, const std::vector<FunctionSchema>& functions);

// Drops the oldest assistant/user pairs until the estimate fits `budget`.
// System messages, the first user message and the final message are kept.
// Returns the number of messages removed; throws ContextOverflowError when
// only protected messages remain and they still do not fit.
std::size_t fit_context(std::vector<ChatMessage>& messages, const std::vector<FunctionSchema>& functions,
                        std::size_t budget);

class Gateway {
public:
    Gateway(std::shared_ptr<Backend> backend, std::map<RoleTag, ModelRole> roles, int max_retries = 3);

    // With functions, the reply must carry a call that passes its schema's
    // check; other replies are retried up to max_retries times. Transport
    // failures are retried the same way.
    ChatMessage complete(std::vector<ChatMessage> messages, const std::vector<FunctionSchema>& functions, RoleTag role,
                         std::uint64_t seed = 0);

    void set_transcript_sink(TranscriptSink sink);
    // Seed sent with requests made with seed 0.
    void set_default_seed(std::uint64_t seed) { default_seed_ = seed; }
    void set_clock(std::function<std::int64_t()> clock);

    const ModelRole& role(RoleTag tag) const;
    std::map<RoleTag, RoleUsage> usage() const;
    int max_retries() const noexcept { return max_retries_; }

private:
    std::shared_ptr<Backend> backend_;
    std::map<RoleTag, ModelRole> roles_;
    int max_retries_;
    TranscriptSink sink_;
    std::function<std::int64_t()> clock_;
    std::uint64_t default_seed_ = 0;
    std::map<RoleTag, RoleUsage> usage_;
    mutable std::mutex mutex_;

    void record(RoleTag role, const CompletionRequest& request, const CompletionResponse* response,
                const std::string* error, int attempt);
};

}  // namespace intent_explorer::llm
