#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <variant>

#include "intent_explorer/llm/gateway.hpp"
#include "intent_explorer/memory/records.hpp"

namespace intent_explorer::memory {

// Per-task event log.
class WorkingMemory {
public:
    struct ActionEvent {
        gui::Action action;
        std::string description;  // stringified form shown to the Actor
    };
    using Event = std::variant<ActionEvent, Observation, Critique>;

    void register_task(Task task);
    void add_action(gui::Action action, std::string description);
    void add_observation(Observation observation);
    void add_critique(Critique critique);

    const std::optional<Task>& task() const noexcept { return task_; }
    const std::vector<Event>& history() const noexcept { return events_; }
    std::size_t action_count() const noexcept;
    const Critique* latest_critique() const noexcept;

private:
    std::optional<Task> task_;
    std::vector<Event> events_;
};

// Long-term task memory keyed by the embedding of the start state.
class TaskStore {
public:
    explicit TaskStore(std::shared_ptr<const Embedder> embedder);

    // Fills in the embedding when absent and flags duplicate descriptions.
    const TaskRecord& put(TaskRecord record);

    // Top `m` records by cosine similarity to embed(state_key), newest first
    // among equal scores.
    std::vector<TaskRecord> retrieve(const std::string& state_key, std::size_t m) const;
    std::vector<TaskRecord> recent(std::size_t n) const;

    const std::vector<TaskRecord>& records() const noexcept { return records_; }
    std::size_t unique_descriptions() const;

private:
    std::shared_ptr<const Embedder> embedder_;
    std::vector<TaskRecord> records_;
};

// Spatial memory: observations bucketed by widget signature.
class WidgetStore {
public:
    const WidgetObservationEntry& put(WidgetObservationEntry entry);

    const std::vector<WidgetObservationEntry>& bucket(const gui::WidgetSignature& signature) const;
    std::size_t count(const gui::WidgetSignature& signature) const { return bucket(signature).size(); }

    // Up to `n` entries ranked by cosine similarity of their state embedding
    // to `query`, higher sequence first among equal scores.
    std::vector<WidgetObservationEntry> select(const gui::WidgetSignature& signature, const EmbeddingVector& query,
                                               std::size_t n) const;

    const std::map<gui::WidgetSignature, std::vector<WidgetObservationEntry>>& buckets() const noexcept {
        return buckets_;
    }
    std::size_t size() const noexcept;

private:
    std::map<gui::WidgetSignature, std::vector<WidgetObservationEntry>> buckets_;
};

struct WidgetKnowledge {
    std::optional<std::string> summary;
    int num_prev_actions = 0;
    std::vector<WidgetObservationEntry> selected;  // entries placed in the prompt
};

// Summarizes a widget's role from its most relevant past observations.
class WidgetRetriever {
public:
    WidgetRetriever(const WidgetStore& store, std::shared_ptr<const Embedder> embedder, llm::Gateway* gateway);

    WidgetKnowledge knowledge(const gui::WidgetSignature& signature, const std::string& state_key, std::size_t n);

    // Summaries are cached per (signature, state key) until the next task.
    void clear_cache() { cache_.clear(); }
    std::size_t model_calls() const noexcept { return model_calls_; }

private:
    const WidgetStore& store_;
    std::shared_ptr<const Embedder> embedder_;
    llm::Gateway* gateway_;
    std::map<std::pair<gui::WidgetSignature, std::string>, WidgetKnowledge> cache_;
    std::size_t model_calls_ = 0;
};

struct Coverage {
    std::vector<std::string> covered;    // internal activities visited at least once, sorted
    std::vector<std::string> uncovered;  // declared internal activities not yet visited
    std::size_t total_known = 0;
    std::map<std::string, int> counts;  // every activity seen, internal or not

    std::size_t covered_count() const noexcept { return covered.size(); }
};

class VisitCounter {
public:
    explicit VisitCounter(std::vector<std::string> declared_internal = {});

    // Counts a visit when `activity` differs from the previous observation
    // (or on the first observation) and returns the activity's count.
    int visit(const std::string& activity, bool internal);
    int count(const std::string& activity) const;
    bool is_internal(const std::string& activity) const;
    Coverage coverage() const;

    // Forget the previous observation so the next one counts, e.g. after a reset.
    void break_sequence() { previous_.reset(); }

    nlohmann::ordered_json to_json() const;
    static VisitCounter from_json(const nlohmann::json& j);

private:
    std::vector<std::string> declared_;
    std::map<std::string, int> counts_;
    std::map<std::string, bool> internal_;
    std::optional<std::string> previous_;
};

// memory/tasks.ndjson, memory/widgets.ndjson, memory/visits.json
void save_memory(const std::filesystem::path& dir, const TaskStore& tasks, const WidgetStore& widgets,
                 const VisitCounter& visits);

struct LoadedMemory {
    std::vector<TaskRecord> tasks;
    WidgetStore widgets;
    VisitCounter visits;
};
LoadedMemory load_memory(const std::filesystem::path& dir);

}  // namespace intent_explorer::memory
