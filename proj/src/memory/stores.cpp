#include "intent_explorer/memory/stores.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include "intent_explorer/llm/template.hpp"
#include "intent_explorer/prompts.hpp"

namespace intent_explorer::memory {

namespace {

// Indices of the `n` best scores; later indices win ties.
std::vector<std::size_t> top_indices(const std::vector<double>& scores, std::size_t n) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a > b;
    });
    if (idx.size() > n) idx.resize(n);
    return idx;
}

std::string describe_widget(const gui::WidgetSignature& sig) {
    std::string out = sig.widget_type;
    std::vector<std::string> props;
    if (sig.resource_id) props.push_back("resource_id: " + *sig.resource_id);
    if (sig.content_description) props.push_back("content_description: " + *sig.content_description);
    if (sig.text) props.push_back("text: " + *sig.text);
    if (sig.is_bounds_fallback) props.push_back("bounds: " + sig.bounds.to_string());
    for (std::size_t i = 0; i < props.size(); ++i) out += (i ? ", " : " (") + props[i];
    if (!props.empty()) out += ")";
    return out;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& l : lines) out << l << '\n';
}

std::vector<nlohmann::json> read_ndjson(const std::filesystem::path& path) {
    std::vector<nlohmann::json> out;
    std::ifstream in(path, std::ios::binary);
    if (!in) return out;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            out.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(path.string() + ": " + e.what(), n, 1);
        }
    }
    return out;
}

}  // namespace

void WorkingMemory::register_task(Task task) {
    task_ = std::move(task);
    events_.clear();
}

void WorkingMemory::add_action(gui::Action action, std::string description) {
    events_.emplace_back(ActionEvent{std::move(action), std::move(description)});
}

void WorkingMemory::add_observation(Observation observation) { events_.emplace_back(std::move(observation)); }

void WorkingMemory::add_critique(Critique critique) { events_.emplace_back(std::move(critique)); }

std::size_t WorkingMemory::action_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(events_.begin(), events_.end(), [](const Event& e) { return std::holds_alternative<ActionEvent>(e); }));
}

const Critique* WorkingMemory::latest_critique() const noexcept {
    for (auto it = events_.rbegin(); it != events_.rend(); ++it) {
        if (const auto* c = std::get_if<Critique>(&*it)) return c;
    }
    return nullptr;
}

TaskStore::TaskStore(std::shared_ptr<const Embedder> embedder) : embedder_(std::move(embedder)) {
    if (!embedder_) throw ValidationError("task store needs an embedder");
}

const TaskRecord& TaskStore::put(TaskRecord record) {
    if (record.start_state_key.empty()) throw ValidationError("task record has an empty start-state key");
    if (record.embedding.empty()) record.embedding = embedder_->embed(record.start_state_key);
    record.duplicate = std::any_of(records_.begin(), records_.end(),
                                   [&](const TaskRecord& r) { return r.description == record.description; });
    records_.push_back(std::move(record));
    return records_.back();
}

std::vector<TaskRecord> TaskStore::retrieve(const std::string& state_key, std::size_t m) const {
    if (records_.empty() || m == 0) return {};
    const EmbeddingVector query = embedder_->embed(state_key);
    std::vector<double> scores;
    scores.reserve(records_.size());
    for (const auto& r : records_) scores.push_back(cosine(query, r.embedding));
    std::vector<TaskRecord> out;
    for (auto i : top_indices(scores, m)) out.push_back(records_[i]);
    return out;
}

std::vector<TaskRecord> TaskStore::recent(std::size_t n) const {
    const std::size_t start = records_.size() > n ? records_.size() - n : 0;
    return {records_.begin() + static_cast<std::ptrdiff_t>(start), records_.end()};
}

std::size_t TaskStore::unique_descriptions() const {
    std::set<std::string> seen;
    for (const auto& r : records_) seen.insert(r.description);
    return seen.size();
}

const WidgetObservationEntry& WidgetStore::put(WidgetObservationEntry entry) {
    auto& b = buckets_[entry.signature];
    entry.sequence = static_cast<int>(b.size()) + 1;
    b.push_back(std::move(entry));
    return b.back();
}

const std::vector<WidgetObservationEntry>& WidgetStore::bucket(const gui::WidgetSignature& signature) const {
    static const std::vector<WidgetObservationEntry> empty;
    const auto it = buckets_.find(signature);
    return it == buckets_.end() ? empty : it->second;
}

std::vector<WidgetObservationEntry> WidgetStore::select(const gui::WidgetSignature& signature,
                                                        const EmbeddingVector& query, std::size_t n) const {
    const auto& b = bucket(signature);
    std::vector<double> scores;
    scores.reserve(b.size());
    for (const auto& e : b) scores.push_back(cosine(query, e.state_embedding));
    std::vector<WidgetObservationEntry> out;
    for (auto i : top_indices(scores, n)) out.push_back(b[i]);
    return out;
}

std::size_t WidgetStore::size() const noexcept {
    std::size_t n = 0;
    for (const auto& [_, b] : buckets_) n += b.size();
    return n;
}

WidgetRetriever::WidgetRetriever(const WidgetStore& store, std::shared_ptr<const Embedder> embedder,
                                 llm::Gateway* gateway)
    : store_(store), embedder_(std::move(embedder)), gateway_(gateway) {}

WidgetKnowledge WidgetRetriever::knowledge(const gui::WidgetSignature& signature, const std::string& state_key,
                                           std::size_t n) {
    if (n == 0) throw ValidationError("widget knowledge needs n >= 1");
    WidgetKnowledge out;
    out.num_prev_actions = static_cast<int>(store_.count(signature));
    if (out.num_prev_actions == 0) return out;

    const auto key = std::make_pair(signature, state_key);
    if (auto it = cache_.find(key); it != cache_.end()) {
        out.summary = it->second.summary;
        out.selected = it->second.selected;
        return out;
    }

    out.selected = store_.select(signature, embedder_->embed(state_key), n);
    if (gateway_) {
        std::string observations;
        for (const auto& e : out.selected) {
            observations += "- after " + std::string(gui::to_string(e.action)) + ": " + e.observation + "\n";
        }
        if (!observations.empty()) observations.pop_back();
        const std::string prompt = render_prompt(
            "widget_summary",
            {{"activity", signature.activity}, {"widget", describe_widget(signature)}, {"observations", observations}});
        try {
            ++model_calls_;
            const auto reply = gateway_->complete({llm::ChatMessage::user(prompt)}, {}, llm::RoleTag::fast_short);
            const std::string summary = llm::limit_sentences(reply.content, 2);
            if (!summary.empty()) out.summary = summary;
        } catch (const llm::GatewayError&) {
            // the widget is still shown, just without a role annotation
        }
    }
    cache_[key] = out;
    return out;
}

VisitCounter::VisitCounter(std::vector<std::string> declared_internal) : declared_(std::move(declared_internal)) {
    std::sort(declared_.begin(), declared_.end());
    declared_.erase(std::unique(declared_.begin(), declared_.end()), declared_.end());
    for (const auto& a : declared_) internal_[a] = true;
}

int VisitCounter::visit(const std::string& activity, bool internal) {
    internal_[activity] = internal;
    if (!previous_ || *previous_ != activity) ++counts_[activity];
    previous_ = activity;
    return counts_[activity];
}

int VisitCounter::count(const std::string& activity) const {
    const auto it = counts_.find(activity);
    return it == counts_.end() ? 0 : it->second;
}

bool VisitCounter::is_internal(const std::string& activity) const {
    const auto it = internal_.find(activity);
    return it != internal_.end() && it->second;
}

Coverage VisitCounter::coverage() const {
    Coverage c;
    c.counts = counts_;
    std::set<std::string> known(declared_.begin(), declared_.end());
    for (const auto& [activity, n] : counts_) {
        if (n > 0 && is_internal(activity)) {
            c.covered.push_back(activity);
            known.insert(activity);
        }
    }
    for (const auto& a : declared_) {
        if (!count(a)) c.uncovered.push_back(a);
    }
    c.total_known = known.size();
    return c;
}

nlohmann::ordered_json VisitCounter::to_json() const {
    nlohmann::ordered_json j;
    j["declared_internal"] = declared_;
    j["counts"] = nlohmann::ordered_json::object();
    for (const auto& [a, n] : counts_) j["counts"][a] = n;
    j["internal"] = nlohmann::ordered_json::object();
    for (const auto& [a, flag] : internal_) j["internal"][a] = flag;
    return j;
}

VisitCounter VisitCounter::from_json(const nlohmann::json& j) {
    VisitCounter v(j.value("declared_internal", std::vector<std::string>{}));
    const auto counts = j.value("counts", nlohmann::json::object());
    const auto internal = j.value("internal", nlohmann::json::object());
    for (const auto& [a, n] : counts.items()) v.counts_[a] = n.get<int>();
    for (const auto& [a, flag] : internal.items()) v.internal_[a] = flag.get<bool>();
    return v;
}

void save_memory(const std::filesystem::path& dir, const TaskStore& tasks, const WidgetStore& widgets,
                 const VisitCounter& visits) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> lines;
    for (const auto& r : tasks.records()) lines.push_back(to_json(r).dump());
    write_lines(dir / "tasks.ndjson", lines);
    lines.clear();
    for (const auto& [_, bucket] : widgets.buckets()) {
        for (const auto& e : bucket) lines.push_back(to_json(e).dump());
    }
    write_lines(dir / "widgets.ndjson", lines);
    write_lines(dir / "visits.json", {visits.to_json().dump(4)});
}

LoadedMemory load_memory(const std::filesystem::path& dir) {
    LoadedMemory out;
    for (const auto& j : read_ndjson(dir / "tasks.ndjson")) out.tasks.push_back(task_record_from_json(j));
    for (const auto& j : read_ndjson(dir / "widgets.ndjson")) out.widgets.put(widget_entry_from_json(j));
    std::ifstream in(dir / "visits.json", std::ios::binary);
    if (in) {
        try {
            out.visits = VisitCounter::from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError((dir / "visits.json").string() + ": " + e.what());
        }
    }
    return out;
}

}  // namespace intent_explorer::memory
