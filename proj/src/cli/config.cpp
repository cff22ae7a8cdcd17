#include "intent_explorer/cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "toml.hpp"

#include "intent_explorer/device/sim_device.hpp"

namespace intent_explorer::cli {

namespace {

// Reads the keys of one table and remembers which ones were consumed, so
// leftovers can be reported as unknown.
class Section {
public:
    Section(const toml::table* table, std::string path) : table_(table), path_(std::move(path)) {}

    bool present() const noexcept { return table_ != nullptr; }

    template <class T>
    std::optional<T> get(const std::string& key) {
        const toml::node* node = find(key);
        if (!node) return std::nullopt;
        if constexpr (std::is_same_v<T, double>) {
            if (auto v = node->value<double>()) return *v;
        } else if constexpr (std::is_same_v<T, bool>) {
            if (node->is_boolean()) return node->value<bool>();
        } else if constexpr (std::is_integral_v<T>) {
            if (node->is_integer()) return static_cast<T>(*node->value<std::int64_t>());
        } else {
            if (node->is_string()) return node->value<std::string>();
        }
        throw ValidationError(where(key) + " has the wrong type");
    }

    std::vector<std::string> strings(const std::string& key) {
        const toml::node* node = find(key);
        if (!node) return {};
        const auto* arr = node->as_array();
        if (!arr) throw ValidationError(where(key) + " must be an array of strings");
        std::vector<std::string> out;
        for (const auto& item : *arr) {
            if (!item.is_string()) throw ValidationError(where(key) + " must be an array of strings");
            out.push_back(*item.value<std::string>());
        }
        return out;
    }

    Section table(const std::string& key) {
        const toml::node* node = find(key);
        if (!node) return {nullptr, where(key)};
        if (!node->is_table()) throw ValidationError(where(key) + " must be a table");
        return {node->as_table(), where(key)};
    }

    std::map<std::string, std::string> string_map() {
        std::map<std::string, std::string> out;
        if (!table_) return out;
        for (const auto& [k, v] : *table_) {
            const std::string key(k.str());
            used_.insert(key);
            if (!v.is_string()) throw ValidationError(where(key) + " must be a string");
            out[key] = *v.value<std::string>();
        }
        return out;
    }

    void reject_unknown() const {
        if (!table_) return;
        for (const auto& [k, _] : *table_) {
            const std::string key(k.str());
            if (!used_.count(key)) throw ValidationError("unknown key " + where(key));
        }
    }

private:
    const toml::node* find(const std::string& key) {
        used_.insert(key);
        return table_ ? table_->get(key) : nullptr;
    }
    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const toml::table* table_;
    std::string path_;
    std::set<std::string> used_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

}  // namespace

LoadedConfig parse_config(std::string_view text, const std::filesystem::path& base_dir, const std::string& origin) {
    toml::table doc;
    try {
        doc = toml::parse(text, origin);
    } catch (const toml::parse_error& e) {
        const auto& at = e.source().begin;
        throw ParseError(origin + ": " + std::string(e.description()), static_cast<int>(at.line),
                         static_cast<int>(at.column));
    }

    LoadedConfig out;
    auto& run = out.run;
    Section root(&doc, "");

    const auto model = root.get<std::string>("app_model");
    if (!model) throw ValidationError(origin + ": app_model is required");
    run.app_model = resolve(base_dir, *model);
    if (auto v = root.get<std::int64_t>("seed")) {
        if (*v < 0) throw ValidationError("seed must not be negative");
        run.seed = static_cast<std::uint64_t>(*v);
    }
    if (auto v = root.get<bool>("deterministic")) run.deterministic = *v;
    if (auto v = root.get<std::string>("output_dir")) run.output_dir = resolve(base_dir, *v);
    if (auto v = root.get<bool>("redact_credentials")) run.redact_credentials = *v;

    auto budget = root.table("budget");
    run.budget.max_tasks = budget.get<int>("max_tasks");
    run.budget.max_actions = budget.get<int>("max_actions");
    run.budget.wall_seconds = budget.get<double>("wall_seconds");
    budget.reject_unknown();

    auto agent = root.table("agent");
    if (auto v = agent.get<int>("max_actions_per_task")) run.max_actions_per_task = *v;
    if (auto v = agent.get<int>("critique_period")) run.critique_period = *v;
    if (auto v = agent.get<int>("recent_tasks")) run.recent_tasks = static_cast<std::size_t>(std::max(0, *v));
    if (auto v = agent.get<int>("relevant_tasks")) run.relevant_tasks = static_cast<std::size_t>(std::max(0, *v));
    if (auto v = agent.get<int>("widget_observations")) run.widget_observations = static_cast<std::size_t>(std::max(0, *v));
    if (auto v = agent.get<int>("external_limit")) run.external_limit = *v;
    if (auto v = agent.get<int>("max_forced_backs")) run.max_forced_backs = *v;
    agent.reject_unknown();

    auto persona = root.table("persona");
    if (!persona.present()) throw ValidationError(origin + ": a [persona] table is required");
    run.persona.name = persona.get<std::string>("name").value_or("");
    run.persona.goal = persona.get<std::string>("goal").value_or("");
    run.persona.traits = persona.strings("traits");
    auto credentials = persona.table("credentials");
    run.persona.credentials = credentials.string_map();
    persona.reject_unknown();

    auto models = root.table("models");
    for (auto tag : {llm::RoleTag::fast, llm::RoleTag::fast_short, llm::RoleTag::strong}) {
        auto role = models.table(std::string(llm::to_string(tag)));
        if (!role.present()) continue;
        auto& bound = run.roles[tag];
        if (auto v = role.get<std::string>("model")) bound.model = *v;
        if (auto v = role.get<int>("max_context_tokens")) {
            if (*v <= 0) throw ValidationError("max_context_tokens must be positive");
            bound.max_context_tokens = static_cast<std::size_t>(*v);
        }
        if (auto v = role.get<double>("temperature")) bound.temperature = *v;
        role.reject_unknown();
    }
    models.reject_unknown();

    auto backend = root.table("backend");
    const auto kind = backend.get<std::string>("kind").value_or("scripted");
    if (kind == "scripted") out.backend.kind = BackendKind::scripted;
    else if (kind == "replay") out.backend.kind = BackendKind::replay;
    else if (kind == "http") out.backend.kind = BackendKind::http;
    else throw ValidationError("backend.kind must be scripted, replay or http, not " + kind);
    if (auto v = backend.get<std::string>("rules")) out.backend.rules = resolve(base_dir, *v);
    if (auto v = backend.get<std::string>("transcript")) out.backend.transcript = resolve(base_dir, *v);
    if (auto v = backend.get<std::string>("endpoint")) out.backend.endpoint = *v;
    if (auto v = backend.get<int>("timeout_seconds")) out.backend.timeout_seconds = *v;
    backend.reject_unknown();

    root.reject_unknown();
    run.validate();
    return out;
}

LoadedConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open config " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path.parent_path(), path.string());
}

std::shared_ptr<llm::Backend> make_backend(const BackendConfig& config) {
    switch (config.kind) {
        case BackendKind::scripted:
            if (config.rules.empty()) throw ValidationError("the scripted backend needs backend.rules");
            return std::make_shared<llm::ScriptedBackend>(llm::ScriptedBackend::from_file(config.rules));
        case BackendKind::replay:
            if (config.transcript.empty()) throw ValidationError("the replay backend needs backend.transcript");
            return std::make_shared<llm::ReplayBackend>(config.transcript);
        case BackendKind::http:
            if (config.endpoint.empty()) throw ValidationError("the http backend needs backend.endpoint");
            return std::make_shared<llm::HttpBackend>(llm::HttpBackendOptions{config.endpoint, "INTENT_EXPLORER_API_KEY",
                                                                              config.timeout_seconds});
    }
    throw ValidationError("unknown backend kind");
}

std::shared_ptr<device::DeviceInterface> make_device(const runner::RunConfig& config) {
    return std::make_shared<device::SimulatedDevice>(device::load_app_model(config.app_model));
}

}  // namespace intent_explorer::cli
