#include "intent_explorer/runner/runner.hpp"

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "intent_explorer/gui/serialize.hpp"

namespace intent_explorer::runner {

namespace {

nlohmann::ordered_json device_event(std::int64_t ts, int task, const gui::Action* action,
                                    const device::DeviceOutcome& outcome, const device::DeviceInterface& device,
                                    const char* kind) {
    nlohmann::ordered_json j;
    j["timestamp"] = ts;
    j["event"] = kind;
    j["task"] = task;
    j["action"] = action ? gui::to_json(*action) : nlohmann::ordered_json();
    if (outcome.crashed) {
        j["page_name"] = nullptr;
        j["crashed"] = true;
        j["crash_message"] = outcome.crash_message;
    } else {
        const auto& activity = outcome.state->activity_name;
        j["page_name"] = activity;
        j["internal"] = device.is_internal(activity);
    }
    return j;
}

}  // namespace

// Shared bookkeeping for agent runs and the random walker: device events go
// to the transcript, every observed page updates coverage, and the actions
// since the last reset are kept so exported scripts can rebuild the start page.
struct Tracker {
    device::DeviceInterface& device;
    RunClock& clock;
    memory::VisitCounter& visits;
    std::vector<nlohmann::ordered_json>& transcript;
    std::vector<CoveragePoint>& timeline;
    std::vector<ScriptStep> since_reset;
    int task = 0;

    void snapshot() {
        const auto c = visits.coverage();
        timeline.push_back({clock.now(), c.covered_count(), c.total_known});
    }

    device::DeviceOutcome reset(const char* why) {
        device.reset();
        visits.break_sequence();
        since_reset.clear();
        device::DeviceOutcome out;
        out.state = device.observe();
        transcript.push_back(device_event(clock.now(), task, nullptr, out, device, why));
        snapshot();
        return out;
    }

    device::DeviceOutcome perform(const gui::Action& action, const gui::GuiState& on, bool forced = false) {
        since_reset.push_back(make_step(action, on, forced));
        auto out = device.perform(action);
        transcript.push_back(device_event(clock.now(), task, &action, out, device, forced ? "forced" : "device"));
        snapshot();
        return out;
    }

    // Presses back until the app is in front again, then resets as a last
    // resort. Returns the number of back presses and whether a reset happened.
    std::pair<int, bool> return_to_app(gui::GuiState& current, int max_backs) {
        int backs = 0;
        while (backs < max_backs && !device.is_internal(current.activity_name)) {
            const auto out = perform(gui::Action::back(), current, true);
            ++backs;
            if (out.crashed) break;
            current = *out.state;
        }
        if (!device.is_internal(device.current_activity()) || device.current_activity().empty()) {
            current = *reset("reset").state;
            return {backs, true};
        }
        current = device.observe();
        return {backs, false};
    }
};

struct Explorer::State {
    RunConfig config;
    std::shared_ptr<device::DeviceInterface> device;
    RunClock clock;
    std::shared_ptr<memory::Embedder> embedder = std::make_shared<memory::HashedNgramEmbedder>();
    llm::Gateway gateway;
    memory::TaskStore tasks{embedder};
    memory::WidgetStore widgets;
    memory::VisitCounter visits;
    memory::WorkingMemory working;
    memory::WidgetRetriever retriever{widgets, embedder, &gateway};
    agents::Planner planner;
    agents::Actor actor;
    agents::Critic critic;
    agents::Observer observer{gateway};
    agents::Reflector reflector;
    std::vector<nlohmann::ordered_json> transcript;
    std::vector<CoveragePoint> timeline;
    std::vector<CrashEntry> crashes;
    Tracker tracker{*device, clock, visits, transcript, timeline, {}, 0};
    int total_actions = 0;

    State(RunConfig c, std::shared_ptr<device::DeviceInterface> d, std::shared_ptr<llm::Backend> backend)
        : config(std::move(c)),
          device(std::move(d)),
          clock(config.deterministic ? RunClock::ticking() : RunClock::wall()),
          gateway(std::move(backend), config.roles),
          visits(device->declared_activities()),
          planner(gateway, config.persona, device->app_name()),
          actor(gateway, config.persona, device->app_name()),
          critic(gateway, config.persona, device->app_name()),
          reflector(gateway, config.persona, device->app_name()) {}

    // The page as the Actor sees it: serialized with widget knowledge.
    std::string annotated(const gui::GuiState& state, const std::string& key) {
        gui::RoleAnnotations roles;
        gui::ActionCounts counts;
        for (const auto* w : state.preorder()) {
            const auto sig = gui::compute_signature(*w, state.activity_name);
            if (!widgets.count(sig)) continue;
            const auto k = retriever.knowledge(sig, key, config.widget_observations);
            counts[sig] = k.num_prev_actions;
            if (k.summary) roles[sig] = *k.summary;
        }
        return gui::serialize_state(state, roles, counts);
    }
};

Explorer::Explorer(RunConfig config, std::shared_ptr<device::DeviceInterface> device,
                   std::shared_ptr<llm::Backend> backend) {
    config.validate();
    if (!device) throw ValidationError("explorer needs a device");
    if (!backend) throw ValidationError("explorer needs a model backend");
    s_ = std::make_unique<State>(std::move(config), std::move(device), std::move(backend));
    s_->gateway.set_default_seed(s_->config.seed);
    s_->gateway.set_clock([this] { return s_->clock.now(); });
    s_->gateway.set_transcript_sink([this](const nlohmann::ordered_json& r) { s_->transcript.push_back(r); });
    s_->device->set_clock([this] { return s_->clock.now(); });
    s_->device->set_visit_counter(
        [this](const std::string& activity, bool internal) { return s_->visits.visit(activity, internal); });
}

Explorer::~Explorer() {
    s_->device->set_clock(nullptr);
    s_->device->set_visit_counter(nullptr);
}

const memory::TaskStore& Explorer::tasks() const noexcept { return s_->tasks; }
const memory::WidgetStore& Explorer::widgets() const noexcept { return s_->widgets; }
const memory::VisitCounter& Explorer::visits() const noexcept { return s_->visits; }
const agents::Planner& Explorer::planner() const noexcept { return s_->planner; }
llm::Gateway& Explorer::gateway() noexcept { return s_->gateway; }

TaskExecution Explorer::execute_task(const memory::Task& task) {
    auto& s = *s_;
    const auto& cfg = s.config;
    TaskExecution exec;
    exec.task = task;
    exec.setup = s.tracker.since_reset;
    s.working.register_task(task);
    s.retriever.clear_cache();

    gui::GuiState state = s.device->observe();
    const std::string start_key = agents::state_key(state);
    int external_actions = 0;
    bool crashed = false;
    exec.termination = agents::Termination::cap;

    while (static_cast<int>(exec.steps.size()) < cfg.max_actions_per_task) {
        const std::string key = agents::state_key(state);
        gui::Action action;
        try {
            action = s.actor.select(s.working, state, s.annotated(state, key));
        } catch (const agents::ActorError& e) {
            exec.termination = agents::Termination::error;
            exec.detail = e.what();
            break;
        }
        if (action.type == gui::ActionType::end_task) {
            exec.termination = agents::Termination::end_task;
            break;
        }

        ExecutedStep step;
        step.action = action;
        step.description = agents::describe_action(action, state);
        step.script_step = make_step(action, state);
        step.activity_before = state.activity_name;
        const std::string before = gui::serialize_state(state);
        const bool was_external = !s.device->is_internal(state.activity_name);

        device::DeviceOutcome outcome;
        try {
            outcome = s.tracker.perform(action, state);
        } catch (const device::StaleTargetError& e) {
            exec.termination = agents::Termination::error;
            exec.detail = e.what();
            s.tracker.since_reset.pop_back();
            break;
        }
        ++s.total_actions;

        gui::StateDiff diff;
        if (outcome.crashed) {
            diff = gui::crash_diff(before, outcome.crash_message);
        } else {
            diff = gui::diff_states(before, gui::serialize_state(*outcome.state));
        }
        auto observation = s.observer.observe(action, step.description, diff);

        if (outcome.crashed) {
            crashed = true;
            step.observation = observation.summary;
            exec.steps.push_back(step);
            s.working.add_action(action, step.description);
            s.working.add_observation(observation);
            s.crashes.push_back({s.tracker.task, task.description, static_cast<int>(exec.steps.size()),
                                 outcome.crash_message});
            exec.termination = agents::Termination::crash;
            exec.detail = outcome.crash_message;
            break;
        }

        state = *outcome.state;
        step.activity_after = state.activity_name;
        step.left_app = outcome.left_app;
        if (was_external && outcome.left_app) ++external_actions;
        if (!outcome.left_app) external_actions = 0;
        if (outcome.left_app && external_actions >= cfg.external_limit) {
            const auto [backs, reset] = s.tracker.return_to_app(state, cfg.max_forced_backs);
            step.forced_backs = backs;
            step.reset_after = reset;
            step.returned_to = state.activity_name;
            external_actions = 0;
            observation.summary += " The app under test was brought back to the foreground.";
        }
        step.observation = observation.summary;
        exec.steps.push_back(step);

        s.working.add_action(action, step.description);
        s.working.add_observation(observation);
        if (action.target) {
            s.widgets.put({step.script_step.target.value(), s.embedder->embed(key), action.type, observation.summary, 0});
        }

        const int n = static_cast<int>(exec.steps.size());
        if (n % cfg.critique_period == 0) {
            if (auto c = s.critic.criticise(s.working, gui::serialize_state(state))) {
                s.working.add_critique(*c);
                exec.critiques.push_back({n, *c});
            } else {
                ++exec.skipped_critiques;
            }
        }
    }

    agents::ReflectionInput in;
    in.memory = &s.working;
    in.termination = exec.termination;
    in.detail = exec.detail;
    in.final_state = crashed ? "" : gui::serialize_state(s.device->observe());
    in.start_state_key = start_key;
    in.max_actions = cfg.max_actions_per_task;
    exec.record = s.reflector.reflect(in, s.tasks);
    if (crashed) s.tracker.reset("reset");
    return exec;
}

RunResult Explorer::run() {
    auto& s = *s_;
    const auto& cfg = s.config;
    RunResult result;
    result.mode = "agent";
    s.tracker.reset("start");

    int consecutive_planning_failures = 0;
    auto budget_left = [&] {
        const int cycles = static_cast<int>(result.executions.size()) + result.planning_failures;
        if (cfg.budget.max_tasks && cycles >= *cfg.budget.max_tasks) return false;
        if (cfg.budget.max_actions && s.total_actions >= *cfg.budget.max_actions) return false;
        if (cfg.budget.wall_seconds && s.clock.elapsed_seconds() >= *cfg.budget.wall_seconds) return false;
        return true;
    };

    while (budget_left()) {
        s.tracker.task = static_cast<int>(result.executions.size()) + 1;
        const auto state = s.device->observe();
        agents::PlannerInput in;
        in.recent = s.tasks.recent(cfg.recent_tasks);
        in.relevant = s.tasks.retrieve(agents::state_key(state), cfg.relevant_tasks);
        in.coverage = s.visits.coverage();
        in.current_activity = state.activity_name;
        in.state = gui::serialize_state(state);
        in.max_actions = cfg.max_actions_per_task;
        memory::Task task;
        try {
            task = s.planner.plan(in);
        } catch (const agents::PlanningError&) {
            ++result.planning_failures;
            if (++consecutive_planning_failures >= 3) break;
            continue;
        }
        consecutive_planning_failures = 0;
        auto exec = execute_task(task);
        exec.index = s.tracker.task;
        result.executions.push_back(std::move(exec));
    }

    result.crashes = s.crashes;
    result.timeline = s.timeline;
    result.coverage = s.visits.coverage();
    result.total_actions = s.total_actions;
    result.usage = s.gateway.usage();
    result.transcript = s.transcript;
    result.task_records = s.tasks.records();
    result.widgets = s.widgets;
    result.visits = s.visits;
    result.app_package = s.device->package_name();
    result.report = build_report(result, cfg, *s.device);
    return result;
}

RunResult random_baseline(const RunConfig& config, std::shared_ptr<device::DeviceInterface> device) {
    config.validate();
    int budget = 0;
    if (config.budget.max_actions) budget = *config.budget.max_actions;
    else if (config.budget.max_tasks) budget = *config.budget.max_tasks * config.max_actions_per_task;
    else throw ValidationError("the random baseline needs an action or task budget");

    RunClock clock = config.deterministic ? RunClock::ticking() : RunClock::wall();
    memory::VisitCounter visits(device->declared_activities());
    device->set_clock([&clock] { return clock.now(); });
    device->set_visit_counter([&visits](const std::string& a, bool internal) { return visits.visit(a, internal); });
    struct Detach {
        device::DeviceInterface& d;
        ~Detach() {
            d.set_clock(nullptr);
            d.set_visit_counter(nullptr);
        }
    } detach{*device};

    RunResult result;
    result.mode = "baseline";
    Tracker tracker{*device, clock, visits, result.transcript, result.timeline, {}, 0};
    gui::GuiState state = *tracker.reset("start").state;

    static const std::vector<std::string> kWords{"test", "hello", "abc", "123", "note", "user", "a@b", "Lorem ipsum"};
    std::mt19937_64 rng(config.seed);
    auto pick = [&rng](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
    int external_actions = 0;

    while (result.total_actions < budget) {
        const auto options = gui::enumerate_actions(state);
        const std::size_t choice = pick(options.size() + 1);
        gui::Action action = gui::Action::back();
        if (choice < options.size()) {
            const auto& o = options[choice];
            action.type = o.type;
            action.target = o.target;
            if (o.type == gui::ActionType::set_text) action.text = kWords[pick(kWords.size())];
            if (o.type == gui::ActionType::scroll) {
                action.direction = pick(2) ? gui::ScrollDirection::down : gui::ScrollDirection::up;
            }
        }
        const bool was_external = !device->is_internal(state.activity_name);
        const auto outcome = tracker.perform(action, state);
        ++result.total_actions;
        if (outcome.crashed) {
            result.crashes.push_back({0, "", result.total_actions, outcome.crash_message});
            state = *tracker.reset("reset").state;
            continue;
        }
        state = *outcome.state;
        if (was_external && outcome.left_app) ++external_actions;
        if (!outcome.left_app) external_actions = 0;
        if (outcome.left_app && external_actions >= config.external_limit) {
            tracker.return_to_app(state, config.max_forced_backs);
            external_actions = 0;
        }
    }

    result.coverage = visits.coverage();
    result.visits = visits;
    result.app_package = device->package_name();
    result.report = build_report(result, config, *device);
    return result;
}

TestScript export_test_script(const TaskExecution& execution, const std::string& app_package) {
    if (execution.steps.empty()) throw ScriptExportError("task " + std::to_string(execution.index) + " has no steps");
    TestScript t;
    t.app_package = app_package;
    t.task = execution.task.description;
    t.end_condition = execution.task.end_condition;
    t.setup = execution.setup;
    for (const auto& step : execution.steps) {
        t.steps.push_back(step.script_step);
        for (int i = 0; i < step.forced_backs; ++i) t.steps.push_back({gui::ActionType::back, {}, {}, {}, true, false});
        if (step.reset_after) t.steps.push_back({gui::ActionType::wait, {}, {}, {}, true, true});
    }
    if (execution.termination == agents::Termination::crash) {
        t.expected_crash_step = static_cast<int>(t.steps.size());
    } else {
        const auto& last = execution.steps.back();
        t.expected_terminal_activity = last.returned_to.empty() ? last.activity_after : last.returned_to;
    }
    t.success = execution.record.success;
    return t;
}

namespace {

std::string script_name(int index) { return "task_" + std::to_string(index) + ".script.json"; }

nlohmann::ordered_json persona_json(const agents::PersonaProfile& p, bool redact) {
    nlohmann::ordered_json j;
    j["name"] = p.name;
    j["goal"] = p.effective_goal();
    j["traits"] = p.traits;
    j["credentials"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : p.credentials) j["credentials"][k] = redact ? "***" : v;
    return j;
}

template <class T>
nlohmann::ordered_json optional_json(const std::optional<T>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json();
}

void redact(nlohmann::ordered_json& j, const std::vector<std::string>& secrets) {
    if (j.is_string()) {
        auto s = j.get<std::string>();
        for (const auto& secret : secrets) {
            for (auto p = s.find(secret); p != std::string::npos; p = s.find(secret, p + 3)) s.replace(p, secret.size(), "***");
        }
        j = s;
    } else if (j.is_structured()) {
        for (auto& child : j) redact(child, secrets);
    }
}

nlohmann::ordered_json execution_json(const TaskExecution& e) {
    nlohmann::ordered_json j;
    j["index"] = e.index;
    j["description"] = e.task.description;
    j["end_condition"] = e.task.end_condition;
    j["reasoning"] = e.task.reasoning;
    j["termination"] = agents::to_string(e.termination);
    j["detail"] = e.detail;
    j["success"] = e.record.success;
    j["summary"] = e.record.summary;
    j["reflections"] = e.record.reflections;
    j["duplicate"] = e.record.duplicate;
    j["setup_length"] = e.setup.size();
    j["actions"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < e.steps.size(); ++i) {
        const auto& st = e.steps[i];
        nlohmann::ordered_json a;
        a["step"] = i + 1;
        a["action"] = gui::to_json(st.action);
        a["description"] = st.description;
        a["activity_before"] = st.activity_before;
        a["activity_after"] = st.activity_after;
        a["observation"] = st.observation;
        a["forced_backs"] = st.forced_backs;
        a["reset_after"] = st.reset_after;
        if (!st.returned_to.empty()) a["returned_to"] = st.returned_to;
        j["actions"].push_back(std::move(a));
    }
    j["critiques"] = nlohmann::ordered_json::array();
    for (const auto& c : e.critiques) {
        j["critiques"].push_back({{"after_action", c.after_action},
                                  {"review", c.critique.review},
                                  {"needs_workaround", c.critique.needs_workaround},
                                  {"plan", optional_json(c.critique.plan)}});
    }
    j["skipped_critiques"] = e.skipped_critiques;
    j["script"] = e.steps.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json("scripts/" + script_name(e.index));
    return j;
}

}  // namespace

nlohmann::ordered_json build_report(const RunResult& result, const RunConfig& config,
                                    const device::DeviceInterface& device) {
    nlohmann::ordered_json r;
    r["mode"] = result.mode;
    r["app"] = {{"name", device.app_name()},
                {"package", device.package_name()},
                {"declared_activities", device.declared_activities()}};

    nlohmann::ordered_json cfg;
    cfg["seed"] = config.seed;
    cfg["deterministic"] = config.deterministic;
    cfg["budget"] = {{"max_tasks", optional_json(config.budget.max_tasks)},
                     {"max_actions", optional_json(config.budget.max_actions)},
                     {"wall_seconds", optional_json(config.budget.wall_seconds)}};
    cfg["max_actions_per_task"] = config.max_actions_per_task;
    cfg["critique_period"] = config.critique_period;
    cfg["external_limit"] = config.external_limit;
    cfg["models"] = nlohmann::ordered_json::object();
    for (const auto& [tag, role] : config.roles) cfg["models"][std::string(llm::to_string(tag))] = role.model;
    r["config"] = std::move(cfg);
    r["persona"] = persona_json(config.persona, config.redact_credentials);

    r["tasks"] = nlohmann::ordered_json::array();
    for (const auto& e : result.executions) r["tasks"].push_back(execution_json(e));

    const auto& c = result.coverage;
    r["coverage"] = {{"covered", c.covered},
                     {"uncovered", c.uncovered},
                     {"covered_count", c.covered_count()},
                     {"total_known", c.total_known},
                     {"ratio", c.total_known ? static_cast<double>(c.covered_count()) / c.total_known : 0.0},
                     {"visits", c.counts}};

    r["timeline"] = nlohmann::ordered_json::array();
    for (const auto& p : result.timeline) {
        r["timeline"].push_back({{"timestamp", p.timestamp}, {"covered", p.covered}, {"total", p.total}});
    }
    r["crashes"] = nlohmann::ordered_json::array();
    for (const auto& k : result.crashes) {
        r["crashes"].push_back({{"task", k.task_index}, {"description", k.task}, {"step", k.step}, {"message", k.message}});
    }

    std::map<std::size_t, int> lengths;
    std::set<std::string> unique;
    int successes = 0;
    for (const auto& e : result.executions) {
        ++lengths[e.steps.size()];
        unique.insert(e.task.description);
        successes += e.record.success ? 1 : 0;
    }
    nlohmann::ordered_json histogram = nlohmann::ordered_json::object();
    for (const auto& [n, k] : lengths) histogram[std::to_string(n)] = k;
    r["statistics"] = {{"task_count", result.executions.size()},
                       {"unique_tasks", unique.size()},
                       {"success_count", successes},
                       {"total_actions", result.total_actions},
                       {"crash_count", result.crashes.size()},
                       {"planning_failures", result.planning_failures},
                       {"length_histogram", std::move(histogram)}};

    r["model_usage"] = nlohmann::ordered_json::object();
    for (const auto& [tag, u] : result.usage) {
        r["model_usage"][std::string(llm::to_string(tag))] = {{"requests", u.requests},
                                                             {"retries", u.retries},
                                                             {"prompt_chars", u.prompt_chars},
                                                             {"response_chars", u.response_chars},
                                                             {"prompt_tokens", u.prompt_tokens},
                                                             {"completion_tokens", u.completion_tokens}};
    }
    if (config.redact_credentials) {
        std::vector<std::string> secrets;
        for (const auto& [_, v] : config.persona.credentials) {
            if (!v.empty()) secrets.push_back(v);
        }
        redact(r["tasks"], secrets);
    }
    return r;
}

void merge_labels(nlohmann::ordered_json& report, const nlohmann::json& labels) {
    if (!labels.is_object() || !labels.contains("tasks") || !labels["tasks"].is_object()) {
        throw ParseError("labels must be an object with a \"tasks\" object");
    }
    int labeled = 0, viable = 0, completed = 0;
    for (auto& task : report.at("tasks")) {
        const auto key = std::to_string(task.at("index").get<int>());
        if (!labels["tasks"].contains(key)) continue;
        const auto& l = labels["tasks"][key];
        if (!l.is_object()) throw ParseError("label for task " + key + " must be an object");
        nlohmann::ordered_json out;
        for (const char* field : {"viable", "completed"}) {
            if (!l.contains(field)) continue;
            if (!l[field].is_boolean()) throw ParseError(std::string(field) + " label of task " + key + " must be a boolean");
            out[field] = l[field].get<bool>();
        }
        task["labels"] = out;
        ++labeled;
        viable += out.value("viable", false) ? 1 : 0;
        completed += out.value("completed", false) ? 1 : 0;
    }
    auto& stats = report["statistics"];
    stats["labeled_tasks"] = labeled;
    stats["viable_count"] = viable;
    stats["completed_count"] = completed;
}

std::string coverage_csv(const std::vector<CoveragePoint>& timeline) {
    std::ostringstream out;
    out << "timestamp,covered,total\n";
    for (const auto& p : timeline) out << p.timestamp << ',' << p.covered << ',' << p.total << '\n';
    return out.str();
}

void write_run_directory(const std::filesystem::path& dir, const RunResult& result) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto write = [&dir](const std::string& name, const std::string& content) {
        std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + (dir / name).string());
        out << content;
    };
    write("report.json", result.report.dump(2) + "\n");
    std::string ndjson;
    for (const auto& r : result.transcript) ndjson += r.dump() + "\n";
    write("transcript.ndjson", ndjson);
    write("coverage_timeline.csv", coverage_csv(result.timeline));

    fs::create_directories(dir / "scripts");
    for (const auto& e : result.executions) {
        if (e.steps.empty()) continue;
        save_script(dir / "scripts" / script_name(e.index), export_test_script(e, result.app_package));
    }
    memory::TaskStore tasks(std::make_shared<memory::HashedNgramEmbedder>());
    for (const auto& r : result.task_records) tasks.put(r);
    memory::save_memory(dir / "memory", tasks, result.widgets, result.visits);
}

}  // namespace intent_explorer::runner
