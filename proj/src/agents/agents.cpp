#include "intent_explorer/agents/agents.hpp"

#include <set>

#include "intent_explorer/prompts.hpp"

namespace intent_explorer::agents {

namespace {

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

std::string join(const std::vector<std::string>& items, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
    return out;
}

// Asks for a templated answer, re-prompting once with the parse error.
std::optional<llm::FieldMap> ask_templated(llm::Gateway& gateway, std::vector<llm::ChatMessage> messages,
                                           const llm::TemplateSchema& schema, llm::RoleTag role) {
    for (int attempt = 0; attempt < 2; ++attempt) {
        llm::ChatMessage reply;
        try {
            reply = gateway.complete(messages, {}, role);
        } catch (const llm::GatewayError&) {
            return std::nullopt;
        }
        try {
            return llm::parse_templated(reply.content, schema);
        } catch (const llm::TemplateParseError& e) {
            messages.push_back(reply);
            messages.push_back(llm::ChatMessage::user(
                render_prompt("reprompt", {{"error", e.what()}, {"answer_format", llm::answer_format(schema)}})));
        }
    }
    return std::nullopt;
}

std::string widget_phrase(const gui::Widget& w) {
    std::string out = w.editable ? "textfield" : w.widget_type;
    if (w.content_description) return out + " that has content_desc " + quoted(*w.content_description);
    if (w.resource_id) return out + " that has resource_id " + quoted(*w.resource_id);
    if (w.text && !w.editable) return out + " that has text " + quoted(*w.text);
    return out + " at " + w.bounds.to_string();
}

std::string outcome_phrase(const memory::TaskRecord& r) { return r.success ? "succeeded" : "failed"; }

}  // namespace

void PersonaProfile::validate() const {
    if (name.empty()) throw ValidationError("persona name is empty");
    if (effective_goal().empty()) throw ValidationError("persona goal is empty");
}

std::string PersonaProfile::effective_goal() const { return goal.empty() ? default_goal(name) : goal; }

std::string PersonaProfile::profile_text() const {
    std::string out = "Name: " + name;
    for (const auto& t : traits) out += "\n" + t;
    if (!credentials.empty()) {
        out += "\nAccount credentials of " + name + ":";
        for (const auto& [k, v] : credentials) out += "\n- " + k + ": " + v;
    }
    return out;
}

std::string default_goal(const std::string& persona_name) {
    return persona_name + "'s ultimate goal is to visit as many pages as possible and try their core functionalities.";
}

std::string state_key(const gui::GuiState& state) {
    std::string out = "page_name: " + state.activity_name;
    for (const auto* w : state.preorder()) {
        std::string props;
        if (w->resource_id) props += " " + *w->resource_id;
        if (w->content_description) props += " " + *w->content_description;
        if (w->text && !w->editable) props += " " + *w->text;
        if (!props.empty()) out += "\n" + w->widget_type + props;
    }
    return out;
}

std::string describe_action(const gui::Action& action, const gui::GuiState& state) {
    const gui::Widget* target = action.target ? state.find(*action.target) : nullptr;
    const std::string phrase = target ? widget_phrase(*target) : "widget " + std::to_string(action.target.value_or(-1));
    switch (action.type) {
        case gui::ActionType::touch: return "Touch a " + phrase;
        case gui::ActionType::long_touch: return "Long-touch a " + phrase;
        case gui::ActionType::set_text: return "Fill a " + phrase + " with " + quoted(action.text.value_or(""));
        case gui::ActionType::scroll:
            return "Scroll " + std::string(gui::to_string(action.direction.value_or(gui::ScrollDirection::down))) +
                   " a " + phrase;
        case gui::ActionType::wait: return "Wait for the page to load";
        case gui::ActionType::back: return "Press the back button";
        case gui::ActionType::end_task: return "End the task";
    }
    return "";
}

std::string history_text(const memory::WorkingMemory& memory) {
    std::string out;
    int step = 0;
    for (const auto& event : memory.history()) {
        if (const auto* a = std::get_if<memory::WorkingMemory::ActionEvent>(&event)) {
            out += std::to_string(++step) + ". Action: " + a->description + "\n";
        } else if (const auto* o = std::get_if<memory::Observation>(&event)) {
            out += "   Observation: " + o->summary + "\n";
        } else if (const auto* c = std::get_if<memory::Critique>(&event)) {
            out += "   Critique: " + c->review + "\n";
            if (c->plan) out += "   Workaround plan: " + *c->plan + "\n";
        }
    }
    if (out.empty()) return "(no actions yet)";
    out.pop_back();
    return out;
}

// --- Planner ---

Planner::Planner(llm::Gateway& gateway, PersonaProfile persona, std::string app_name)
    : gateway_(gateway), persona_(std::move(persona)), app_name_(std::move(app_name)) {
    persona_.validate();
}

llm::TemplateSchema Planner::schema() const {
    const std::string& n = persona_.name;
    return {{{"reasoning", "Reasoning about " + n + "'s new task", llm::FieldKind::text, true,
              "reasoning about the properties of the next task"},
             {"task", n + "'s next task", llm::FieldKind::text, true, "one imperative sentence"},
             {"end_condition", "End condition of " + n + "'s next task", llm::FieldKind::text, true,
              "one sentence describing when the task is complete"}}};
}

std::string Planner::build_prompt(const PlannerInput& input) const {
    const std::string& n = persona_.name;
    std::vector<std::string> covered;
    for (const auto& a : input.coverage.covered) covered.push_back(a + " (" + std::to_string(input.coverage.counts.at(a)) + ")");

    std::string recent;
    for (const auto& r : input.recent) {
        recent += "- Task: " + r.description + "\n  Outcome: " + outcome_phrase(r) + ". " + r.summary + "\n";
    }
    std::string relevant;
    for (const auto& r : input.relevant) {
        relevant += "* Past task: " + r.description + "\n  Outcome: " + outcome_phrase(r) + ". " + r.summary + "\n";
        for (const auto& line : r.reflections) relevant += "  - " + line + "\n";
    }
    if (!recent.empty()) recent.pop_back();
    if (!relevant.empty()) relevant.pop_back();

    const std::string progress =
        input.recent.empty() ? n + " started " + app_name_ + "."
                             : n + " has performed " + std::to_string(input.recent.size()) + " recent tasks on " +
                                   app_name_ + ".";
    return render_prompt("planner",
                         {{"persona_profile", persona_.profile_text()},
                          {"goal", persona_.effective_goal()},
                          {"progress", progress},
                          {"app_name", app_name_},
                          {"covered_activities", covered.empty() ? "none" : join(covered, ", ")},
                          {"uncovered_activities",
                           input.coverage.uncovered.empty() ? "none" : join(input.coverage.uncovered, ", ")},
                          {"current_activity", input.current_activity},
                          {"persona_name", n},
                          {"recent_tasks", recent.empty() ? "(none yet)" : recent},
                          {"relevant_tasks", relevant.empty() ? "(none yet)" : relevant},
                          {"state", input.state},
                          {"max_actions", std::to_string(input.max_actions)},
                          {"answer_format", llm::answer_format(schema())}});
}

memory::Task Planner::plan(const PlannerInput& input) {
    last_prompt_ = build_prompt(input);
    const auto schema = this->schema();
    const auto fields = ask_templated(
        gateway_,
        {llm::ChatMessage::system(render_prompt("planner_system", {{"app_name", app_name_}})),
         llm::ChatMessage::user(last_prompt_)},
        schema, llm::RoleTag::strong);
    if (!fields) throw PlanningError("the planner did not produce a well-formed task");
    memory::Task task{llm::text_field(*fields, "task"), llm::text_field(*fields, "end_condition"),
                      llm::text_field(*fields, "reasoning"), persona_.name};
    if (task.description.empty() || task.end_condition.empty()) {
        throw PlanningError("the planner returned an empty task or end condition");
    }
    return task;
}

// --- Actor ---

Actor::Actor(llm::Gateway& gateway, PersonaProfile persona, std::string app_name)
    : gateway_(gateway), persona_(std::move(persona)), app_name_(std::move(app_name)) {
    persona_.validate();
}

std::vector<llm::FunctionSchema> Actor::functions(const gui::GuiState& state) {
    std::map<gui::ActionType, std::set<int>> targets;
    for (const auto& wa : gui::enumerate_actions(state)) targets[wa.type].insert(wa.target);

    const llm::ParamSpec base{"target_widget_ID", "ID of the target widget on the current page",
                              llm::ParamKind::integer, {}, {}, true};
    std::vector<llm::FunctionSchema> out;
    auto add = [&](gui::ActionType type, std::string description, std::vector<llm::ParamSpec> extra) {
        const auto it = targets.find(type);
        if (it == targets.end()) return;
        auto target = base;
        target.allowed_integers = it->second;
        extra.insert(extra.begin(), target);
        out.push_back({std::string(gui::to_string(type)), std::move(description), std::move(extra)});
    };
    add(gui::ActionType::touch, "Touch a widget", {});
    add(gui::ActionType::long_touch, "Touch and hold a widget", {});
    add(gui::ActionType::set_text, "Fill a textfield with the given text",
        {{"text", "text to enter", llm::ParamKind::string, {}, {}, true}});
    add(gui::ActionType::scroll, "Scroll a scrollable widget",
        {{"direction", "scroll direction", llm::ParamKind::enumeration, {}, {"up", "down"}, true}});
    out.push_back({"wait", "Wait for the page to finish loading", {}});
    out.push_back({"back", "Press the back button", {}});
    out.push_back({"end_task", "End the task, either because it is done or because it cannot be done", {}});
    return out;
}

gui::Action Actor::action_from_call(const llm::FunctionCall& call, const gui::GuiState& state) {
    const auto type = gui::action_type_from_string(call.name);
    if (!type) throw ActorError("unknown action " + call.name);
    gui::Action action;
    action.type = *type;
    if (gui::requires_target(*type)) {
        if (!call.arguments.contains("target_widget_ID") || !call.arguments["target_widget_ID"].is_number_integer()) {
            throw ActorError(call.name + " needs an integer target_widget_ID");
        }
        action.target = call.arguments["target_widget_ID"].get<int>();
        const gui::Widget* w = state.find(*action.target);
        if (!w || !gui::widget_supports(*w, *type)) {
            throw ActorError("widget " + std::to_string(*action.target) + " does not support " + call.name);
        }
    }
    if (*type == gui::ActionType::set_text) action.text = call.arguments.value("text", "");
    if (*type == gui::ActionType::scroll) {
        action.direction = gui::scroll_direction_from_string(call.arguments.value("direction", ""));
        if (!action.direction) throw ActorError("scroll needs a direction of up or down");
    }
    try {
        action.validate();
    } catch (const ValidationError& e) {
        throw ActorError(e.what());
    }
    return action;
}

std::vector<llm::ChatMessage> Actor::thread(const memory::WorkingMemory& memory,
                                            const std::string& annotated_state) const {
    const auto& task = memory.task();
    if (!task) throw ActorError("no task registered in working memory");
    std::vector<llm::ChatMessage> out;
    out.push_back(llm::ChatMessage::system(
        render_prompt("actor_system", {{"app_name", app_name_}, {"persona_profile", persona_.profile_text()}})));
    const std::string first = render_prompt("actor_first", {{"persona_name", persona_.name},
                                                            {"app_name", app_name_},
                                                            {"task", task->description},
                                                            {"end_condition", task->end_condition}});

    // Pair each action with the observation that followed it.
    std::vector<std::pair<std::string, std::string>> turns;
    for (const auto& event : memory.history()) {
        if (const auto* a = std::get_if<memory::WorkingMemory::ActionEvent>(&event)) {
            turns.emplace_back(a->description, "");
        } else if (const auto* o = std::get_if<memory::Observation>(&event)) {
            if (!turns.empty()) turns.back().second = o->summary;
        }
    }

    std::string critique;
    if (const auto* c = memory.latest_critique()) {
        critique = render_prompt("actor_critique",
                                 {{"review", c->review},
                                  {"plan", c->plan ? "Suggested workaround plan: " + *c->plan : std::string()}}) +
                   "\n";
    }
    const std::string state_part = render_prompt("actor_state", {{"state", annotated_state}, {"critique", critique}});

    if (turns.empty()) {
        out.push_back(llm::ChatMessage::user(first + "\n" + state_part));
        return out;
    }
    out.push_back(llm::ChatMessage::user(first));
    for (std::size_t i = 0; i < turns.size(); ++i) {
        out.push_back(llm::ChatMessage::assistant(turns[i].first));
        const bool last = i + 1 == turns.size();
        const std::string& obs = turns[i].second.empty() ? std::string(memory::kNoChangeSummary) : turns[i].second;
        out.push_back(llm::ChatMessage::user(
            last ? render_prompt("actor_result", {{"observation", obs}}) + " " + state_part
                 : render_prompt("actor_observation", {{"observation", obs}})));
    }
    return out;
}

gui::Action Actor::select(const memory::WorkingMemory& memory, const gui::GuiState& state,
                          const std::string& annotated_state) {
    const auto schemas = functions(state);
    llm::ChatMessage reply;
    try {
        reply = gateway_.complete(thread(memory, annotated_state), schemas, llm::RoleTag::fast);
    } catch (const llm::GatewayError& e) {
        throw ActorError(std::string("no valid action: ") + e.what());
    }
    if (!reply.function_call) throw ActorError("the reply carries no function call");
    return action_from_call(*reply.function_call, state);
}

// --- Critic ---

Critic::Critic(llm::Gateway& gateway, PersonaProfile persona, std::string app_name)
    : gateway_(gateway), persona_(std::move(persona)), app_name_(std::move(app_name)) {}

llm::TemplateSchema Critic::schema() const {
    return {{{"review", "Critique of task execution so far", llm::FieldKind::text, true,
              "review of the task execution history"},
             {"needs_workaround", "Need a workaround plan?", llm::FieldKind::yes_no, true, ""},
             {"plan", "Workaround plan for " + persona_.name, llm::FieldKind::text, false,
              "only when a workaround plan is needed"}}};
}

std::optional<memory::Critique> Critic::criticise(const memory::WorkingMemory& memory, const std::string& state) {
    const auto& task = memory.task();
    if (!task) return std::nullopt;
    const auto schema = this->schema();
    const std::string prompt = render_prompt("critique", {{"persona_name", persona_.name},
                                                          {"app_name", app_name_},
                                                          {"task", task->description},
                                                          {"end_condition", task->end_condition},
                                                          {"history", history_text(memory)},
                                                          {"state", state},
                                                          {"answer_format", llm::answer_format(schema)}});
    std::vector<llm::ChatMessage> messages{llm::ChatMessage::user(prompt)};
    llm::ChatMessage reply;
    try {
        reply = gateway_.complete(messages, {}, llm::RoleTag::strong);
    } catch (const llm::GatewayError&) {
        return std::nullopt;
    }
    llm::FieldMap fields;
    try {
        fields = llm::parse_templated(reply.content, schema);
    } catch (const llm::TemplateParseError&) {
        return std::nullopt;
    }
    memory::Critique c;
    c.review = llm::text_field(fields, "review");
    c.needs_workaround = llm::yes_no_field(fields, "needs_workaround");
    if (c.needs_workaround) {
        if (!fields.count("plan") || llm::text_field(fields, "plan").empty()) return std::nullopt;
        c.plan = llm::text_field(fields, "plan");
    }
    return c;
}

// --- Observer ---

Observer::Observer(llm::Gateway& gateway) : gateway_(gateway) {}

memory::Observation Observer::observe(const gui::Action& action, const std::string& action_description,
                                      const gui::StateDiff& diff) {
    memory::Observation out{"", diff, action};
    if (diff.crashed) {
        out.summary = "The app terminated unexpectedly (" + diff.crash_message + ").";
        return out;
    }
    if (diff.empty()) {
        out.summary = memory::kNoChangeSummary;
        return out;
    }
    ++model_calls_;
    try {
        const auto reply = gateway_.complete(
            {llm::ChatMessage::user(render_prompt("observer", {{"action", action_description}, {"diff", diff.to_text()}}))},
            {}, llm::RoleTag::fast);
        out.summary = llm::limit_sentences(reply.content, 2);
    } catch (const llm::GatewayError&) {
    }
    if (out.summary.empty()) {
        out.summary = "The page changed: " + std::to_string(diff.added.size()) + " lines were added and " +
                      std::to_string(diff.removed.size()) + " removed.";
    }
    return out;
}

// --- Reflector ---

std::string_view to_string(Termination reason) {
    switch (reason) {
        case Termination::end_task: return "end_task";
        case Termination::cap: return "cap";
        case Termination::error: return "error";
        case Termination::crash: return "crash";
    }
    return "";
}

Reflector::Reflector(llm::Gateway& gateway, PersonaProfile persona, std::string app_name)
    : gateway_(gateway), persona_(std::move(persona)), app_name_(std::move(app_name)) {}

llm::TemplateSchema Reflector::schema() const {
    return {{{"summary", "Summary of the task result", llm::FieldKind::text, true, "summary of the task result"},
             {"success", "Task done successfully?", llm::FieldKind::yes_no, true, ""},
             {"reflections", "Reflections on the task", llm::FieldKind::bullets, true,
              "memorable reflection"}}};
}

memory::TaskRecord Reflector::reflect(const ReflectionInput& input, memory::TaskStore& store) {
    if (!input.memory || !input.memory->task()) throw ValidationError("reflection needs a registered task");
    const auto& task = *input.memory->task();
    std::string termination;
    switch (input.termination) {
        case Termination::end_task: termination = "the end_task action was chosen."; break;
        case Termination::cap:
            termination = "the limit of " + std::to_string(input.max_actions) + " actions was reached.";
            break;
        case Termination::error: termination = "no valid action could be chosen (" + input.detail + ")."; break;
        case Termination::crash: termination = "the app crashed (" + input.detail + ")."; break;
    }
    const auto schema = this->schema();
    const std::string prompt = render_prompt(
        "reflection", {{"goal", persona_.effective_goal()},
                       {"persona_name", persona_.name},
                       {"app_name", app_name_},
                       {"task", task.description},
                       {"end_condition", task.end_condition},
                       {"termination", termination},
                       {"history", history_text(*input.memory)},
                       {"state", input.final_state.empty() ? "(the app is not running)" : input.final_state},
                       {"answer_format", llm::answer_format(schema)}});

    memory::TaskRecord record;
    record.description = task.description;
    record.end_condition = task.end_condition;
    record.start_state_key = input.start_state_key;
    if (const auto fields = ask_templated(gateway_, {llm::ChatMessage::user(prompt)}, schema, llm::RoleTag::strong)) {
        record.summary = llm::text_field(*fields, "summary");
        record.success = llm::yes_no_field(*fields, "success");
        record.reflections = llm::bullet_field(*fields, "reflections");
    } else {
        record.summary = kReflectionFailed;
        record.success = false;
    }
    if (input.termination == Termination::crash) record.success = false;
    return store.put(std::move(record));
}

}  // namespace intent_explorer::agents
