#include "intent_explorer/device/sim_device.hpp"

#include <algorithm>

namespace intent_explorer::device {

namespace {

const std::vector<gui::XmlElement>& default_loading_nodes() {
    static const std::vector<gui::XmlElement> nodes = gui::parse_xml(R"(
<node class="android.widget.FrameLayout" resource-id="loading_container" bounds="[0,0][1080,1920]">
  <node class="android.widget.ProgressBar" resource-id="loading_indicator" bounds="[490,860][590,960]"/>
  <node class="android.widget.TextView" text="Loading..." bounds="[390,980][690,1040]"/>
</node>)");
    return nodes;
}

const Expression& cached(const std::string& source) {
    thread_local std::map<std::string, Expression> cache;
    auto it = cache.find(source);
    if (it == cache.end()) it = cache.emplace(source, Expression::parse(source)).first;
    return it->second;
}

class Renderer {
public:
    Renderer(const Variables& vars, const std::map<std::string, std::string>& overrides)
        : vars_(vars), overrides_(overrides) {}

    std::vector<gui::Widget> render(const std::vector<gui::XmlElement>& nodes, const std::string& prefix,
                                    const std::map<std::string, std::string>& locals,
                                    std::vector<SimulatedDevice::RenderedSlot>& slots) {
        std::vector<gui::Widget> out;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const auto& e = nodes[i];
            const std::string slot = prefix + std::to_string(i);
            if (e.name == "repeat") {
                expand_repeat(e, slot, locals, slots, out);
                continue;
            }
            EvalContext ctx{&vars_, &locals, {}, {}};
            if (const std::string* cond = e.attribute("if"); cond && !cached(*cond).test(ctx)) continue;

            gui::XmlElement plain;
            plain.name = e.name;
            plain.line = e.line;
            plain.column = e.column;
            SimulatedDevice::RenderedSlot info;
            info.slot = slot;
            for (const auto& [key, value] : e.attributes) {
                if (key == "if") continue;
                if (key == "bind") {
                    info.bind = value;
                    continue;
                }
                if (key == "max-len") {
                    info.max_len = std::stoi(value);
                    continue;
                }
                plain.attributes.emplace_back(key, substitute(value, locals));
            }
            gui::Widget w = gui::widget_from_element(plain);
            if (info.bind) {
                w.text = display(vars_.at(*info.bind));
                if (w.text->empty()) w.text.reset();
            } else if (auto it = overrides_.find(slot); it != overrides_.end()) {
                w.text = it->second;
                if (w.text->empty()) w.text.reset();
            }
            slots.push_back(std::move(info));
            w.children = render(e.children, slot + ".", locals, slots);
            out.push_back(std::move(w));
        }
        return out;
    }

private:
    const Variables& vars_;
    const std::map<std::string, std::string>& overrides_;

    void expand_repeat(const gui::XmlElement& e, const std::string& slot,
                       const std::map<std::string, std::string>& locals,
                       std::vector<SimulatedDevice::RenderedSlot>& slots, std::vector<gui::Widget>& out) {
        const auto& list = std::get<StringList>(vars_.at(*e.attribute("list")));
        const std::string item_name = *e.attribute("as");
        const std::string index_name = e.attribute("index") ? *e.attribute("index") : "index";
        std::optional<Expression> where;
        if (const std::string* w = e.attribute("where")) where = cached(*w);
        for (std::size_t k = 0; k < list.size(); ++k) {
            auto scoped = locals;
            scoped[item_name] = list[k];
            scoped[index_name] = std::to_string(k);
            if (where && !where->test(EvalContext{&vars_, &scoped, {}, {}})) continue;
            auto items = render(e.children, slot + "#" + std::to_string(k) + ".", scoped, slots);
            for (auto& w : items) out.push_back(std::move(w));
        }
    }

    std::string substitute(const std::string& value, const std::map<std::string, std::string>& locals) const {
        std::string out;
        std::size_t pos = 0;
        for (;;) {
            const auto open = value.find("${", pos);
            if (open == std::string::npos) {
                out += value.substr(pos);
                return out;
            }
            out += value.substr(pos, open - pos);
            const auto close = value.find('}', open);
            const std::string name = value.substr(open + 2, close - open - 2);
            if (auto it = locals.find(name); it != locals.end()) {
                out += it->second;
            } else if (auto v = vars_.find(name); v != vars_.end()) {
                out += display(v->second);
            } else {
                throw ModelError("template references unknown variable " + name);
            }
            pos = close + 1;
        }
    }
};

// Rendering emits widgets in preorder, so slot i belongs to ordinal i.
void check_slots(const gui::GuiState& state, const std::vector<SimulatedDevice::RenderedSlot>& slots) {
    if (state.widget_count() != slots.size()) throw ModelError("internal: rendered slot count mismatch");
}

}  // namespace

SimulatedDevice::SimulatedDevice(std::shared_ptr<const AppModel> model) : model_(std::move(model)) { reset(); }

SimulatedDevice::SimulatedDevice(AppModel model) : SimulatedDevice(std::make_shared<const AppModel>(std::move(model))) {}

void SimulatedDevice::reset() {
    snapshot_ = Snapshot{};
    snapshot_.stack.push_back(Frame{model_->initial_activity, {}});
    snapshot_.variables = model_->initial_variables();
}

std::string SimulatedDevice::current_activity() const { return snapshot_.stack.back().activity; }

bool SimulatedDevice::is_internal(const std::string& activity) const {
    const ActivityModel* a = model_->find_activity(activity);
    return a && a->internal;
}

std::vector<std::string> SimulatedDevice::declared_activities() const { return model_->internal_activity_names(); }
std::string SimulatedDevice::app_name() const { return model_->app_name; }
std::string SimulatedDevice::package_name() const { return model_->package_name; }
void SimulatedDevice::set_visit_counter(VisitCounterFn counter) { visit_counter_ = std::move(counter); }
void SimulatedDevice::set_clock(ClockFn clock) { clock_ = std::move(clock); }

SimulatedDevice::Rendered SimulatedDevice::render() const {
    const Frame& frame = snapshot_.stack.back();
    const ActivityModel* activity = model_->find_activity(frame.activity);
    Rendered r;
    r.state.activity_name = frame.activity;
    r.state.package_name = activity->package.empty() ? model_->package_name : activity->package;
    Renderer renderer(snapshot_.variables, frame.text_overrides);
    const auto& nodes = snapshot_.loading_ticks > 0
                            ? (activity->loading_nodes ? *activity->loading_nodes : default_loading_nodes())
                            : activity->template_nodes;
    r.state.roots = renderer.render(nodes, snapshot_.loading_ticks > 0 ? "L" : "", {}, r.slots);
    gui::assign_ordinals(r.state);
    check_slots(r.state, r.slots);
    return r;
}

gui::GuiState SimulatedDevice::observe() {
    if (snapshot_.crashed) throw DeviceCrashedError(snapshot_.crash_message);
    gui::GuiState state = render().state;
    state.visit_count = visit_counter_ ? visit_counter_(state.activity_name, is_internal(state.activity_name)) : 1;
    state.timestamp_ms = clock_ ? clock_() : snapshot_.ticks * 1000;
    return state;
}

const TransitionRule* SimulatedDevice::find_rule(const gui::Action& action, const gui::Widget* target,
                                                 const EvalContext& ctx) const {
    const std::string& here = snapshot_.stack.back().activity;
    for (const auto& rule : model_->transitions) {
        if (rule.from != here || rule.on != action.type) continue;
        if (target && !rule.match.matches(*target)) continue;
        if (rule.guard && !rule.guard->test(ctx)) continue;
        return &rule;
    }
    return nullptr;
}

DeviceOutcome SimulatedDevice::outcome() {
    DeviceOutcome out;
    if (snapshot_.crashed) {
        out.crashed = true;
        out.crash_message = snapshot_.crash_message;
        return out;
    }
    out.state = observe();
    out.loading = snapshot_.loading_ticks > 0;
    out.left_app = !is_internal(current_activity());
    return out;
}

DeviceOutcome SimulatedDevice::perform(const gui::Action& action) {
    if (snapshot_.crashed) throw DeviceCrashedError(snapshot_.crash_message);
    action.validate();
    if (action.type == gui::ActionType::end_task) throw ValidationError("end_task is not a device action");

    const Rendered screen = render();
    const gui::Widget* target = nullptr;
    const RenderedSlot* slot = nullptr;
    if (action.target) {
        target = screen.state.find(*action.target);
        if (!target) throw StaleTargetError(*action.target);
        slot = &screen.slots[static_cast<std::size_t>(*action.target)];
    }
    ++snapshot_.ticks;

    bool back_at_root = false;
    auto pop = [&]() {
        if (snapshot_.stack.size() > 1) {
            snapshot_.stack.pop_back();
        } else {
            back_at_root = true;
        }
    };

    if (snapshot_.loading_ticks > 0) {
        if (action.type == gui::ActionType::wait) {
            --snapshot_.loading_ticks;
        } else if (action.type == gui::ActionType::back) {
            snapshot_.loading_ticks = 0;
            pop();
        }
        auto out = outcome();
        out.back_at_root = back_at_root;
        return out;
    }

    std::string input;
    if (action.type == gui::ActionType::set_text) {
        if (!gui::widget_supports(*target, gui::ActionType::set_text)) return outcome();
        input = *action.text;
        if (slot->max_len && input.size() > static_cast<std::size_t>(*slot->max_len)) {
            input.resize(static_cast<std::size_t>(*slot->max_len));
        }
        if (slot->bind) {
            snapshot_.variables[*slot->bind] = input;
        } else {
            snapshot_.stack.back().text_overrides[slot->slot] = input;
        }
    } else if (target && !gui::widget_supports(*target, action.type)) {
        return outcome();
    }

    EvalContext ctx{&snapshot_.variables, nullptr, {}, {}};
    if (target) ctx.target_text = target->text.value_or("");
    if (action.type == gui::ActionType::set_text) ctx.input_text = input;

    const TransitionRule* rule = find_rule(action, target, ctx);
    if (!rule) {
        if (action.type == gui::ActionType::back) pop();
        auto out = outcome();
        out.back_at_root = back_at_root;
        return out;
    }

    for (const auto& m : rule->mutations) m.apply(snapshot_.variables, ctx);
    if (rule->crash) {
        snapshot_.crashed = true;
        snapshot_.crash_message = *rule->crash;
        return outcome();
    }
    switch (rule->nav) {
        case Navigation::stay: break;
        case Navigation::push: snapshot_.stack.push_back(Frame{*rule->to, {}}); break;
        case Navigation::replace: snapshot_.stack.back() = Frame{*rule->to, {}}; break;
        case Navigation::pop: pop(); break;
        case Navigation::root:
            snapshot_.stack.clear();
            snapshot_.stack.push_back(Frame{rule->to.value_or(model_->initial_activity), {}});
            break;
    }
    snapshot_.loading_ticks = rule->delay;
    auto out = outcome();
    out.back_at_root = back_at_root;
    return out;
}

}  // namespace intent_explorer::device
