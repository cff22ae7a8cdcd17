#include "intent_explorer/device/reachability.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <memory>
#include <unordered_set>

#include "intent_explorer/device/sim_device.hpp"

namespace intent_explorer::device {

namespace {

std::string state_key(const SimulatedDevice::Snapshot& s, const std::set<std::string>& relevant) {
    std::string key;
    for (const auto& f : s.stack) key += f.activity + "/";
    key += "|" + std::to_string(s.loading_ticks) + "|";
    for (const auto& [name, value] : s.variables) {
        if (!relevant.count(name)) continue;
        key += name + "=";
        if (const auto* list = std::get_if<StringList>(&value)) {
            StringList members = *list;
            std::sort(members.begin(), members.end());
            members.erase(std::unique(members.begin(), members.end()), members.end());
            for (const auto& m : members) key += m + "\x1f";
        } else {
            key += std::to_string(value.index()) + ":" + display(value);
        }
        key += "\x1e";
    }
    return key;
}

void collect_template_literals(const std::vector<gui::XmlElement>& nodes, std::map<std::string, std::set<std::string>>& out) {
    for (const auto& e : nodes) {
        for (const char* attr : {"if", "where"}) {
            if (const std::string* src = e.attribute(attr)) {
                for (const auto& [var, lit] : Expression::parse(*src).compared_literals()) out[var].insert(lit);
            }
        }
        collect_template_literals(e.children, out);
    }
}

void collect_interpolated(const std::vector<gui::XmlElement>& nodes, std::set<std::string>& out) {
    for (const auto& e : nodes) {
        for (const auto& [key, value] : e.attributes) {
            for (auto pos = value.find("${"); pos != std::string::npos; pos = value.find("${", pos + 2)) {
                const auto close = value.find('}', pos);
                if (close != std::string::npos) out.insert(value.substr(pos + 2, close - pos - 2));
            }
        }
        collect_interpolated(e.children, out);
    }
}

void collect_conditions(const std::vector<gui::XmlElement>& nodes, std::set<std::string>& out) {
    for (const auto& e : nodes) {
        for (const char* attr : {"if", "where"}) {
            if (const std::string* src = e.attribute(attr)) {
                const auto ids = Expression::parse(*src).identifiers();
                out.insert(ids.begin(), ids.end());
            }
        }
        if (const std::string* list = e.attribute("list")) out.insert(*list);
        collect_conditions(e.children, out);
    }
}

// Variables that can influence which rule fires or which widgets exist:
// anything read by a guard or condition, closed over the mutations that feed
// those variables.
std::set<std::string> control_variables(const AppModel& model) {
    std::set<std::string> relevant;
    std::set<std::string> interpolated;
    for (const auto& t : model.transitions) {
        if (t.guard) {
            const auto ids = t.guard->identifiers();
            relevant.insert(ids.begin(), ids.end());
        }
    }
    for (const auto& a : model.activities) {
        collect_conditions(a.template_nodes, relevant);
        collect_interpolated(a.template_nodes, interpolated);
        if (a.loading_nodes) {
            collect_conditions(*a.loading_nodes, relevant);
            collect_interpolated(*a.loading_nodes, interpolated);
        }
    }
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& t : model.transitions) {
            for (const auto& m : t.mutations) {
                if (!relevant.count(m.variable)) continue;
                auto reads = m.value.identifiers();
                if (m.source().find("$target.text") != std::string::npos) {
                    reads.insert(interpolated.begin(), interpolated.end());
                }
                for (const auto& r : reads) changed |= relevant.insert(r).second;
            }
        }
    }
    return relevant;
}

}  // namespace

ReachabilityResult explore_reachable(const AppModel& model, const ReachabilityLimits& limits) {
    std::map<std::string, std::set<std::string>> literals;
    for (const auto& t : model.transitions) {
        if (t.guard) {
            for (const auto& [var, lit] : t.guard->compared_literals()) literals[var].insert(lit);
        }
    }
    for (const auto& a : model.activities) {
        collect_template_literals(a.template_nodes, literals);
        if (a.loading_nodes) collect_template_literals(*a.loading_nodes, literals);
    }

    const std::set<std::string> relevant = control_variables(model);
    const std::size_t activity_total = model.activities.size();

    SimulatedDevice device(std::make_shared<const AppModel>(model));
    ReachabilityResult result;
    std::deque<SimulatedDevice::Snapshot> frontier;
    std::unordered_set<std::string> seen;

    auto record = [&](const SimulatedDevice::Snapshot& s) {
        if (s.crashed) return;
        const std::string& activity = s.stack.back().activity;
        (device.is_internal(activity) ? result.internal : result.external).insert(activity);
        if (s.stack.size() > limits.max_stack_depth) return;
        if (seen.size() >= limits.max_states) {
            result.truncated = true;
            return;
        }
        if (seen.insert(state_key(s, relevant)).second) frontier.push_back(s);
    };

    record(device.snapshot());
    // Nothing left to discover once every declared activity has been seen.
    while (!frontier.empty() && result.internal.size() + result.external.size() < activity_total) {
        const SimulatedDevice::Snapshot current = std::move(frontier.front());
        frontier.pop_front();
        ++result.states_explored;
        device.restore(current);
        const auto screen = device.render();

        std::vector<gui::Action> actions{gui::Action::back(), gui::Action::wait()};
        for (const auto& wa : gui::enumerate_actions(screen.state)) {
            switch (wa.type) {
                case gui::ActionType::set_text: {
                    const auto& slot = screen.slots[static_cast<std::size_t>(wa.target)];
                    if (!slot.bind || !relevant.count(*slot.bind)) break;
                    std::set<std::string> pool{"x"};
                    if (auto it = literals.find(*slot.bind); it != literals.end()) {
                        pool.insert(it->second.begin(), it->second.end());
                    }
                    for (const auto& text : pool) actions.push_back(gui::Action::set_text(wa.target, text));
                    break;
                }
                case gui::ActionType::scroll:
                    actions.push_back(gui::Action::scroll(wa.target, gui::ScrollDirection::up));
                    actions.push_back(gui::Action::scroll(wa.target, gui::ScrollDirection::down));
                    break;
                default: actions.push_back({wa.type, wa.target, {}, {}}); break;
            }
        }
        for (const auto& action : actions) {
            device.restore(current);
            device.perform(action);
            record(device.snapshot());
        }
    }
    return result;
}

}  // namespace intent_explorer::device
