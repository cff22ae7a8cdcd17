#include "intent_explorer/gui/serialize.hpp"

#include <algorithm>

#include "json.hpp"

#include "intent_explorer/gui/action.hpp"

namespace intent_explorer::gui {

namespace {

using ojson = nlohmann::ordered_json;

ojson widget_json(const Widget& w, const std::string& activity, const RoleAnnotations& annotations,
                  const ActionCounts& counts) {
    const WidgetSignature sig = compute_signature(w, activity);
    ojson j;
    j["ID"] = w.id;
    j["widget_type"] = w.widget_type;
    if (w.resource_id) j["resource_id"] = *w.resource_id;
    if (w.content_description) j["content_description"] = *w.content_description;
    if (w.text) j["text"] = *w.text;
    ojson types = ojson::array();
    for (ActionType t : possible_action_types(w)) types.push_back(std::string(to_string(t)));
    j["possible_action_types"] = std::move(types);
    const auto count = counts.find(sig);
    j["num_prev_actions"] = count == counts.end() ? 0 : count->second;
    if (const auto role = annotations.find(sig); role != annotations.end()) {
        j["widget_role_inference"] = role->second;
    }
    if (!w.children.empty()) {
        ojson children = ojson::array();
        for (const auto& c : w.children) children.push_back(widget_json(c, activity, annotations, counts));
        j["children"] = std::move(children);
    }
    return j;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    for (;;) {
        const auto nl = text.find('\n', start);
        if (nl == std::string::npos) {
            lines.push_back(text.substr(start));
            return lines;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
}

}  // namespace

std::string serialize_state(const GuiState& state, const RoleAnnotations& annotations,
                            const ActionCounts& action_counts) {
    ojson j;
    j["page_name"] = state.activity_name;
    j["page_visit_count"] = state.visit_count;
    ojson children = ojson::array();
    for (const auto& w : state.roots) {
        children.push_back(widget_json(w, state.activity_name, annotations, action_counts));
    }
    j["children"] = std::move(children);
    return j.dump(4);
}

std::string StateDiff::to_text() const {
    std::string out;
    for (const auto& l : removed) out += "- " + l + "\n";
    for (const auto& l : added) out += "+ " + l + "\n";
    return out;
}

std::optional<std::string> page_name_of(const std::string& serialized) {
    static const std::string key = "\"page_name\": ";
    const auto pos = serialized.find(key);
    if (pos == std::string::npos) return std::nullopt;
    const auto eol = serialized.find('\n', pos);
    std::string value = serialized.substr(pos + key.size(), eol == std::string::npos ? std::string::npos
                                                                                      : eol - pos - key.size());
    if (!value.empty() && value.back() == ',') value.pop_back();
    try {
        return nlohmann::json::parse(value).get<std::string>();
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
}

StateDiff diff_states(const std::string& before, const std::string& after) {
    StateDiff diff;
    if (before == after) {
        diff.unchanged = split_lines(before).size();
        return diff;
    }
    const auto a = split_lines(before);
    const auto b = split_lines(after);

    std::size_t prefix = 0;
    while (prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) ++prefix;
    std::size_t suffix = 0;
    while (suffix < a.size() - prefix && suffix < b.size() - prefix &&
           a[a.size() - 1 - suffix] == b[b.size() - 1 - suffix]) {
        ++suffix;
    }
    const std::size_t n = a.size() - prefix - suffix;
    const std::size_t m = b.size() - prefix - suffix;

    // LCS table over the differing middle section.
    std::vector<std::uint32_t> lcs((n + 1) * (m + 1), 0);
    auto at = [&](std::size_t i, std::size_t j) -> std::uint32_t& { return lcs[i * (m + 1) + j]; };
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = m; j-- > 0;) {
            at(i, j) = a[prefix + i] == b[prefix + j] ? at(i + 1, j + 1) + 1 : std::max(at(i + 1, j), at(i, j + 1));
        }
    }
    std::size_t i = 0;
    std::size_t j = 0;
    std::size_t common = 0;
    while (i < n && j < m) {
        if (a[prefix + i] == b[prefix + j]) {
            ++common;
            ++i;
            ++j;
        } else if (at(i + 1, j) >= at(i, j + 1)) {
            diff.removed.push_back(a[prefix + i++]);
        } else {
            diff.added.push_back(b[prefix + j++]);
        }
    }
    while (i < n) diff.removed.push_back(a[prefix + i++]);
    while (j < m) diff.added.push_back(b[prefix + j++]);
    diff.unchanged = prefix + suffix + common;

    const auto old_page = page_name_of(before);
    const auto new_page = page_name_of(after);
    if (old_page != new_page) {
        diff.old_activity = old_page.value_or("");
        diff.new_activity = new_page.value_or("");
    }
    return diff;
}

StateDiff crash_diff(const std::string& before, std::string message) {
    StateDiff diff;
    diff.removed = split_lines(before);
    diff.crashed = true;
    diff.crash_message = std::move(message);
    return diff;
}

}  // namespace intent_explorer::gui
