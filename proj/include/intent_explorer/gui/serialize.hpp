#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "intent_explorer/gui/signature.hpp"
#include "intent_explorer/gui/widget.hpp"

namespace intent_explorer::gui {

using RoleAnnotations = std::map<WidgetSignature, std::string>;
using ActionCounts = std::map<WidgetSignature, int>;

// JSON description of a screen as the agents see it (4-space indent, fixed
// key order). Byte-identical for equal inputs.
std::string serialize_state(const GuiState& state, const RoleAnnotations& annotations = {},
                            const ActionCounts& action_counts = {});

struct StateDiff {
    std::vector<std::string> removed;
    std::vector<std::string> added;
    std::size_t unchanged = 0;
    bool crashed = false;
    std::string crash_message;
    std::optional<std::string> old_activity;  // set together with new_activity
    std::optional<std::string> new_activity;

    bool empty() const noexcept { return removed.empty() && added.empty() && !crashed; }
    bool activity_changed() const noexcept { return new_activity.has_value(); }
    // "- line" / "+ line" listing, removed first.
    std::string to_text() const;
};

// Whole-line diff of two serialize_state outputs.
StateDiff diff_states(const std::string& before, const std::string& after);

// Diff describing a crash: nothing after, the app process is gone.
StateDiff crash_diff(const std::string& before, std::string message);

// Value of the top-level page_name in a serialized state, if present.
std::optional<std::string> page_name_of(const std::string& serialized);

}  // namespace intent_explorer::gui
