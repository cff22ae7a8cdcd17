#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace intent_explorer::gui {

struct Bounds {
    int left = 0;
    int top = 0;
    int right = 0;
    int bottom = 0;

    bool has_area() const noexcept { return right > left && bottom > top; }
    bool valid() const noexcept { return left >= 0 && top >= 0 && left <= right && top <= bottom; }
    std::string to_string() const;  // "[l,t][r,b]"

    auto operator<=>(const Bounds&) const = default;
};

struct Widget {
    int id = -1;  // preorder ordinal, assigned per state
    std::string widget_type;
    std::optional<std::string> resource_id;
    std::optional<std::string> content_description;
    std::optional<std::string> text;
    Bounds bounds;
    bool clickable = false;
    bool long_clickable = false;
    bool editable = false;
    bool scrollable = false;
    bool checkable = false;
    std::vector<Widget> children;

    bool operator==(const Widget&) const = default;
};

struct GuiState {
    std::string activity_name;
    std::string package_name;
    int visit_count = 1;
    std::vector<Widget> roots;
    std::int64_t timestamp_ms = 0;

    // Widgets in preorder; index i holds the widget with ordinal i once
    // assign_ordinals() has run.
    std::vector<const Widget*> preorder() const;
    const Widget* find(int id) const;
    std::size_t widget_count() const;

    bool operator==(const GuiState&) const = default;
};

void assign_ordinals(GuiState& state);

// Visits every widget in preorder.
void for_each_widget(const std::vector<Widget>& roots, const std::function<void(const Widget&)>& fn);

}  // namespace intent_explorer::gui
