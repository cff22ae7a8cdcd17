#pragma once

#include <compare>
#include <optional>
#include <string>

#include "json.hpp"

#include "intent_explorer/gui/widget.hpp"

namespace intent_explorer::gui {

// Stable identity of a widget across visits. The textual key is the
// (resource_id, content_description, text) triple, with text dropped for
// editable widgets; when that key is entirely absent the bounds are used.
struct WidgetSignature {
    std::string activity;
    std::string widget_type;
    std::optional<std::string> resource_id;
    std::optional<std::string> content_description;
    std::optional<std::string> text;
    bool is_bounds_fallback = false;
    Bounds bounds;  // meaningful only when is_bounds_fallback

    std::string to_string() const;

    auto operator<=>(const WidgetSignature&) const = default;
};

WidgetSignature compute_signature(const Widget& widget, const std::string& activity);

nlohmann::ordered_json to_json(const WidgetSignature& signature);
WidgetSignature signature_from_json(const nlohmann::json& j);

}  // namespace intent_explorer::gui
