#include "intent_explorer/gui/signature.hpp"

namespace intent_explorer::gui {

WidgetSignature compute_signature(const Widget& widget, const std::string& activity) {
    WidgetSignature sig;
    sig.activity = activity;
    sig.widget_type = widget.widget_type;
    sig.resource_id = widget.resource_id;
    sig.content_description = widget.content_description;
    if (!widget.editable) sig.text = widget.text;
    if (!sig.resource_id && !sig.content_description && !sig.text) {
        sig.is_bounds_fallback = true;
        sig.bounds = widget.bounds;
    }
    return sig;
}

std::string WidgetSignature::to_string() const {
    std::string out = activity + "/" + widget_type;
    if (is_bounds_fallback) return out + bounds.to_string();
    out += "{";
    out += resource_id ? *resource_id : "";
    out += "|";
    out += content_description ? *content_description : "";
    out += "|";
    out += text ? *text : "";
    out += "}";
    return out;
}

nlohmann::ordered_json to_json(const WidgetSignature& sig) {
    nlohmann::ordered_json j;
    j["activity"] = sig.activity;
    j["widget_type"] = sig.widget_type;
    if (sig.resource_id) j["resource_id"] = *sig.resource_id;
    if (sig.content_description) j["content_description"] = *sig.content_description;
    if (sig.text) j["text"] = *sig.text;
    if (sig.is_bounds_fallback) {
        j["bounds"] = {sig.bounds.left, sig.bounds.top, sig.bounds.right, sig.bounds.bottom};
    }
    return j;
}

WidgetSignature signature_from_json(const nlohmann::json& j) {
    WidgetSignature sig;
    sig.activity = j.at("activity").get<std::string>();
    sig.widget_type = j.at("widget_type").get<std::string>();
    if (j.contains("resource_id")) sig.resource_id = j["resource_id"].get<std::string>();
    if (j.contains("content_description")) sig.content_description = j["content_description"].get<std::string>();
    if (j.contains("text")) sig.text = j["text"].get<std::string>();
    if (j.contains("bounds")) {
        const auto& b = j["bounds"];
        sig.is_bounds_fallback = true;
        sig.bounds = {b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
    }
    return sig;
}

}  // namespace intent_explorer::gui
