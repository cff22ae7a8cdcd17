#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "intent_explorer/error.hpp"
#include "intent_explorer/gui/widget.hpp"

namespace intent_explorer::gui {

// Minimal XML element tree: elements, attributes, comments and an optional
// prolog. Text content between elements is ignored.
struct XmlElement {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;  // document order
    std::vector<XmlElement> children;
    int line = 0;
    int column = 0;

    const std::string* attribute(std::string_view key) const;
};

// Parses a sequence of top-level elements.
std::vector<XmlElement> parse_xml(std::string_view text);

class EmptyScreenError : public Error {
public:
    EmptyScreenError() : Error("empty screen: hierarchy document contains no elements") {}
};

// Hierarchy dump:
//   <hierarchy activity="Main" package="com.example">
//     <node class="android.widget.Button" text="OK" bounds="[0,0][100,50]" clickable="true"/>
//   </hierarchy>
GuiState parse_hierarchy(std::string_view document);

// Converts a <node> element into a widget (children included). Unknown
// attributes are ignored; malformed known ones throw ParseError.
Widget widget_from_element(const XmlElement& element);

// Canonical hierarchy text; parse_hierarchy(write_hierarchy(s)) == s up to
// ordinals and timestamp.
std::string write_hierarchy(const GuiState& state);

std::string xml_escape(std::string_view text);

}  // namespace intent_explorer::gui
