#include "intent_explorer/gui/hierarchy.hpp"

#include <cctype>
#include <charconv>
#include <sstream>

namespace intent_explorer::gui {

const std::string* XmlElement::attribute(std::string_view key) const {
    for (const auto& [k, v] : attributes) {
        if (k == key) return &v;
    }
    return nullptr;
}

namespace {

class XmlReader {
public:
    explicit XmlReader(std::string_view text) : text_(text) {}

    std::vector<XmlElement> read_document() {
        std::vector<XmlElement> roots;
        skip_misc();
        while (!at_end()) {
            if (peek() != '<') fail("expected '<'");
            roots.push_back(read_element());
            skip_misc();
        }
        return roots;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;

    bool at_end() const { return pos_ >= text_.size(); }
    char peek(std::size_t ahead = 0) const { return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0'; }
    bool starts_with(std::string_view s) const { return text_.substr(pos_, s.size()) == s; }

    char advance() {
        const char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        return c;
    }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError("hierarchy: " + what, line_, column_); }

    void skip_ws() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) advance();
    }

    void skip_until(std::string_view terminator, const char* what) {
        while (!at_end() && !starts_with(terminator)) advance();
        if (at_end()) fail(std::string("unterminated ") + what);
        for (std::size_t i = 0; i < terminator.size(); ++i) advance();
    }

    // Whitespace, comments, prolog and stray character data.
    void skip_misc() {
        for (;;) {
            skip_ws();
            if (starts_with("<!--")) {
                skip_until("-->", "comment");
            } else if (starts_with("<?")) {
                skip_until("?>", "processing instruction");
            } else if (!at_end() && peek() != '<') {
                while (!at_end() && peek() != '<') advance();
            } else {
                return;
            }
        }
    }

    static bool name_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':' || c == '.';
    }

    std::string read_name() {
        const std::size_t start = pos_;
        while (!at_end() && name_char(peek())) advance();
        if (pos_ == start) fail("expected a name");
        return std::string(text_.substr(start, pos_ - start));
    }

    std::string decode_entity() {
        // positioned after '&'
        std::string name;
        while (!at_end() && peek() != ';') {
            if (name.size() > 8) fail("malformed entity");
            name.push_back(advance());
        }
        if (at_end()) fail("unterminated entity");
        advance();
        if (name == "amp") return "&";
        if (name == "lt") return "<";
        if (name == "gt") return ">";
        if (name == "quot") return "\"";
        if (name == "apos") return "'";
        if (name.size() > 1 && name[0] == '#') {
            unsigned code = 0;
            const bool hex = name[1] == 'x';
            const char* first = name.data() + (hex ? 2 : 1);
            const auto [ptr, ec] = std::from_chars(first, name.data() + name.size(), code, hex ? 16 : 10);
            if (ec != std::errc() || ptr != name.data() + name.size()) fail("malformed character reference");
            return encode_utf8(code);
        }
        fail("unknown entity &" + name + ";");
    }

    static std::string encode_utf8(unsigned cp) {
        std::string out;
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
        return out;
    }

    std::string read_attribute_value() {
        const char quote = peek();
        if (quote != '"' && quote != '\'') fail("expected quoted attribute value");
        advance();
        std::string value;
        for (;;) {
            if (at_end()) fail("unterminated attribute value");
            const char c = advance();
            if (c == quote) break;
            if (c == '<') fail("'<' inside attribute value");
            if (c == '&') {
                value += decode_entity();
            } else {
                value.push_back(c);
            }
        }
        return value;
    }

    XmlElement read_element() {
        XmlElement element;
        element.line = line_;
        element.column = column_;
        advance();  // '<'
        element.name = read_name();
        for (;;) {
            skip_ws();
            if (at_end()) fail("unterminated start tag <" + element.name + ">");
            if (starts_with("/>")) {
                advance();
                advance();
                return element;
            }
            if (peek() == '>') {
                advance();
                break;
            }
            std::string key = read_name();
            skip_ws();
            if (peek() != '=') fail("expected '=' after attribute " + key);
            advance();
            skip_ws();
            for (const auto& [k, v] : element.attributes) {
                if (k == key) fail("duplicate attribute " + key);
            }
            element.attributes.emplace_back(std::move(key), read_attribute_value());
        }
        for (;;) {
            skip_misc();
            if (at_end()) fail("missing closing tag for <" + element.name + ">");
            if (starts_with("</")) {
                advance();
                advance();
                const std::string closing = read_name();
                if (closing != element.name) {
                    fail("mismatched closing tag </" + closing + "> for <" + element.name + ">");
                }
                skip_ws();
                if (peek() != '>') fail("expected '>'");
                advance();
                return element;
            }
            element.children.push_back(read_element());
        }
    }
};

bool parse_bool(const XmlElement& e, std::string_view key) {
    const std::string* v = e.attribute(key);
    if (!v) return false;
    if (*v == "true") return true;
    if (*v == "false") return false;
    throw ParseError("hierarchy: attribute " + std::string(key) + " must be true or false, got '" + *v + "'", e.line,
                     e.column);
}

std::optional<std::string> text_attribute(const XmlElement& e, std::string_view key) {
    const std::string* v = e.attribute(key);
    if (!v || v->empty()) return std::nullopt;
    return *v;
}

Bounds parse_bounds(const XmlElement& e) {
    const std::string* v = e.attribute("bounds");
    if (!v) return {};
    Bounds b;
    int* fields[] = {&b.left, &b.top, &b.right, &b.bottom};
    const char* p = v->data();
    const char* end = v->data() + v->size();
    auto expect = [&](char c) {
        if (p >= end || *p != c) {
            throw ParseError("hierarchy: malformed bounds '" + *v + "'", e.line, e.column);
        }
        ++p;
    };
    for (int i = 0; i < 4; ++i) {
        if (i % 2 == 0) expect('[');
        const auto [ptr, ec] = std::from_chars(p, end, *fields[i]);
        if (ec != std::errc()) throw ParseError("hierarchy: malformed bounds '" + *v + "'", e.line, e.column);
        p = ptr;
        expect(i % 2 == 0 ? ',' : ']');
    }
    if (p != end || !b.valid()) throw ParseError("hierarchy: invalid bounds '" + *v + "'", e.line, e.column);
    return b;
}

std::string short_class(const std::string& cls) {
    const auto dot = cls.rfind('.');
    return dot == std::string::npos ? cls : cls.substr(dot + 1);
}

void write_widget(std::ostringstream& out, const Widget& w, int depth) {
    const std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
    out << indent << "<node class=\"" << xml_escape(w.widget_type) << "\"";
    if (w.resource_id) out << " resource-id=\"" << xml_escape(*w.resource_id) << "\"";
    if (w.content_description) out << " content-desc=\"" << xml_escape(*w.content_description) << "\"";
    if (w.text) out << " text=\"" << xml_escape(*w.text) << "\"";
    out << " bounds=\"" << w.bounds.to_string() << "\"";
    if (w.clickable) out << " clickable=\"true\"";
    if (w.long_clickable) out << " long-clickable=\"true\"";
    if (w.editable) out << " editable=\"true\"";
    if (w.scrollable) out << " scrollable=\"true\"";
    if (w.checkable) out << " checkable=\"true\"";
    if (w.children.empty()) {
        out << "/>\n";
        return;
    }
    out << ">\n";
    for (const auto& c : w.children) write_widget(out, c, depth + 1);
    out << indent << "</node>\n";
}

}  // namespace

std::vector<XmlElement> parse_xml(std::string_view text) { return XmlReader(text).read_document(); }

Widget widget_from_element(const XmlElement& e) {
    if (e.name != "node") throw ParseError("hierarchy: unexpected element <" + e.name + ">", e.line, e.column);
    Widget w;
    const std::string* cls = e.attribute("class");
    if (!cls || cls->empty()) throw ParseError("hierarchy: <node> without class attribute", e.line, e.column);
    w.widget_type = short_class(*cls);
    w.resource_id = text_attribute(e, "resource-id");
    w.content_description = text_attribute(e, "content-desc");
    w.text = text_attribute(e, "text");
    w.bounds = parse_bounds(e);
    w.clickable = parse_bool(e, "clickable");
    w.long_clickable = parse_bool(e, "long-clickable");
    w.editable = parse_bool(e, "editable");
    w.scrollable = parse_bool(e, "scrollable");
    w.checkable = parse_bool(e, "checkable");
    for (const auto& child : e.children) w.children.push_back(widget_from_element(child));
    return w;
}

GuiState parse_hierarchy(std::string_view document) {
    const auto roots = parse_xml(document);
    if (roots.empty()) throw EmptyScreenError();
    if (roots.size() > 1) {
        throw ParseError("hierarchy: more than one root element", roots[1].line, roots[1].column);
    }
    const XmlElement& root = roots.front();
    if (root.name != "hierarchy") {
        throw ParseError("hierarchy: root element must be <hierarchy>, got <" + root.name + ">", root.line,
                         root.column);
    }
    GuiState state;
    const std::string* activity = root.attribute("activity");
    if (!activity || activity->empty()) {
        throw ParseError("hierarchy: <hierarchy> requires a non-empty activity attribute", root.line, root.column);
    }
    state.activity_name = *activity;
    if (const std::string* pkg = root.attribute("package")) state.package_name = *pkg;
    for (const auto& child : root.children) state.roots.push_back(widget_from_element(child));
    assign_ordinals(state);
    return state;
}

std::string write_hierarchy(const GuiState& state) {
    std::ostringstream out;
    out << "<hierarchy activity=\"" << xml_escape(state.activity_name) << "\" package=\""
        << xml_escape(state.package_name) << "\">\n";
    for (const auto& w : state.roots) write_widget(out, w, 1);
    out << "</hierarchy>\n";
    return out.str();
}

std::string xml_escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

}  // namespace intent_explorer::gui
