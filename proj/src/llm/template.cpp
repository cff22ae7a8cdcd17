#include "intent_explorer/llm/template.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>
#include <sstream>

namespace intent_explorer::llm {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

bool iequals_prefix(std::string_view text, std::string_view prefix) {
    if (text.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(text[i])) != std::tolower(static_cast<unsigned char>(prefix[i]))) {
            return false;
        }
    }
    return true;
}

// Index of the field whose label opens `line`, and the offset just past its colon.
std::optional<std::pair<std::size_t, std::size_t>> label_at(std::string_view line, const TemplateSchema& schema) {
    const std::size_t indent = std::min(line.find_first_not_of(" \t"), line.size());
    const std::string_view rest = line.substr(indent);
    std::optional<std::pair<std::size_t, std::size_t>> best;
    std::size_t best_len = 0;
    for (std::size_t i = 0; i < schema.fields.size(); ++i) {
        const auto& label = schema.fields[i].label;
        if (label.size() <= best_len || !iequals_prefix(rest, label)) continue;
        std::size_t pos = label.size();
        while (pos < rest.size() && (rest[pos] == ' ' || rest[pos] == '\t')) ++pos;
        if (pos < rest.size() && rest[pos] == ':') {
            best = {i, indent + pos + 1};
            best_len = label.size();
        }
    }
    return best;
}

std::optional<bool> parse_yes_no(const std::string& block) {
    std::string first = block.substr(0, block.find('\n'));
    std::string word;
    for (char c : trim(first)) {
        if (!std::isalpha(static_cast<unsigned char>(c))) break;
        word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (word == "yes") return true;
    if (word == "no") return false;
    return std::nullopt;
}

}  // namespace

void TemplateSchema::validate() const {
    std::set<std::string> keys;
    std::set<std::string> labels;
    for (const auto& f : fields) {
        std::string lower = f.label;
        std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
        if (f.label.empty()) throw ValidationError("template field " + f.key + " has an empty label");
        if (!keys.insert(f.key).second) throw ValidationError("duplicate template key " + f.key);
        if (!labels.insert(lower).second) throw ValidationError("duplicate template label " + f.label);
    }
}

FieldMap parse_templated(const std::string& response, const TemplateSchema& schema) {
    std::vector<std::string> blocks(schema.fields.size());
    std::vector<bool> seen(schema.fields.size(), false);
    std::optional<std::size_t> current;

    std::istringstream in(response);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (auto hit = label_at(line, schema)) {
            const auto [index, offset] = *hit;
            if (seen[index]) {
                current.reset();  // a repeated label is ignored along with its text
                continue;
            }
            seen[index] = true;
            current = index;
            blocks[index] = line.substr(offset);
            continue;
        }
        if (current) blocks[*current] += "\n" + line;
    }

    FieldMap out;
    for (std::size_t i = 0; i < schema.fields.size(); ++i) {
        const auto& field = schema.fields[i];
        if (!seen[i]) {
            if (field.required) {
                throw TemplateParseError("response is missing the \"" + field.label + "\" field", field.label);
            }
            continue;
        }
        const std::string block = trim(blocks[i]);
        switch (field.kind) {
            case FieldKind::text: out[field.key] = block; break;
            case FieldKind::yes_no: {
                auto flag = parse_yes_no(block);
                if (!flag) {
                    throw TemplateParseError("field \"" + field.label + "\" must be Yes or No, got \"" + block + "\"",
                                             field.label);
                }
                out[field.key] = *flag;
                break;
            }
            case FieldKind::bullets: {
                std::vector<std::string> items;
                std::istringstream lines(block);
                std::string l;
                while (std::getline(lines, l)) {
                    const std::string t = trim(l);
                    if (!t.empty() && t[0] == '-') items.push_back(trim(std::string_view(t).substr(1)));
                }
                out[field.key] = std::move(items);
                break;
            }
        }
    }
    return out;
}

std::string render_template(const FieldMap& values, const TemplateSchema& schema) {
    std::string out;
    for (const auto& field : schema.fields) {
        const auto it = values.find(field.key);
        if (it == values.end()) {
            if (field.required) throw ValidationError("no value for template field " + field.key);
            continue;
        }
        out += field.label + ":";
        switch (field.kind) {
            case FieldKind::text: out += " " + std::get<std::string>(it->second); break;
            case FieldKind::yes_no: out += std::get<bool>(it->second) ? " Yes" : " No"; break;
            case FieldKind::bullets:
                for (const auto& item : std::get<std::vector<std::string>>(it->second)) out += "\n- " + item;
                break;
        }
        out += "\n";
    }
    return out;
}

std::string answer_format(const TemplateSchema& schema) {
    std::string out;
    for (const auto& field : schema.fields) {
        out += field.label + ": ";
        switch (field.kind) {
            case FieldKind::text: out += "<" + (field.hint.empty() ? field.key : field.hint) + ">"; break;
            case FieldKind::yes_no: out += "<Yes or No>"; break;
            case FieldKind::bullets: out += "\n- <" + (field.hint.empty() ? field.key : field.hint) + ">\n- ..."; break;
        }
        out += "\n";
    }
    return out;
}

std::string limit_sentences(const std::string& text, std::size_t n) {
    std::string flat;
    for (char c : trim(text)) {
        const bool space = c == '\n' || c == '\r' || c == '\t' || c == ' ';
        if (space) {
            if (!flat.empty() && flat.back() != ' ') flat += ' ';
        } else {
            flat += c;
        }
    }
    std::size_t seen = 0;
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const char c = flat[i];
        if ((c == '.' || c == '!' || c == '?') && (i + 1 == flat.size() || flat[i + 1] == ' ')) {
            if (++seen == n) return flat.substr(0, i + 1);
        }
    }
    return flat;
}

const std::string& text_field(const FieldMap& values, const std::string& key) {
    return std::get<std::string>(values.at(key));
}

bool yes_no_field(const FieldMap& values, const std::string& key) { return std::get<bool>(values.at(key)); }

const std::vector<std::string>& bullet_field(const FieldMap& values, const std::string& key) {
    return std::get<std::vector<std::string>>(values.at(key));
}

}  // namespace intent_explorer::llm
