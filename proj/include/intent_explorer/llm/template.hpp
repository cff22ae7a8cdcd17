#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "intent_explorer/error.hpp"

namespace intent_explorer::llm {

enum class FieldKind { text, yes_no, bullets };

struct TemplateField {
    std::string key;    // name used by callers
    std::string label;  // literal text before the colon
    FieldKind kind = FieldKind::text;
    bool required = true;
    std::string hint;   // placeholder shown in the answer format
};

struct TemplateSchema {
    std::vector<TemplateField> fields;

    // Throws ValidationError on duplicate keys or labels.
    void validate() const;
};

using FieldValue = std::variant<std::string, bool, std::vector<std::string>>;
using FieldMap = std::map<std::string, FieldValue>;

class TemplateParseError : public ParseError {
public:
    TemplateParseError(const std::string& what, std::string label) : ParseError(what), label_(std::move(label)) {}
    const std::string& label() const noexcept { return label_; }

private:
    std::string label_;
};

// Splits a "Label: value" response. A field starts on a line that begins
// with its label followed by ':' and runs until the next such line. Text
// before the first label is ignored. Yes/no values accept any case and
// trailing punctuation; bullet fields keep only lines starting with '-'.
FieldMap parse_templated(const std::string& response, const TemplateSchema& schema);

// Inverse of parse_templated for well-formed maps. Absent optional fields
// are skipped.
std::string render_template(const FieldMap& values, const TemplateSchema& schema);

// The answer skeleton shown to the model: one "Label: <hint>" line per field.
std::string answer_format(const TemplateSchema& schema);

// Keeps at most `n` sentences (ending in . ! or ? followed by whitespace or
// the end) and collapses the result onto one line.
std::string limit_sentences(const std::string& text, std::size_t n);

const std::string& text_field(const FieldMap& values, const std::string& key);
bool yes_no_field(const FieldMap& values, const std::string& key);
const std::vector<std::string>& bullet_field(const FieldMap& values, const std::string& key);

}  // namespace intent_explorer::llm
