#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "intent_explorer/error.hpp"

namespace intent_explorer::device {

using StringList = std::vector<std::string>;
using Value = std::variant<bool, std::int64_t, std::string, StringList>;
using Variables = std::map<std::string, Value>;

enum class ValueKind { boolean, integer, string, list };

ValueKind kind_of(const Value& v);
std::string_view to_string(ValueKind kind);
// Text form used for ${var} substitution.
std::string display(const Value& v);
bool truthy(const Value& v);

// Runtime failure inside a model (type mismatch, unknown variable).
class ModelError : public Error {
public:
    using Error::Error;
};

struct EvalContext {
    const Variables* variables = nullptr;
    const std::map<std::string, std::string>* locals = nullptr;
    std::optional<std::string> target_text;  // $target.text
    std::optional<std::string> input_text;   // $input (set_text argument)
};

// Guard / mutation expression:
//   expr  := or
//   or    := and ('||' and)*
//   and   := unary ('&&' unary)*
//   unary := '!' unary | cmp
//   cmp   := atom (('=='|'!='|'<'|'<='|'>'|'>='|'contains') atom)?
//   atom  := '(' expr ')' | "str" | 'str' | int | true | false | [] | ident | $target.text | $input
class Expression {
public:
    static Expression parse(std::string_view source);

    Value eval(const EvalContext& ctx) const;
    bool test(const EvalContext& ctx) const { return truthy(eval(ctx)); }

    const std::string& source() const noexcept { return source_; }
    // Identifiers referenced anywhere in the expression.
    std::set<std::string> identifiers() const;
    // (identifier, string literal) pairs that appear on opposite sides of a comparison.
    std::vector<std::pair<std::string, std::string>> compared_literals() const;

    struct Node;

private:
    std::string source_;
    std::vector<Node> nodes_;  // nodes_[0] is the root
};

struct Expression::Node {
    enum class Op { literal, identifier, target_text, input_text, logical_not, logical_and, logical_or,
                    eq, ne, lt, le, gt, ge, contains };
    Op op = Op::literal;
    Value literal;
    std::string name;
    std::vector<std::size_t> args;  // indices into nodes_
};

// `var = expr`, `var += expr`, `var -= expr`.
struct Mutation {
    enum class Op { assign, add, remove };
    std::string variable;
    Op op = Op::assign;
    Expression value;

    static Mutation parse(std::string_view source);
    void apply(Variables& vars, const EvalContext& ctx) const;
    const std::string& source() const noexcept { return source_; }

private:
    std::string source_;
};

}  // namespace intent_explorer::device
