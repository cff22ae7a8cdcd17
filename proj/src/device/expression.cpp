#include "intent_explorer/device/expression.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace intent_explorer::device {

ValueKind kind_of(const Value& v) { return static_cast<ValueKind>(v.index()); }

std::string_view to_string(ValueKind kind) {
    switch (kind) {
        case ValueKind::boolean: return "bool";
        case ValueKind::integer: return "int";
        case ValueKind::string: return "string";
        case ValueKind::list: return "list";
    }
    return "?";
}

std::string display(const Value& v) {
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, bool>) {
                return x ? "true" : "false";
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                return std::to_string(x);
            } else if constexpr (std::is_same_v<T, std::string>) {
                return x;
            } else {
                std::string out;
                for (std::size_t i = 0; i < x.size(); ++i) out += (i ? ", " : "") + x[i];
                return out;
            }
        },
        v);
}

bool truthy(const Value& v) {
    return std::visit(
        [](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, bool>) {
                return x;
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                return x != 0;
            } else {
                return !x.empty();
            }
        },
        v);
}

namespace {

using Op = Expression::Node::Op;

struct Token {
    enum class Kind { end, identifier, string, integer, symbol } kind = Kind::end;
    std::string text;
    std::size_t offset = 0;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            Token t;
            t.offset = pos_;
            if (pos_ >= src_.size()) {
                out.push_back(t);
                return out;
            }
            const char c = src_[pos_];
            if (c == '"' || c == '\'') {
                t.kind = Token::Kind::string;
                ++pos_;
                while (pos_ < src_.size() && src_[pos_] != c) {
                    if (src_[pos_] == '\\' && pos_ + 1 < src_.size()) ++pos_;
                    t.text.push_back(src_[pos_++]);
                }
                if (pos_ >= src_.size()) fail("unterminated string literal", t.offset);
                ++pos_;
            } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                       (c == '-' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
                t.kind = Token::Kind::integer;
                t.text.push_back(src_[pos_++]);
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                    t.text.push_back(src_[pos_++]);
                }
            } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
                t.kind = Token::Kind::identifier;
                while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                              src_[pos_] == '_' || src_[pos_] == '$' || src_[pos_] == '.')) {
                    t.text.push_back(src_[pos_++]);
                }
            } else {
                t.kind = Token::Kind::symbol;
                static constexpr std::string_view two[] = {"==", "!=", "<=", ">=", "&&", "||", "+=", "-="};
                bool matched = false;
                for (auto s : two) {
                    if (src_.substr(pos_, 2) == s) {
                        t.text = std::string(s);
                        pos_ += 2;
                        matched = true;
                        break;
                    }
                }
                if (!matched) {
                    if (std::string_view("!<>()[]=").find(c) == std::string_view::npos) {
                        fail(std::string("unexpected character '") + c + "'", pos_);
                    }
                    t.text = std::string(1, c);
                    ++pos_;
                }
            }
            out.push_back(std::move(t));
        }
    }

    [[noreturn]] void fail(const std::string& what, std::size_t offset) const {
        throw ParseError("expression '" + std::string(src_) + "': " + what + " at offset " + std::to_string(offset));
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
};

class Parser {
public:
    Parser(std::string_view src, std::vector<Token> tokens, std::vector<Expression::Node>& nodes)
        : src_(src), tokens_(std::move(tokens)), nodes_(nodes) {}

    std::size_t parse_all() {
        const std::size_t root = parse_or();
        if (peek().kind != Token::Kind::end) fail("unexpected '" + peek().text + "'");
        return root;
    }

    std::size_t parse_or() {
        std::size_t lhs = parse_and();
        while (is_symbol("||")) {
            next();
            lhs = add(Op::logical_or, {lhs, parse_and()});
        }
        return lhs;
    }

    const Token& peek() const { return tokens_[pos_]; }
    bool is_symbol(std::string_view s) const { return peek().kind == Token::Kind::symbol && peek().text == s; }
    Token next() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("expression '" + std::string(src_) + "': " + what);
    }

private:
    std::string_view src_;
    std::vector<Token> tokens_;
    std::vector<Expression::Node>& nodes_;
    std::size_t pos_ = 0;

    std::size_t add(Op op, std::vector<std::size_t> args) {
        Expression::Node n;
        n.op = op;
        n.args = std::move(args);
        nodes_.push_back(std::move(n));
        return nodes_.size() - 1;
    }

    std::size_t parse_and() {
        std::size_t lhs = parse_unary();
        while (is_symbol("&&")) {
            next();
            lhs = add(Op::logical_and, {lhs, parse_unary()});
        }
        return lhs;
    }

    std::size_t parse_unary() {
        if (is_symbol("!")) {
            next();
            return add(Op::logical_not, {parse_unary()});
        }
        return parse_cmp();
    }

    std::size_t parse_cmp() {
        const std::size_t lhs = parse_atom();
        static const std::pair<std::string_view, Op> ops[] = {{"==", Op::eq}, {"!=", Op::ne}, {"<=", Op::le},
                                                              {">=", Op::ge}, {"<", Op::lt},  {">", Op::gt}};
        for (const auto& [sym, op] : ops) {
            if (is_symbol(sym)) {
                next();
                return add(op, {lhs, parse_atom()});
            }
        }
        if (peek().kind == Token::Kind::identifier && peek().text == "contains") {
            next();
            return add(Op::contains, {lhs, parse_atom()});
        }
        return lhs;
    }

    std::size_t parse_atom() {
        const Token t = next();
        Expression::Node n;
        switch (t.kind) {
            case Token::Kind::string:
                n.literal = t.text;
                break;
            case Token::Kind::integer: {
                std::int64_t v = 0;
                std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
                n.literal = v;
                break;
            }
            case Token::Kind::identifier:
                if (t.text == "true" || t.text == "false") {
                    n.literal = t.text == "true";
                } else if (t.text == "$target.text") {
                    n.op = Op::target_text;
                } else if (t.text == "$input") {
                    n.op = Op::input_text;
                } else if (t.text.front() == '$' || t.text == "contains") {
                    fail("unexpected '" + t.text + "'");
                } else {
                    n.op = Op::identifier;
                    n.name = t.text;
                }
                break;
            case Token::Kind::symbol:
                if (t.text == "(") {
                    const std::size_t inner = parse_or();
                    if (!is_symbol(")")) fail("expected ')'");
                    next();
                    return inner;
                }
                if (t.text == "[") {
                    if (!is_symbol("]")) fail("only the empty list literal [] is supported");
                    next();
                    n.literal = StringList{};
                    break;
                }
                fail("unexpected '" + t.text + "'");
            case Token::Kind::end:
                fail("unexpected end of expression");
        }
        nodes_.push_back(std::move(n));
        return nodes_.size() - 1;
    }
};

int compare_values(const Value& a, const Value& b, const std::string& src) {
    if (kind_of(a) != kind_of(b)) {
        throw ModelError("expression '" + src + "': cannot compare " + std::string(to_string(kind_of(a))) + " with " +
                         std::string(to_string(kind_of(b))));
    }
    if (a < b) return -1;
    if (b < a) return 1;
    return 0;
}

}  // namespace

Expression Expression::parse(std::string_view source) {
    Expression e;
    e.source_ = std::string(source);
    std::vector<Node> nodes;
    Parser parser(source, Lexer(source).run(), nodes);
    const std::size_t root = parser.parse_all();
    // Re-root so nodes_[0] is the entry point.
    e.nodes_.reserve(nodes.size() + 1);
    e.nodes_.push_back(nodes[root]);
    for (auto& n : nodes) {
        for (auto& a : n.args) ++a;
        e.nodes_.push_back(n);
    }
    for (auto& a : e.nodes_[0].args) ++a;
    return e;
}

Value Expression::eval(const EvalContext& ctx) const {
    if (nodes_.empty()) throw ModelError("empty expression");
    auto eval_node = [&](auto&& self, std::size_t index) -> Value {
        const Node& n = nodes_[index];
        switch (n.op) {
            case Op::literal: return n.literal;
            case Op::identifier: {
                if (ctx.locals) {
                    if (auto it = ctx.locals->find(n.name); it != ctx.locals->end()) return it->second;
                }
                if (ctx.variables) {
                    if (auto it = ctx.variables->find(n.name); it != ctx.variables->end()) return it->second;
                }
                throw ModelError("expression '" + source_ + "': unknown variable " + n.name);
            }
            case Op::target_text: return ctx.target_text.value_or("");
            case Op::input_text: return ctx.input_text.value_or("");
            case Op::logical_not: return !truthy(self(self, n.args[0]));
            case Op::logical_and: return truthy(self(self, n.args[0])) && truthy(self(self, n.args[1]));
            case Op::logical_or: return truthy(self(self, n.args[0])) || truthy(self(self, n.args[1]));
            case Op::contains: {
                const Value hay = self(self, n.args[0]);
                const Value needle = self(self, n.args[1]);
                if (!std::holds_alternative<std::string>(needle)) {
                    throw ModelError("expression '" + source_ + "': contains needs a string on the right");
                }
                const auto& s = std::get<std::string>(needle);
                if (const auto* list = std::get_if<StringList>(&hay)) {
                    return std::find(list->begin(), list->end(), s) != list->end();
                }
                if (const auto* str = std::get_if<std::string>(&hay)) return str->find(s) != std::string::npos;
                throw ModelError("expression '" + source_ + "': contains needs a list or string on the left");
            }
            default: {
                const int c = compare_values(self(self, n.args[0]), self(self, n.args[1]), source_);
                switch (n.op) {
                    case Op::eq: return c == 0;
                    case Op::ne: return c != 0;
                    case Op::lt: return c < 0;
                    case Op::le: return c <= 0;
                    case Op::gt: return c > 0;
                    default: return c >= 0;
                }
            }
        }
    };
    return eval_node(eval_node, 0);
}

std::set<std::string> Expression::identifiers() const {
    std::set<std::string> out;
    for (const auto& n : nodes_) {
        if (n.op == Op::identifier) out.insert(n.name);
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> Expression::compared_literals() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& n : nodes_) {
        if (n.args.size() != 2 || n.op == Op::logical_and || n.op == Op::logical_or) continue;
        const Node& a = nodes_[n.args[0]];
        const Node& b = nodes_[n.args[1]];
        auto literal = [](const Node& x) { return x.op == Op::literal && std::holds_alternative<std::string>(x.literal); };
        if (a.op == Op::identifier && literal(b)) out.emplace_back(a.name, std::get<std::string>(b.literal));
        if (b.op == Op::identifier && literal(a)) out.emplace_back(b.name, std::get<std::string>(a.literal));
    }
    return out;
}

Mutation Mutation::parse(std::string_view source) {
    Mutation m;
    m.source_ = std::string(source);
    const auto tokens = Lexer(source).run();
    if (tokens.size() < 3 || tokens[0].kind != Token::Kind::identifier || tokens[1].kind != Token::Kind::symbol) {
        throw ParseError("mutation '" + std::string(source) + "': expected <variable> (=|+=|-=) <expression>");
    }
    m.variable = tokens[0].text;
    if (tokens[1].text == "=") {
        m.op = Op::assign;
    } else if (tokens[1].text == "+=") {
        m.op = Op::add;
    } else if (tokens[1].text == "-=") {
        m.op = Op::remove;
    } else {
        throw ParseError("mutation '" + std::string(source) + "': unknown operator " + tokens[1].text);
    }
    m.value = Expression::parse(source.substr(tokens[2].offset));
    return m;
}

void Mutation::apply(Variables& vars, const EvalContext& ctx) const {
    auto it = vars.find(variable);
    if (it == vars.end()) throw ModelError("mutation '" + source_ + "': unknown variable " + variable);
    Value& target = it->second;
    const Value v = value.eval(ctx);
    auto mismatch = [&]() {
        return ModelError("mutation '" + source_ + "': cannot apply " + std::string(to_string(kind_of(v))) + " to " +
                          std::string(to_string(kind_of(target))) + " variable " + variable);
    };
    switch (op) {
        case Op::assign:
            if (kind_of(v) != kind_of(target)) throw mismatch();
            target = v;
            return;
        case Op::add:
            if (auto* list = std::get_if<StringList>(&target); list && std::holds_alternative<std::string>(v)) {
                list->push_back(std::get<std::string>(v));
            } else if (auto* n = std::get_if<std::int64_t>(&target); n && std::holds_alternative<std::int64_t>(v)) {
                *n += std::get<std::int64_t>(v);
            } else if (auto* s = std::get_if<std::string>(&target); s && std::holds_alternative<std::string>(v)) {
                *s += std::get<std::string>(v);
            } else {
                throw mismatch();
            }
            return;
        case Op::remove:
            if (auto* list = std::get_if<StringList>(&target); list && std::holds_alternative<std::string>(v)) {
                std::erase(*list, std::get<std::string>(v));
            } else if (auto* n = std::get_if<std::int64_t>(&target); n && std::holds_alternative<std::int64_t>(v)) {
                *n -= std::get<std::int64_t>(v);
            } else {
                throw mismatch();
            }
            return;
    }
}

}  // namespace intent_explorer::device
