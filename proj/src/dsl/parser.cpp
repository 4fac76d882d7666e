#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "alphalogics/dsl.hpp"
#include "alphalogics/error.hpp"

namespace alphalogics::dsl {

Node Node::variable(std::string name, std::size_t pos) {
    Node n;
    n.kind = Kind::Variable;
    n.name = std::move(name);
    n.pos = pos;
    return n;
}

Node Node::literal(double v, std::size_t pos) {
    Node n;
    n.kind = Kind::Literal;
    n.value = v;
    n.pos = pos;
    return n;
}

Node Node::call(std::string name, std::vector<Node> args, std::size_t pos) {
    Node n;
    n.kind = Kind::Call;
    n.name = std::move(name);
    n.args = std::move(args);
    n.pos = pos;
    return n;
}

bool operator==(const Node& a, const Node& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
    case Node::Kind::Variable: return a.name == b.name;
    case Node::Kind::Literal: return a.value == b.value;
    case Node::Kind::Call: return a.name == b.name && a.args == b.args;
    }
    return false;
}

namespace {

enum class Tok {
    Number, Ident, LParen, RParen, Comma, Plus, Minus, Star, Slash,
    Lt, Le, Gt, Ge, EqEq, Ne, AndAnd, OrOr, Question, Colon, End,
};

struct Token {
    Tok kind;
    std::size_t pos;
    std::string text;
    double number = 0.0;
};

std::vector<Token> lex(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
            while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.'))
                ++i;
            if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
                std::size_t j = i + 1;
                if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
                if (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
                    i = j;
                    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
                }
            }
            Token t{Tok::Number, start, std::string(s.substr(start, i - start))};
            auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
            if (ec != std::errc{} || p != t.text.data() + t.text.size() || !std::isfinite(t.number))
                throw ParseError("malformed number '" + t.text + "'", start);
            out.push_back(std::move(t));
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_'))
                ++i;
            out.push_back({Tok::Ident, start, std::string(s.substr(start, i - start))});
            continue;
        }
        auto two = [&](char a, char b) { return c == a && i + 1 < s.size() && s[i + 1] == b; };
        Tok k;
        std::size_t len = 1;
        if (two('<', '=')) k = Tok::Le, len = 2;
        else if (two('>', '=')) k = Tok::Ge, len = 2;
        else if (two('=', '=')) k = Tok::EqEq, len = 2;
        else if (two('!', '=')) k = Tok::Ne, len = 2;
        else if (two('&', '&')) k = Tok::AndAnd, len = 2;
        else if (two('|', '|')) k = Tok::OrOr, len = 2;
        else {
            switch (c) {
            case '(': k = Tok::LParen; break;
            case ')': k = Tok::RParen; break;
            case ',': k = Tok::Comma; break;
            case '+': k = Tok::Plus; break;
            case '-': k = Tok::Minus; break;
            case '*': k = Tok::Star; break;
            case '/': k = Tok::Slash; break;
            case '<': k = Tok::Lt; break;
            case '>': k = Tok::Gt; break;
            case '?': k = Tok::Question; break;
            case ':': k = Tok::Colon; break;
            default:
                throw ParseError(std::string("unexpected character '") + c + "'", start);
            }
        }
        out.push_back({k, start, std::string(s.substr(start, len))});
        i += len;
    }
    out.push_back({Tok::End, s.size(), ""});
    return out;
}

std::string to_upper(std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

std::string to_lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

class Parser {
public:
    explicit Parser(std::string_view text) : toks_(lex(text)) {}

    Node parse_all() {
        Node n = ternary();
        if (peek().kind != Tok::End) throw ParseError("unexpected '" + peek().text + "'", peek().pos);
        return n;
    }

private:
    const Token& peek() const { return toks_[i_]; }
    const Token& next() { return toks_[i_++]; }
    bool accept(Tok k) {
        if (peek().kind != k) return false;
        ++i_;
        return true;
    }
    void expect(Tok k, const char* what) {
        if (!accept(k)) {
            const Token& t = peek();
            throw ParseError(std::string("expected ") + what +
                                 (t.kind == Tok::End ? " but reached end of input"
                                                     : " but found '" + t.text + "'"),
                             t.pos);
        }
    }

    Node ternary() {
        Node cond = logical_or();
        if (peek().kind == Tok::Question) {
            const std::size_t pos = next().pos;
            Node a = ternary();
            expect(Tok::Colon, "':'");
            Node b = ternary();
            return Node::call("IFELSE", {std::move(cond), std::move(a), std::move(b)}, pos);
        }
        return cond;
    }

    Node logical_or() {
        Node lhs = logical_and();
        while (peek().kind == Tok::OrOr) {
            const std::size_t pos = next().pos;
            lhs = Node::call("OR", {std::move(lhs), logical_and()}, pos);
        }
        return lhs;
    }

    Node logical_and() {
        Node lhs = comparison();
        while (peek().kind == Tok::AndAnd) {
            const std::size_t pos = next().pos;
            lhs = Node::call("AND", {std::move(lhs), comparison()}, pos);
        }
        return lhs;
    }

    Node comparison() {
        Node lhs = additive();
        const char* op = nullptr;
        switch (peek().kind) {
        case Tok::Lt: op = "LT"; break;
        case Tok::Le: op = "LE"; break;
        case Tok::Gt: op = "GT"; break;
        case Tok::Ge: op = "GE"; break;
        case Tok::EqEq: op = "EQ"; break;
        case Tok::Ne: op = "NE"; break;
        default: return lhs;
        }
        const std::size_t pos = next().pos;
        return Node::call(op, {std::move(lhs), additive()}, pos);
    }

    Node additive() {
        Node lhs = multiplicative();
        for (;;) {
            if (peek().kind == Tok::Plus) {
                const std::size_t pos = next().pos;
                lhs = Node::call("ADD", {std::move(lhs), multiplicative()}, pos);
            } else if (peek().kind == Tok::Minus) {
                const std::size_t pos = next().pos;
                lhs = Node::call("SUB", {std::move(lhs), multiplicative()}, pos);
            } else {
                return lhs;
            }
        }
    }

    Node multiplicative() {
        Node lhs = unary();
        for (;;) {
            if (peek().kind == Tok::Star) {
                const std::size_t pos = next().pos;
                lhs = Node::call("MUL", {std::move(lhs), unary()}, pos);
            } else if (peek().kind == Tok::Slash) {
                const std::size_t pos = next().pos;
                lhs = Node::call("DIV", {std::move(lhs), unary()}, pos);
            } else {
                return lhs;
            }
        }
    }

    Node unary() {
        if (peek().kind == Tok::Minus) {
            const std::size_t pos = next().pos;
            // "-3" is a negative literal; "-(3)" stays a negation.
            if (peek().kind == Tok::Number) {
                const Token& t = next();
                return Node::literal(-t.number, pos);
            }
            return Node::call("NEG", {unary()}, pos);
        }
        if (peek().kind == Tok::Plus) {
            next();
            return unary();
        }
        return primary();
    }

    Node primary() {
        const Token& t = next();
        switch (t.kind) {
        case Tok::Number: return Node::literal(t.number, t.pos);
        case Tok::LParen: {
            Node n = ternary();
            expect(Tok::RParen, "')'");
            return n;
        }
        case Tok::Ident: {
            if (peek().kind == Tok::LParen) {
                next();
                std::vector<Node> args;
                if (peek().kind != Tok::RParen) {
                    args.push_back(ternary());
                    while (accept(Tok::Comma)) args.push_back(ternary());
                }
                expect(Tok::RParen, "')' or ','");
                return Node::call(to_upper(t.text), std::move(args), t.pos);
            }
            return Node::variable(to_lower(t.text), t.pos);
        }
        case Tok::End: throw ParseError("unexpected end of input", t.pos);
        default: throw ParseError("unexpected '" + t.text + "'", t.pos);
        }
    }

    std::vector<Token> toks_;
    std::size_t i_ = 0;
};

bool is_known_variable(const std::string& name) {
    return std::find(std::begin(kVariables), std::end(kVariables), name) != std::end(kVariables);
}

bool is_integral(double v) { return std::isfinite(v) && v == std::floor(v); }

void validate(const Node& n, bool sequence_allowed, bool& has_variable) {
    switch (n.kind) {
    case Node::Kind::Literal: return;
    case Node::Kind::Variable:
        if (!is_known_variable(n.name))
            throw ParseError("unknown variable '" + n.name + "'", n.pos);
        has_variable = true;
        return;
    case Node::Kind::Call: break;
    }
    const OperatorInfo* info = OperatorCatalogue::instance().find(n.name);
    if (!info) throw ParseError("unknown operator '" + n.name + "'", n.pos);
    const Signature* sig = info->form_for_arity(n.args.size());
    if (!sig) {
        std::string expected;
        for (const Signature& s : info->forms) {
            if (!expected.empty()) expected += " or ";
            expected += std::to_string(s.slots.size());
        }
        throw ParseError("arity mismatch: " + n.name + " takes " + expected + " argument(s), got " +
                             std::to_string(n.args.size()),
                         n.pos);
    }
    if (n.name == "SEQUENCE" && !sequence_allowed)
        throw ParseError("SEQUENCE is only allowed as argument B of REGBETA/REGRESI", n.pos);

    for (std::size_t i = 0; i < n.args.size(); ++i) {
        const Node& a = n.args[i];
        const Slot slot = sig->slots[i];
        if (slot == Slot::Series || slot == Slot::Sequence) {
            validate(a, slot == Slot::Sequence, has_variable);
            continue;
        }
        if (a.kind != Node::Kind::Literal)
            throw ParseError(n.name + " argument " + std::to_string(i + 1) + " (" +
                                 std::string(slot_name(slot)) + ") must be a numeric literal",
                             a.pos);
        if (is_integer_slot(slot)) {
            if (!is_integral(a.value) || a.value < 1 || a.value > 1e6)
                throw ParseError(n.name + " " + std::string(slot_name(slot)) +
                                     " must be a positive integer",
                                 a.pos);
        } else if (slot == Slot::Quantile) {
            if (!(a.value > 0.0 && a.value < 1.0))
                throw ParseError(n.name + " quantile must lie in (0, 1)", a.pos);
        }
    }

    if (n.name == "SMA" && n.args[2].value > n.args[1].value)
        throw ParseError("SMA modifier m must satisfy 1 <= m <= n", n.args[2].pos);
    if (n.name == "MACD" && !(n.args[1].value < n.args[2].value))
        throw ParseError("MACD short window must be smaller than long window", n.args[1].pos);
    if ((n.name == "REGBETA" || n.name == "REGRESI") && n.args[1].kind == Node::Kind::Call &&
        n.args[1].name == "SEQUENCE" && n.args[1].args[0].value != n.args[2].value)
        throw ParseError("SEQUENCE length must equal the regression window", n.args[1].pos);
}

std::string format_literal(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

const char* infix_symbol(const std::string& name) {
    if (name == "ADD") return "+";
    if (name == "SUB") return "-";
    if (name == "MUL") return "*";
    if (name == "DIV") return "/";
    if (name == "GT") return ">";
    if (name == "GE") return ">=";
    if (name == "LT") return "<";
    if (name == "LE") return "<=";
    if (name == "EQ") return "==";
    if (name == "NE") return "!=";
    if (name == "AND") return "&&";
    if (name == "OR") return "||";
    return nullptr;
}

void unparse_into(const Node& n, std::string& out) {
    switch (n.kind) {
    case Node::Kind::Variable: out += n.name; return;
    case Node::Kind::Literal: out += format_literal(n.value); return;
    case Node::Kind::Call: break;
    }
    if (const char* sym = infix_symbol(n.name); sym && n.args.size() == 2) {
        out += '(';
        unparse_into(n.args[0], out);
        out += ' ';
        out += sym;
        out += ' ';
        unparse_into(n.args[1], out);
        out += ')';
        return;
    }
    if (n.name == "NEG" && n.args.size() == 1) {
        const Node& a = n.args[0];
        out += '-';
        if (a.kind == Node::Kind::Literal) {
            out += '(';
            unparse_into(a, out);
            out += ')';
        } else {
            unparse_into(a, out);
        }
        return;
    }
    if (n.name == "IFELSE" && n.args.size() == 3) {
        out += '(';
        unparse_into(n.args[0], out);
        out += " ? ";
        unparse_into(n.args[1], out);
        out += " : ";
        unparse_into(n.args[2], out);
        out += ')';
        return;
    }
    out += n.name;
    out += '(';
    for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) out += ", ";
        unparse_into(n.args[i], out);
    }
    out += ')';
}

std::size_t int_arg(const Node& n, std::size_t i) { return static_cast<std::size_t>(n.args[i].value); }

std::size_t own_lookback(const Node& n) {
    const std::string& op = n.name;
    if (op == "DELAY" || op == "DELTA" || op == "TS_PCTCHANGE" || op == "RSI") return int_arg(n, 1);
    if (op == "TS_QUANTILE") return int_arg(n, 1) - 1;
    if (op == "PERCENTILE") return n.args.size() == 3 ? int_arg(n, 2) - 1 : 0;
    if (op == "TS_CORR" || op == "TS_COVARIANCE" || op == "REGBETA" || op == "REGRESI")
        return int_arg(n, 2) - 1;
    if (op == "SMA" || op == "EMA" || op == "MACD") return 0;
    const OperatorInfo* info = OperatorCatalogue::instance().find(op);
    const Signature* sig = info->form_for_arity(n.args.size());
    for (std::size_t i = 0; i < n.args.size(); ++i)
        if (sig->slots[i] == Slot::Window) return int_arg(n, i) - 1;
    return 0;
}

std::size_t lookback_of(const Node& n) {
    switch (n.kind) {
    case Node::Kind::Literal: return 0;
    case Node::Kind::Variable: return n.name == "return" ? 1 : 0;
    case Node::Kind::Call: break;
    }
    if (n.name == "SEQUENCE") return 0;
    const Signature* sig = OperatorCatalogue::instance().find(n.name)->form_for_arity(n.args.size());
    std::size_t child = 0;
    for (std::size_t i = 0; i < n.args.size(); ++i)
        if (sig->slots[i] == Slot::Series || sig->slots[i] == Slot::Sequence)
            child = std::max(child, lookback_of(n.args[i]));
    // Selection operators only propagate missingness from the branch taken.
    if (n.name == "IFELSE")
        return std::max(lookback_of(n.args[0]),
                        std::min(lookback_of(n.args[1]), lookback_of(n.args[2])));
    if (n.name == "FILTER") return lookback_of(n.args[1]);
    return child + own_lookback(n);
}

void collect(const Node& n, std::set<std::string>& ops, std::set<std::string>& vars) {
    if (n.kind == Node::Kind::Variable) vars.insert(n.name);
    if (n.kind != Node::Kind::Call) return;
    ops.insert(n.name);
    for (const Node& a : n.args) collect(a, ops, vars);
}

} // namespace

FactorExpr FactorExpr::from_ast(Node root) {
    bool has_variable = false;
    validate(root, false, has_variable);
    if (!has_variable) throw ParseError("expression references no market variable", root.pos);
    return FactorExpr(std::move(root));
}

FactorExpr parse(std::string_view text) {
    Parser p(text);
    return FactorExpr::from_ast(p.parse_all());
}

std::string unparse(const Node& node) {
    std::string out;
    unparse_into(node, out);
    return out;
}

std::string unparse(const FactorExpr& expr) { return unparse(expr.root()); }

FactorExpr negate(const FactorExpr& expr) {
    const Node& r = expr.root();
    if (r.kind == Node::Kind::Call && r.name == "NEG") return FactorExpr::from_ast(r.args[0]);
    return FactorExpr::from_ast(Node::call("NEG", {r}));
}

std::size_t required_lookback(const FactorExpr& expr) { return lookback_of(expr.root()); }

std::set<std::string> list_operators(const FactorExpr& expr) {
    std::set<std::string> ops, vars;
    collect(expr.root(), ops, vars);
    return ops;
}

std::set<std::string> list_variables(const FactorExpr& expr) {
    std::set<std::string> ops, vars;
    collect(expr.root(), ops, vars);
    return vars;
}

Family family_of(const Node& call) {
    const OperatorInfo* info = OperatorCatalogue::instance().find(call.name);
    if (!info) throw ParseError("unknown operator '" + call.name + "'", call.pos);
    const Signature* sig = info->form_for_arity(call.args.size());
    if (!sig) throw ParseError("arity mismatch for " + call.name, call.pos);
    return sig->family;
}

} // namespace alphalogics::dsl
