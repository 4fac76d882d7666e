#include "alphalogics/logic.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "alphalogics/error.hpp"

namespace alphalogics::logic {

namespace {

using Table = std::unordered_map<std::string, std::string>;

// synonym -> canonical variable
const Table& variable_synonyms() {
    static const Table t = [] {
        Table m;
        auto add = [&](const char* canon, std::initializer_list<const char*> syns) {
            m[canon] = canon;
            for (const char* s : syns) m[s] = canon;
        };
        add("price", {"prices", "px", "stock_price", "asset_price", "price_level"});
        add("open", {"open_price", "opening_price", "opens"});
        add("high", {"high_price", "intraday_high", "daily_high", "highs"});
        add("low", {"low_price", "intraday_low", "daily_low", "lows"});
        add("close", {"close_price", "closing_price", "closes", "last"});
        add("volume", {"vol", "volumes", "turnover", "trading_volume", "amount"});
        add("return", {"returns", "ret", "daily_return", "stock_return"});
        return m;
    }();
    return t;
}

enum class OpClass { Trend, Relation, Level, Event, Oscillator, Deviation };

struct OpEntry {
    std::string canonical;
    OpClass cls;
};

const std::unordered_map<std::string, OpEntry>& op_synonyms() {
    static const std::unordered_map<std::string, OpEntry> t = [] {
        std::unordered_map<std::string, OpEntry> m;
        auto add = [&](const char* canon, OpClass c, std::initializer_list<const char*> syns) {
            m[canon] = {canon, c};
            for (const char* s : syns) m[s] = {canon, c};
        };
        using C = OpClass;
        add("trend_up", C::Trend, {"up", "rise", "rises", "rising", "increase", "increases",
                                   "increasing", "uptrend", "up_trend"});
        add("trend_down", C::Trend, {"down", "fall", "falls", "falling", "decline", "declines",
                                     "declining", "decrease", "decreasing", "downtrend"});
        add("trend_not_up", C::Trend, {"not_up", "not_rising", "non_increasing", "no_increase",
                                       "not_increase", "does_not_rise"});
        add("trend_not_down", C::Trend, {"not_down", "not_falling", "non_decreasing"});
        add("trend_flat", C::Trend, {"flat", "stable", "unchanged", "sideways"});
        add("diverge", C::Relation, {"divergence", "diverges", "diverging"});
        add("converge", C::Relation, {"convergence", "converges", "converging"});
        add("co_move", C::Relation, {"comove", "co_movement", "correlate", "correlated",
                                     "correlation"});
        add("confirm", C::Relation, {"confirms", "confirmation"});
        add("not_confirm", C::Relation, {"no_confirmation", "unconfirmed", "lack_confirmation"});
        add("high_level", C::Level, {"high", "elevated", "relatively_high", "at_high"});
        add("low_level", C::Level, {"low", "depressed", "relatively_low", "at_low"});
        add("above", C::Level, {"gt", ">", "greater_than", "exceeds"});
        add("below", C::Level, {"lt", "<", "less_than"});
        add("extreme_high", C::Level, {"spike", "surge", "surges"});
        add("extreme_low", C::Level, {"collapse", "dry_up", "drought"});
        add("gap_up", C::Event, {"gaps_up"});
        add("gap_down", C::Event, {"gaps_down"});
        add("cross_above", C::Event, {"crosses_above", "breaks_above"});
        add("cross_below", C::Event, {"crosses_below", "breaks_below"});
        add("breakout", C::Event, {"break_out"});
        add("overbought", C::Oscillator, {});
        add("oversold", C::Oscillator, {});
        add("deviate", C::Deviation, {"deviation", "deviates"});
        return m;
    }();
    return t;
}

std::vector<const char*> families_for(OpClass c) {
    switch (c) {
    case OpClass::Trend: return {"ts_change", "ts_aggregation"};
    case OpClass::Relation: return {"ts_relation"};
    case OpClass::Level: return {"cross_sectional"};
    case OpClass::Event: return {"conditional_logical", "ts_change"};
    case OpClass::Oscillator: return {"technical_indicator"};
    case OpClass::Deviation: return {"regression", "ts_aggregation"};
    }
    return {};
}

const Table& target_synonyms() {
    static const Table t = {
        {"forward_return", "forward_return"}, {"forward_returns", "forward_return"},
        {"return", "forward_return"},         {"returns", "forward_return"},
        {"future_return", "forward_return"},  {"next_return", "forward_return"},
        {"next_period_return", "forward_return"}, {"ret", "forward_return"},
    };
    return t;
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::optional<long long> to_integer(const Json& j) {
    if (j.is_number_integer()) return j.get<long long>();
    if (j.is_number_float()) {
        const double v = j.get<double>();
        if (std::isfinite(v) && v == std::floor(v)) return static_cast<long long>(v);
        return std::nullopt;
    }
    if (j.is_string()) {
        std::string s = trim(j.get<std::string>());
        if (!s.empty() && s[0] == '+') s.erase(0, 1);
        long long v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec == std::errc{} && p == s.data() + s.size() && !s.empty()) return v;
    }
    return std::nullopt;
}

int positive_int(const Json& j, const std::string& what) {
    const auto v = to_integer(j);
    if (!v || *v < 1 || *v > 1000000) throw SchemaError(what + " must be a positive integer");
    return static_cast<int>(*v);
}

int direction_from(const Json& j) {
    if (const auto v = to_integer(j); v && (*v == 1 || *v == -1)) return static_cast<int>(*v);
    if (j.is_string()) {
        const std::string s = normalize_token(j.get<std::string>());
        if (s == "+" || s == "positive" || s == "up" || s == "long" || s == "pos") return 1;
        if (s == "-" || s == "negative" || s == "down" || s == "short" || s == "neg") return -1;
    }
    throw SchemaError("B.d must be +1 or -1, got " + j.dump());
}

std::string theta_from(const Json& j) {
    if (j.is_null()) return "";
    if (j.is_string()) return trim(j.get<std::string>());
    return j.dump();
}

const Json& require(const Json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw SchemaError(where + ": missing required field '" + key + "'");
    return j.at(key);
}

std::string require_string(const Json& j, const char* key, const std::string& where) {
    const Json& v = require(j, key, where);
    if (!v.is_string()) throw SchemaError(where + ": field '" + key + "' must be a string");
    return v.get<std::string>();
}

int require_int(const Json& j, const char* key, const std::string& where) {
    const Json& v = require(j, key, where);
    if (!v.is_number_integer()) throw SchemaError(where + ": field '" + key + "' must be an integer");
    return v.get<int>();
}

// ---- formula text ----

class FormulaParser {
public:
    explicit FormulaParser(std::string_view s) : s_(s) {}

    Formula parse() {
        Formula f = disjunction();
        skip_ws();
        if (i_ != s_.size()) fail("unexpected text");
        return f;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw SchemaError("formula: " + msg + " at position " + std::to_string(i_) + " in '" +
                          std::string(s_) + "'");
    }

    void skip_ws() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }

    bool symbol(std::initializer_list<std::string_view> options) {
        skip_ws();
        for (std::string_view o : options)
            if (s_.substr(i_, o.size()) == o) {
                i_ += o.size();
                return true;
            }
        return false;
    }

    bool keyword(std::string_view kw) {
        skip_ws();
        std::size_t j = i_;
        while (j < s_.size() && is_ident_char(s_[j])) ++j;
        if (j - i_ != kw.size()) return false;
        for (std::size_t k = 0; k < kw.size(); ++k)
            if (std::toupper(static_cast<unsigned char>(s_[i_ + k])) != kw[k]) return false;
        i_ = j;
        return true;
    }

    static bool is_ident_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
    }

    static void push_flat(Formula& parent, Formula child) {
        if (child.kind == parent.kind)
            for (Formula& g : child.children) parent.children.push_back(std::move(g));
        else
            parent.children.push_back(std::move(child));
    }

    Formula disjunction() {
        Formula lhs = conjunction();
        if (!(keyword("OR") || symbol({"||", "|", "\xE2\x88\xA8"}))) return lhs;
        Formula f;
        f.kind = Formula::Kind::Or;
        push_flat(f, std::move(lhs));
        do push_flat(f, conjunction());
        while (keyword("OR") || symbol({"||", "|", "\xE2\x88\xA8"}));
        return f;
    }

    Formula conjunction() {
        Formula lhs = negation();
        if (!(keyword("AND") || symbol({"&&", "&", "\xE2\x88\xA7"}))) return lhs;
        Formula f;
        f.kind = Formula::Kind::And;
        push_flat(f, std::move(lhs));
        do push_flat(f, negation());
        while (keyword("AND") || symbol({"&&", "&", "\xE2\x88\xA7"}));
        return f;
    }

    Formula negation() {
        if (keyword("NOT") || symbol({"!", "\xC2\xAC"})) {
            Formula f;
            f.kind = Formula::Kind::Not;
            f.children.push_back(negation());
            return f;
        }
        return atom();
    }

    Formula atom() {
        skip_ws();
        if (symbol({"("})) {
            Formula f = disjunction();
            if (!symbol({")"})) fail("expected ')'");
            return f;
        }
        const std::size_t start = i_;
        while (i_ < s_.size() && is_ident_char(s_[i_])) ++i_;
        if (i_ == start) fail("expected a predicate id");
        Formula f;
        f.id = std::string(s_.substr(start, i_ - start));
        return f;
    }

    std::string_view s_;
    std::size_t i_ = 0;
};

void print_formula(const Formula& f, std::string& out, bool nested) {
    switch (f.kind) {
    case Formula::Kind::Ref: out += f.id; return;
    case Formula::Kind::Not:
        out += "NOT ";
        print_formula(f.children[0], out, true);
        return;
    case Formula::Kind::And:
    case Formula::Kind::Or: {
        if (nested) out += '(';
        const char* sep = f.kind == Formula::Kind::And ? " AND " : " OR ";
        for (std::size_t i = 0; i < f.children.size(); ++i) {
            if (i) out += sep;
            print_formula(f.children[i], out, true);
        }
        if (nested) out += ')';
        return;
    }
    }
}

// ---- check ----

void check_node(const dsl::Node& n, const std::string& path, const ConstraintSet& g,
                const std::set<std::string>& families, CheckReport& rep) {
    using dsl::Node;
    if (n.kind == Node::Kind::Variable) {
        if (!g.allowed_variables.count(n.name))
            rep.violations.push_back({"variable", path, n.pos,
                                      "variable '" + n.name + "' is not in allowed_variables"});
        return;
    }
    if (n.kind != Node::Kind::Call) return;
    const std::string fam(dsl::family_name(dsl::family_of(n)));
    if (!families.count(fam))
        rep.violations.push_back({"operator_family", path, n.pos,
                                  "operator " + n.name + " belongs to family '" + fam +
                                      "', which is not allowed"});
    const auto* info = dsl::OperatorCatalogue::instance().find(n.name);
    const auto* sig = info ? info->form_for_arity(n.args.size()) : nullptr;
    for (std::size_t i = 0; i < n.args.size(); ++i) {
        const std::string child = path + ".args[" + std::to_string(i) + "]";
        if (sig && dsl::is_integer_slot(sig->slots[i])) {
            const std::string slot(dsl::slot_name(sig->slots[i]));
            const auto it = g.parameter_constraints.find(slot);
            if (it == g.parameter_constraints.end()) continue;
            const double v = n.args[i].value;
            if (v < it->second.min || (it->second.max && v > *it->second.max))
                rep.violations.push_back({"parameter", child, n.args[i].pos,
                                          n.name + " " + slot + " " + std::to_string(static_cast<long long>(v)) +
                                              " is outside the allowed range"});
            continue;
        }
        check_node(n.args[i], child, g, families, rep);
    }
}

} // namespace

std::string_view provenance_name(Provenance p) {
    switch (p) {
    case Provenance::Mined: return "mined";
    case Provenance::Generated: return "generated";
    case Provenance::Refined: return "refined";
    }
    return "?";
}

Provenance provenance_from_name(std::string_view s) {
    if (s == "mined") return Provenance::Mined;
    if (s == "generated") return Provenance::Generated;
    if (s == "refined") return Provenance::Refined;
    throw SchemaError("unknown provenance '" + std::string(s) + "'");
}

std::string normalize_token(std::string_view s) {
    std::string out;
    for (char c : trim(s)) {
        if (c == ' ' || c == '-' || c == '\t') c = '_';
        else c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (c == '_' && (out.empty() || out.back() == '_')) continue;
        out += c;
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out;
}

Formula Formula::parse(std::string_view text) { return FormulaParser(text).parse(); }

std::string Formula::to_string() const {
    std::string out;
    print_formula(*this, out, false);
    return out;
}

void Formula::collect_ids(std::set<std::string>& out) const {
    if (kind == Kind::Ref) out.insert(id);
    for (const Formula& c : children) c.collect_ids(out);
}

const Predicate* MarketLogicStruct::find(std::string_view id) const {
    for (const Predicate& p : predicates)
        if (p.id == id) return &p;
    return nullptr;
}

std::set<std::string> ConstraintSet::admissible_families() const {
    std::set<std::string> out = operator_families;
    out.insert(std::string(dsl::family_name(dsl::Family::Arithmetic)));
    out.insert(std::string(dsl::family_name(dsl::Family::Mathematical)));
    return out;
}

std::set<std::string> ConstraintSet::allowed_operators() const {
    std::set<std::string> out;
    for (const std::string& f : admissible_families())
        if (const auto fam = dsl::family_from_name(f))
            for (const std::string& op : dsl::OperatorCatalogue::instance().operators_in(*fam))
                out.insert(op);
    return out;
}

void MarketLogic::validate() const {
    if (trim(logic_text).empty()) throw SchemaError("logic '" + id + "': logic_text is empty");
    if (trim(c_text).empty()) throw SchemaError("logic '" + id + "': c_text is empty");
    if (trim(b_text).empty()) throw SchemaError("logic '" + id + "': b_text is empty");
}

std::string CheckReport::summary() const {
    std::string s;
    for (const Violation& v : violations) {
        if (!s.empty()) s += "; ";
        s += v.rule + " at " + v.path + ": " + v.message;
    }
    return s;
}

std::string variable_kind(std::string_view v) {
    if (v == "price" || v == "open" || v == "high" || v == "low" || v == "close") return "price";
    if (v == "volume") return "volume";
    if (v == "return") return "return";
    return "";
}

ConstraintSet compile(const MarketLogicStruct& h) {
    if (h.predicates.empty()) throw CompileError("", "logic has no predicates");
    ConstraintSet g;
    std::set<std::string> kinds;
    std::set<int> windows;
    bool smoothing = false;
    for (const Predicate& p : h.predicates) {
        const std::string kind = variable_kind(p.v);
        if (kind.empty()) throw CompileError(p.id, "unrecognized variable '" + p.v + "'");
        const auto it = op_synonyms().find(p.op);
        if (it == op_synonyms().end() || it->second.canonical != p.op)
            throw CompileError(p.id, "unrecognized operator token '" + p.op + "'");
        if (p.w < 1) throw CompileError(p.id, "window w must be >= 1");
        kinds.insert(kind);
        if (kind == "price") g.allowed_variables.insert({"open", "high", "low", "close"});
        else if (kind == "volume") g.allowed_variables.insert("volume");
        else g.allowed_variables.insert({"close", "return"});
        for (const char* f : families_for(it->second.cls)) g.operator_families.insert(f);
        windows.insert(p.w);
        smoothing = smoothing || p.w > 1;
    }
    if (smoothing) g.operator_families.insert("smoothing_decay");
    // conditions spanning several variable kinds relate series to each other
    if (kinds.size() >= 2) g.operator_families.insert({"ts_relation", "cross_sectional"});

    const std::vector<int> advised(windows.begin(), windows.end());
    for (const char* slot : {"window", "lag", "degree", "modifier"}) {
        ParamRule r;
        if (std::string_view(slot) == "window" || std::string_view(slot) == "lag") r.advised = advised;
        g.parameter_constraints[slot] = r;
    }
    g.direction = h.b;
    g.direction_constraint = h.b.d < 0 ? "prefer factors with negative IC on the validation split"
                                       : "prefer factors with positive IC on the validation split";
    return g;
}

CheckReport check(const dsl::FactorExpr& expr, const ConstraintSet& gamma) {
    CheckReport rep;
    check_node(expr.root(), "root", gamma, gamma.admissible_families(), rep);
    return rep;
}

MarketLogicStruct canonicalize_fields(const Json& raw_in) {
    const Json& raw = raw_in.is_object() && raw_in.contains("H_struct") ? raw_in.at("H_struct") : raw_in;
    if (!raw.is_object()) throw SchemaError("H_struct must be an object");
    const Json& c = require(raw, "C", "H_struct");
    const Json& b = require(raw, "B", "H_struct");
    if (!c.is_object()) throw SchemaError("H_struct.C must be an object");
    if (!b.is_object()) throw SchemaError("H_struct.B must be an object");

    MarketLogicStruct h;
    const Json& preds = require(c, "predicates", "H_struct.C");
    if (!preds.is_array() || preds.empty()) throw SchemaError("H_struct.C.predicates must be a non-empty array");
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const Json& r = preds[i];
        const std::string where = "predicate " + std::to_string(i + 1);
        if (!r.is_object()) throw SchemaError(where + " must be an object");
        Predicate p;
        p.id = r.contains("id") && r["id"].is_string() ? trim(r["id"].get<std::string>()) : "";
        if (p.id.empty()) p.id = "p" + std::to_string(i + 1);
        const std::string v = normalize_token(require_string(r, "v", where));
        const auto vit = variable_synonyms().find(v);
        p.v = vit == variable_synonyms().end() ? v : vit->second;
        const std::string op = normalize_token(require_string(r, "op", where));
        const auto oit = op_synonyms().find(op);
        p.op = oit == op_synonyms().end() ? op : oit->second.canonical;
        p.theta = r.contains("theta") ? theta_from(r["theta"]) : "";
        p.w = r.contains("w") && !r["w"].is_null() ? positive_int(r["w"], where + ".w") : 1;

        if (const Predicate* prev = h.find(p.id)) {
            if (*prev == p) continue;
            throw SchemaError("contradictory duplicate predicate id '" + p.id + "'");
        }
        h.predicates.push_back(std::move(p));
    }

    const std::string text = c.contains("formula") && c["formula"].is_string()
                                 ? trim(c["formula"].get<std::string>())
                                 : "";
    if (text.empty()) {
        if (h.predicates.size() == 1) {
            h.formula.id = h.predicates[0].id;
        } else {
            h.formula.kind = Formula::Kind::And;
            for (const Predicate& p : h.predicates) {
                Formula ref;
                ref.id = p.id;
                h.formula.children.push_back(std::move(ref));
            }
        }
    } else {
        h.formula = Formula::parse(text);
    }
    std::set<std::string> ids;
    h.formula.collect_ids(ids);
    for (const std::string& id : ids)
        if (!h.find(id)) throw SchemaError("formula references unknown predicate '" + id + "'");

    const std::string y = b.contains("y") && b["y"].is_string() ? normalize_token(b["y"].get<std::string>())
                                                                : "forward_return";
    const auto yit = target_synonyms().find(y);
    if (yit == target_synonyms().end()) throw SchemaError("unsupported target B.y '" + y + "'");
    h.b.y = yit->second;
    if (!b.contains("d") || b["d"].is_null()) throw SchemaError("B.d is required");
    h.b.d = direction_from(b["d"]);
    h.b.h = b.contains("h") && !b["h"].is_null() ? positive_int(b["h"], "B.h") : 1;
    return h;
}

// ---- records ----

Json to_json(const MarketLogicStruct& h) {
    Json preds = Json::array();
    for (const Predicate& p : h.predicates)
        preds.push_back({{"id", p.id}, {"v", p.v}, {"op", p.op}, {"theta", p.theta}, {"w", p.w}});
    return {{"C", {{"formula", h.formula.to_string()}, {"predicates", preds}}},
            {"B", {{"y", h.b.y}, {"d", h.b.d}, {"h", h.b.h}}}};
}

Json to_json(const ConstraintSet& g) {
    Json params = Json::object();
    for (const auto& [slot, r] : g.parameter_constraints)
        params[slot] = {{"min", r.min}, {"max", r.max ? Json(*r.max) : Json(nullptr)}, {"advised", r.advised}};
    return {{"allowed_variables", g.allowed_variables},
            {"operator_families", g.operator_families},
            {"parameter_constraints", params},
            {"direction", {{"y", g.direction.y}, {"d", g.direction.d}, {"h", g.direction.h}}},
            {"direction_constraint", g.direction_constraint}};
}

Json to_json(const MarketLogic& m) {
    Json j = {{"id", m.id},
              {"provenance", std::string(provenance_name(m.provenance))},
              {"logic_text", m.logic_text},
              {"c_text", m.c_text},
              {"b_text", m.b_text}};
    if (m.h_struct) j["H_struct"] = to_json(*m.h_struct);
    if (m.gamma) j["Gamma"] = to_json(*m.gamma);
    return j;
}

MarketLogicStruct struct_from_json(const Json& j) {
    const Json& c = require(j, "C", "H_struct");
    const Json& b = require(j, "B", "H_struct");
    MarketLogicStruct h;
    const Json& preds = require(c, "predicates", "H_struct.C");
    if (!preds.is_array()) throw SchemaError("H_struct.C.predicates must be an array");
    for (const Json& r : preds) {
        Predicate p;
        p.id = require_string(r, "id", "predicate");
        p.v = require_string(r, "v", "predicate");
        p.op = require_string(r, "op", "predicate");
        p.theta = require_string(r, "theta", "predicate");
        p.w = require_int(r, "w", "predicate");
        if (h.find(p.id)) throw SchemaError("duplicate predicate id '" + p.id + "'");
        h.predicates.push_back(std::move(p));
    }
    h.formula = Formula::parse(require_string(c, "formula", "H_struct.C"));
    std::set<std::string> ids;
    h.formula.collect_ids(ids);
    for (const std::string& id : ids)
        if (!h.find(id)) throw SchemaError("formula references unknown predicate '" + id + "'");
    h.b.y = require_string(b, "y", "H_struct.B");
    h.b.d = require_int(b, "d", "H_struct.B");
    h.b.h = require_int(b, "h", "H_struct.B");
    if (h.b.d != 1 && h.b.d != -1) throw SchemaError("H_struct.B.d must be +1 or -1");
    return h;
}

ConstraintSet gamma_from_json(const Json& j) {
    ConstraintSet g;
    const Json& vars = require(j, "allowed_variables", "Gamma");
    const Json& fams = require(j, "operator_families", "Gamma");
    try {
        g.allowed_variables = vars.get<std::set<std::string>>();
        g.operator_families = fams.get<std::set<std::string>>();
    } catch (const Json::exception&) {
        throw SchemaError("Gamma variable and family lists must be arrays of strings");
    }
    for (const auto& [slot, r] : require(j, "parameter_constraints", "Gamma").items()) {
        ParamRule rule;
        rule.min = require_int(r, "min", "parameter_constraints." + slot);
        const Json& mx = require(r, "max", "parameter_constraints." + slot);
        if (!mx.is_null()) rule.max = mx.get<int>();
        rule.advised = require(r, "advised", "parameter_constraints." + slot).get<std::vector<int>>();
        g.parameter_constraints[slot] = rule;
    }
    const Json& d = require(j, "direction", "Gamma");
    g.direction.y = require_string(d, "y", "Gamma.direction");
    g.direction.d = require_int(d, "d", "Gamma.direction");
    g.direction.h = require_int(d, "h", "Gamma.direction");
    g.direction_constraint = require_string(j, "direction_constraint", "Gamma");
    return g;
}

MarketLogic logic_from_json(const Json& j) {
    MarketLogic m;
    m.id = require_string(j, "id", "logic");
    m.provenance = provenance_from_name(require_string(j, "provenance", "logic"));
    m.logic_text = require_string(j, "logic_text", "logic");
    m.c_text = require_string(j, "c_text", "logic");
    m.b_text = require_string(j, "b_text", "logic");
    if (j.contains("H_struct") && !j["H_struct"].is_null()) m.h_struct = struct_from_json(j["H_struct"]);
    if (j.contains("Gamma") && !j["Gamma"].is_null()) m.gamma = gamma_from_json(j["Gamma"]);
    m.validate();
    return m;
}

namespace {

std::string with_version(Json j) {
    j["schema_version"] = kSchemaVersion;
    return j.dump();
}

Json parse_versioned(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw SchemaError(std::string("corrupt record: ") + e.what());
    }
    if (!j.is_object()) throw SchemaError("corrupt record: not an object");
    if (!j.contains("schema_version")) throw SchemaError("record is missing schema_version");
    if (j["schema_version"] != kSchemaVersion)
        throw SchemaError("schema version mismatch: expected " + std::to_string(kSchemaVersion) +
                          ", found " + j["schema_version"].dump());
    j.erase("schema_version");
    return j;
}

} // namespace

std::string serialize(const MarketLogicStruct& h) { return with_version(to_json(h)); }
std::string serialize(const ConstraintSet& g) { return with_version(to_json(g)); }
std::string serialize(const MarketLogic& m) { return with_version(to_json(m)); }

MarketLogicStruct deserialize_struct(std::string_view text) {
    return struct_from_json(parse_versioned(text));
}
ConstraintSet deserialize_gamma(std::string_view text) { return gamma_from_json(parse_versioned(text)); }
MarketLogic deserialize_logic(std::string_view text) { return logic_from_json(parse_versioned(text)); }

// ---- library ----

bool LogicLibrary::contains(std::string_view id) const { return find(id) != nullptr; }

const MarketLogic* LogicLibrary::find(std::string_view id) const {
    for (const MarketLogic& m : entries_)
        if (m.id == id) return &m;
    return nullptr;
}

void LogicLibrary::append(MarketLogic m) {
    if (m.id.empty()) throw SchemaError("logic id must not be empty");
    if (contains(m.id)) throw SchemaError("duplicate logic id '" + m.id + "'");
    m.validate();
    entries_.push_back(std::move(m));
}

void LogicLibrary::replace(MarketLogic m) {
    m.validate();
    for (MarketLogic& e : entries_)
        if (e.id == m.id) {
            e = std::move(m);
            return;
        }
    throw SchemaError("no logic with id '" + m.id + "'");
}

std::string LogicLibrary::next_id(std::string_view prefix) const {
    for (std::size_t k = entries_.size() + 1;; ++k) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%03zu", k);
        std::string id = std::string(prefix) + "-" + buf;
        if (!contains(id)) return id;
    }
}

std::string LogicLibrary::to_jsonl() const {
    std::string out;
    for (const MarketLogic& m : entries_) out += serialize(m) + "\n";
    return out;
}

LogicLibrary LogicLibrary::from_jsonl(std::string_view text) {
    LogicLibrary lib;
    std::size_t line_no = 0, start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        ++line_no;
        const std::string line = trim(text.substr(start, end - start));
        start = end + 1;
        if (line.empty()) continue;
        try {
            lib.append(deserialize_logic(line));
        } catch (const SchemaError& e) {
            throw SchemaError("logic library line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return lib;
}

void LogicLibrary::save(const std::filesystem::path& path) const {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp);
        out << to_jsonl();
        if (!out) throw Error("write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

LogicLibrary LogicLibrary::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open logic library " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_jsonl(ss.str());
}

} // namespace alphalogics::logic
