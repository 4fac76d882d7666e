#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "alphalogics/dsl.hpp"

namespace alphalogics::logic {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

enum class Provenance { Mined, Generated, Refined };

std::string_view provenance_name(Provenance p);
Provenance provenance_from_name(std::string_view s);  // throws SchemaError

/// One condition c = (v, op, theta, w). theta is carried as an opaque token.
struct Predicate {
    std::string id;
    std::string v;
    std::string op;
    std::string theta;
    int w = 1;

    friend bool operator==(const Predicate&, const Predicate&) = default;
};

/// Boolean formula over predicate ids.
struct Formula {
    enum class Kind { Ref, And, Or, Not };
    Kind kind = Kind::Ref;
    std::string id;                 // Ref only
    std::vector<Formula> children;  // And/Or: >= 2, Not: 1

    static Formula parse(std::string_view text);  // throws SchemaError
    std::string to_string() const;
    void collect_ids(std::set<std::string>& out) const;

    friend bool operator==(const Formula&, const Formula&) = default;
};

struct Target {
    std::string y = "forward_return";
    int d = 1;  // +1 or -1
    int h = 1;  // horizon in days

    friend bool operator==(const Target&, const Target&) = default;
};

/// Canonical structured logic.
struct MarketLogicStruct {
    Formula formula;
    std::vector<Predicate> predicates;
    Target b;

    const Predicate* find(std::string_view id) const;
    friend bool operator==(const MarketLogicStruct&, const MarketLogicStruct&) = default;
};

struct ParamRule {
    int min = 1;
    std::optional<int> max;  // never set by compile: windows are advised, not bounded
    std::vector<int> advised;

    friend bool operator==(const ParamRule&, const ParamRule&) = default;
};

/// Compiled generation constraints.
struct ConstraintSet {
    std::set<std::string> allowed_variables;
    std::set<std::string> operator_families;
    std::map<std::string, ParamRule> parameter_constraints;  // by slot name
    Target direction;
    std::string direction_constraint;

    /// Families usable by a conforming expression (adds the glue families).
    std::set<std::string> admissible_families() const;
    /// Concrete catalogue operators reachable from `admissible_families()`.
    std::set<std::string> allowed_operators() const;

    friend bool operator==(const ConstraintSet&, const ConstraintSet&) = default;
};

struct MarketLogic {
    std::string id;
    Provenance provenance = Provenance::Mined;
    std::string logic_text;
    std::string c_text;
    std::string b_text;
    std::optional<MarketLogicStruct> h_struct;
    std::optional<ConstraintSet> gamma;

    /// Throws SchemaError when a text field is empty.
    void validate() const;
    friend bool operator==(const MarketLogic&, const MarketLogic&) = default;
};

struct Violation {
    std::string rule;  // "variable", "operator_family" or "parameter"
    std::string path;  // e.g. "root.args[0].args[1]"
    std::size_t position = 0;
    std::string message;
};

struct CheckReport {
    std::vector<Violation> violations;
    bool ok() const noexcept { return violations.empty(); }
    std::string summary() const;
};

/// Variable kind of a canonical predicate variable: "price", "volume" or
/// "return"; empty when unrecognized.
std::string variable_kind(std::string_view v);

/// Deterministic rule-table compilation; throws CompileError naming the
/// offending predicate.
ConstraintSet compile(const MarketLogicStruct& h);

CheckReport check(const dsl::FactorExpr& expr, const ConstraintSet& gamma);

/// Builds a canonical MarketLogicStruct from an agent payload: either an
/// H_struct object or a full output that carries one under "H_struct".
MarketLogicStruct canonicalize_fields(const Json& raw);

/// Token normalization used for v and op: lowercase, spaces/hyphens to '_'.
std::string normalize_token(std::string_view s);

// Record conversion. `*_json` omit the version; `serialize_*` add it and dump
// with sorted keys; `deserialize_*` check it.
Json to_json(const MarketLogicStruct& h);
Json to_json(const ConstraintSet& g);
Json to_json(const MarketLogic& m);
MarketLogicStruct struct_from_json(const Json& j);
ConstraintSet gamma_from_json(const Json& j);
MarketLogic logic_from_json(const Json& j);

std::string serialize(const MarketLogicStruct& h);
std::string serialize(const ConstraintSet& g);
std::string serialize(const MarketLogic& m);
MarketLogicStruct deserialize_struct(std::string_view text);
ConstraintSet deserialize_gamma(std::string_view text);
MarketLogic deserialize_logic(std::string_view text);

/// Ordered collection of logics with unique ids, stored as JSON lines.
class LogicLibrary {
public:
    const std::vector<MarketLogic>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool contains(std::string_view id) const;
    const MarketLogic* find(std::string_view id) const;

    /// Throws SchemaError on a duplicate id.
    void append(MarketLogic m);
    /// Overwrites the entry with the same id; throws SchemaError if absent.
    void replace(MarketLogic m);
    /// Id of the form "<prefix>-NNN" not yet present.
    std::string next_id(std::string_view prefix) const;

    std::string to_jsonl() const;
    static LogicLibrary from_jsonl(std::string_view text);
    void save(const std::filesystem::path& path) const;
    static LogicLibrary load(const std::filesystem::path& path);

    friend bool operator==(const LogicLibrary&, const LogicLibrary&) = default;

private:
    std::vector<MarketLogic> entries_;
};

} // namespace alphalogics::logic
