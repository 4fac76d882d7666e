#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "alphalogics/matrix.hpp"
#include "alphalogics/panel.hpp"

namespace alphalogics::dsl {

/// Operator families. The first six are the generation-level families used in
/// constraint sets; the rest group the remaining library operations.
enum class Family {
    Arithmetic,
    CrossSectional,
    TsAggregation,
    TsChange,
    TsRelation,
    Smoothing,
    Conditional,
    Regression,
    Technical,
    Mathematical,
};

inline constexpr Family kAllFamilies[] = {
    Family::Arithmetic, Family::CrossSectional, Family::TsAggregation, Family::TsChange,
    Family::TsRelation, Family::Smoothing,      Family::Conditional,   Family::Regression,
    Family::Technical,  Family::Mathematical,
};

std::string_view family_name(Family f);
std::optional<Family> family_from_name(std::string_view name);

/// Kind of each argument position of an operator.
enum class Slot {
    Series,    // any sub-expression
    Window,    // integer >= 1
    Lag,       // integer >= 1
    Degree,    // integer >= 1
    Modifier,  // integer >= 1 (SMA weight)
    Quantile,  // real in (0, 1)
    Sequence,  // SEQUENCE(n) or a series (regressor of REGBETA/REGRESI)
};

bool is_integer_slot(Slot s) noexcept;
std::string_view slot_name(Slot s);

enum class OutputKind { Series, Boolean, Sequence };

struct Signature {
    std::vector<Slot> slots;
    Family family;
};

struct OperatorInfo {
    std::string name;
    std::vector<Signature> forms;  // distinguished by arity
    OutputKind output = OutputKind::Series;
    std::string description;

    const Signature* form_for_arity(std::size_t arity) const;
};

/// Immutable table of every operator the DSL accepts.
class OperatorCatalogue {
public:
    static const OperatorCatalogue& instance();

    const OperatorInfo* find(std::string_view upper_name) const;
    const std::vector<OperatorInfo>& entries() const noexcept { return entries_; }
    std::vector<std::string> names() const;
    /// Operators that have at least one form in `family`.
    std::vector<std::string> operators_in(Family family) const;
    /// Human-readable listing of the library, embedded in agent prompts.
    std::string describe() const;

private:
    OperatorCatalogue();
    std::vector<OperatorInfo> entries_;
};

inline constexpr std::string_view kVariables[] = {"open", "high", "low", "close", "volume",
                                                  "return"};

struct Node {
    enum class Kind { Variable, Literal, Call };

    Kind kind = Kind::Literal;
    std::string name;  // variable name (lowercase) or operator name (uppercase)
    double value = 0.0;
    std::vector<Node> args;
    std::size_t pos = 0;  // source offset, informational only

    static Node variable(std::string name, std::size_t pos = 0);
    static Node literal(double v, std::size_t pos = 0);
    static Node call(std::string name, std::vector<Node> args, std::size_t pos = 0);

    /// Structural equality, ignoring source positions.
    friend bool operator==(const Node& a, const Node& b);
};

/// A validated factor expression.
class FactorExpr {
public:
    FactorExpr() = default;

    /// Validates `root` against the catalogue; throws ParseError.
    static FactorExpr from_ast(Node root);

    const Node& root() const noexcept { return root_; }
    friend bool operator==(const FactorExpr& a, const FactorExpr& b) { return a.root_ == b.root_; }

private:
    explicit FactorExpr(Node root) : root_(std::move(root)) {}
    Node root_;
};

/// Parses and validates expression text. Operator names are case-insensitive.
FactorExpr parse(std::string_view text);

/// Canonical text; parse(unparse(e)) == e.
std::string unparse(const FactorExpr& expr);
std::string unparse(const Node& node);

/// Negated expression; removes an outer NEG instead of stacking a second one.
FactorExpr negate(const FactorExpr& expr);

/// Evaluates over the panel grid. Never throws on numeric trouble: such
/// cells become missing.
Matrix evaluate(const FactorExpr& expr, const Panel& panel);

/// Number of leading dates guaranteed missing in the output.
std::size_t required_lookback(const FactorExpr& expr);

std::set<std::string> list_operators(const FactorExpr& expr);
std::set<std::string> list_variables(const FactorExpr& expr);

/// Family of the form used by a call node.
Family family_of(const Node& call);

} // namespace alphalogics::dsl
