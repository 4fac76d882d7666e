#include <algorithm>
#include <sstream>

#include "alphalogics/dsl.hpp"

namespace alphalogics::dsl {

std::string_view family_name(Family f) {
    switch (f) {
    case Family::Arithmetic: return "arithmetic";
    case Family::CrossSectional: return "cross_sectional";
    case Family::TsAggregation: return "ts_aggregation";
    case Family::TsChange: return "ts_change";
    case Family::TsRelation: return "ts_relation";
    case Family::Smoothing: return "smoothing_decay";
    case Family::Conditional: return "conditional_logical";
    case Family::Regression: return "regression";
    case Family::Technical: return "technical_indicator";
    case Family::Mathematical: return "mathematical";
    }
    return "?";
}

std::optional<Family> family_from_name(std::string_view name) {
    for (Family f : kAllFamilies)
        if (family_name(f) == name) return f;
    return std::nullopt;
}

bool is_integer_slot(Slot s) noexcept {
    return s == Slot::Window || s == Slot::Lag || s == Slot::Degree || s == Slot::Modifier;
}

std::string_view slot_name(Slot s) {
    switch (s) {
    case Slot::Series: return "series";
    case Slot::Window: return "window";
    case Slot::Lag: return "lag";
    case Slot::Degree: return "degree";
    case Slot::Modifier: return "modifier";
    case Slot::Quantile: return "quantile";
    case Slot::Sequence: return "sequence";
    }
    return "?";
}

const Signature* OperatorInfo::form_for_arity(std::size_t arity) const {
    for (const Signature& s : forms)
        if (s.slots.size() == arity) return &s;
    return nullptr;
}

OperatorCatalogue::OperatorCatalogue() {
    using S = Slot;
    using F = Family;
    auto add = [&](std::string name, std::vector<Signature> forms, std::string desc,
                   OutputKind out = OutputKind::Series) {
        entries_.push_back({std::move(name), std::move(forms), out, std::move(desc)});
    };
    const std::vector<S> A = {S::Series};
    const std::vector<S> AB = {S::Series, S::Series};
    const std::vector<S> An = {S::Series, S::Window};

    // arithmetic glue (infix in expression text)
    add("ADD", {{AB, F::Arithmetic}}, "A + B");
    add("SUB", {{AB, F::Arithmetic}}, "A - B");
    add("MUL", {{AB, F::Arithmetic}}, "A * B");
    add("DIV", {{AB, F::Arithmetic}}, "A / B");
    add("NEG", {{A, F::Arithmetic}}, "-A");

    // cross-sectional
    add("RANK", {{A, F::CrossSectional}}, "cross-sectional rank of A mapped to [0, 1]");
    add("ZSCORE", {{A, F::CrossSectional}}, "cross-sectional z-score of A");
    add("MEAN", {{A, F::CrossSectional}}, "cross-sectional mean of A");
    add("STD", {{A, F::CrossSectional}}, "cross-sectional standard deviation of A");
    add("SKEW", {{A, F::CrossSectional}}, "cross-sectional skewness of A");
    add("KURT", {{A, F::CrossSectional}}, "cross-sectional excess kurtosis of A");
    add("MEDIAN", {{A, F::CrossSectional}}, "cross-sectional median of A");
    add("MAX", {{A, F::CrossSectional}, {AB, F::Mathematical}},
        "MAX(A): cross-sectional maximum; MAX(A, B): element-wise maximum");
    add("MIN", {{A, F::CrossSectional}, {AB, F::Mathematical}},
        "MIN(A): cross-sectional minimum; MIN(A, B): element-wise minimum");
    add("PERCENTILE",
        {{{S::Series, S::Quantile}, F::CrossSectional},
         {{S::Series, S::Quantile, S::Window}, F::TsAggregation}},
        "PERCENTILE(A, q): cross-sectional q-quantile; PERCENTILE(A, q, p): rolling q-quantile "
        "over p periods");

    // time-series change
    add("DELTA", {{{S::Series, S::Lag}, F::TsChange}}, "A - DELAY(A, n)");
    add("DELAY", {{{S::Series, S::Lag}, F::TsChange}}, "A lagged by n periods");
    add("TS_PCTCHANGE", {{{S::Series, S::Lag}, F::TsChange}}, "A / DELAY(A, p) - 1");

    // time-series aggregation
    add("TS_MEAN", {{An, F::TsAggregation}}, "rolling mean over n days");
    add("TS_SUM", {{An, F::TsAggregation}}, "rolling sum over n days");
    add("TS_RANK", {{An, F::TsAggregation}}, "rank of the last value within its n-window, in [0, 1]");
    add("TS_ZSCORE", {{An, F::TsAggregation}}, "z-score of the last value within its n-window");
    add("TS_MEDIAN", {{An, F::TsAggregation}}, "rolling median over n days");
    add("TS_MIN", {{An, F::TsAggregation}}, "rolling minimum over n days");
    add("TS_MAX", {{An, F::TsAggregation}}, "rolling maximum over n days");
    add("TS_ARGMAX", {{An, F::TsAggregation}}, "days since the n-window maximum");
    add("TS_ARGMIN", {{An, F::TsAggregation}}, "days since the n-window minimum");
    add("TS_QUANTILE", {{{S::Series, S::Window, S::Quantile}, F::TsAggregation}},
        "rolling q-quantile over p periods");
    add("TS_STD", {{An, F::TsAggregation}}, "rolling population standard deviation");
    add("TS_VAR", {{An, F::TsAggregation}}, "rolling population variance");
    add("TS_MAD", {{An, F::TsAggregation}}, "rolling median absolute deviation");
    add("HIGHDAY", {{An, F::TsAggregation}}, "days since the highest value in the n-window");
    add("LOWDAY", {{An, F::TsAggregation}}, "days since the lowest value in the n-window");
    add("SUMAC", {{An, F::TsAggregation}}, "cumulative sum over the past n days");

    // time-series relation
    add("TS_CORR", {{{S::Series, S::Series, S::Window}, F::TsRelation}}, "rolling correlation");
    add("TS_COVARIANCE", {{{S::Series, S::Series, S::Window}, F::TsRelation}},
        "rolling population covariance");

    // smoothing / decay
    add("SMA", {{{S::Series, S::Window, S::Modifier}, F::Smoothing}},
        "recursive average Y = (m*A + (n-m)*Y_prev) / n");
    add("WMA", {{An, F::Smoothing}}, "weighted average, weights 0.9 (newest) to 0.9^n (oldest)");
    add("EMA", {{An, F::Smoothing}}, "exponential average with alpha = 2/(n+1)");
    add("DECAYLINEAR", {{An, F::Smoothing}}, "linearly weighted average, weights 1 (oldest) to d (newest)");

    // mathematical
    add("PROD", {{An, F::Mathematical}}, "rolling product over n days");
    add("LOG", {{A, F::Mathematical}}, "natural logarithm");
    add("SQRT", {{A, F::Mathematical}}, "square root");
    add("POW", {{{S::Series, S::Degree}, F::Mathematical}}, "A raised to the integer power n");
    add("SIGN", {{A, F::Mathematical}}, "sign of A (1, 0, -1)");
    add("EXP", {{A, F::Mathematical}}, "exponential");
    add("ABS", {{A, F::Mathematical}}, "absolute value");
    add("INV", {{A, F::Mathematical}}, "reciprocal 1/A");
    add("FLOOR", {{A, F::Mathematical}}, "floor");

    // conditional / logical
    add("GT", {{AB, F::Conditional}}, "A > B", OutputKind::Boolean);
    add("GE", {{AB, F::Conditional}}, "A >= B", OutputKind::Boolean);
    add("LT", {{AB, F::Conditional}}, "A < B", OutputKind::Boolean);
    add("LE", {{AB, F::Conditional}}, "A <= B", OutputKind::Boolean);
    add("EQ", {{AB, F::Conditional}}, "A == B", OutputKind::Boolean);
    add("NE", {{AB, F::Conditional}}, "A != B", OutputKind::Boolean);
    add("AND", {{AB, F::Conditional}}, "(C1) && (C2)", OutputKind::Boolean);
    add("OR", {{AB, F::Conditional}}, "(C1) || (C2)", OutputKind::Boolean);
    add("IFELSE", {{{S::Series, S::Series, S::Series}, F::Conditional}}, "(C) ? (A) : (B)");
    add("COUNT", {{An, F::Conditional}}, "number of days C holds in the past n");
    add("SUMIF", {{{S::Series, S::Window, S::Series}, F::Conditional}},
        "sum of A over the past n days where C holds");
    add("FILTER", {{AB, F::Conditional}}, "A where C holds, else 0");

    // regression
    add("SEQUENCE", {{{S::Window}, F::Regression}}, "1..n time index; only as B of REGBETA/REGRESI",
        OutputKind::Sequence);
    add("REGBETA", {{{S::Series, S::Sequence, S::Window}, F::Regression}},
        "rolling slope of A on B over n samples");
    add("REGRESI", {{{S::Series, S::Sequence, S::Window}, F::Regression}},
        "rolling regression residual of A on B at the current sample");

    // technical indicators
    add("RSI", {{An, F::Technical}}, "relative strength index over n changes, in [0, 100]");
    add("MACD", {{{S::Series, S::Window, S::Window}, F::Technical}}, "EMA(A, short) - EMA(A, long)");
    add("BB_MIDDLE", {{An, F::Technical}}, "n-period mean");
    add("BB_UPPER", {{An, F::Technical}}, "middle band + 2 std");
    add("BB_LOWER", {{An, F::Technical}}, "middle band - 2 std");
}

const OperatorCatalogue& OperatorCatalogue::instance() {
    static const OperatorCatalogue cat;
    return cat;
}

const OperatorInfo* OperatorCatalogue::find(std::string_view upper_name) const {
    for (const OperatorInfo& e : entries_)
        if (e.name == upper_name) return &e;
    return nullptr;
}

std::vector<std::string> OperatorCatalogue::names() const {
    std::vector<std::string> out;
    for (const OperatorInfo& e : entries_) out.push_back(e.name);
    return out;
}

std::vector<std::string> OperatorCatalogue::operators_in(Family family) const {
    std::vector<std::string> out;
    for (const OperatorInfo& e : entries_)
        if (std::any_of(e.forms.begin(), e.forms.end(),
                        [&](const Signature& s) { return s.family == family; }))
            out.push_back(e.name);
    return out;
}

std::string OperatorCatalogue::describe() const {
    std::ostringstream os;
    os << "Variables: open, high, low, close, volume, return.\n";
    for (Family f : kAllFamilies) {
        os << family_name(f) << ":\n";
        for (const OperatorInfo& e : entries_) {
            for (const Signature& s : e.forms) {
                if (s.family != f) continue;
                os << "  " << e.name << '(';
                for (std::size_t i = 0; i < s.slots.size(); ++i) {
                    if (i) os << ", ";
                    os << slot_name(s.slots[i]);
                }
                os << "): " << e.description << '\n';
            }
        }
    }
    return os.str();
}

} // namespace alphalogics::dsl
