#include <algorithm>
#include <cmath>
#include <functional>
#include <unordered_map>

#include "alphalogics/dsl.hpp"
#include "alphalogics/error.hpp"
#include "alphalogics/stats.hpp"

namespace alphalogics::dsl {

namespace {

using Window = std::span<const double>;

template <typename F>
Matrix map1(const Matrix& a, F f) {
    Matrix out(a.rows(), a.cols());
    const auto& src = a.data();
    auto& dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i)
        if (!is_missing(src[i])) dst[i] = finite_or_missing(f(src[i]));
    return out;
}

template <typename F>
Matrix map2(const Matrix& a, const Matrix& b, F f) {
    Matrix out(a.rows(), a.cols());
    const auto& x = a.data();
    const auto& y = b.data();
    auto& dst = out.data();
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!is_missing(x[i]) && !is_missing(y[i])) dst[i] = finite_or_missing(f(x[i], y[i]));
    return out;
}

// Applies `f(values, out)` to the non-missing entries of each date.
template <typename F>
Matrix cross_section(const Matrix& a, F f) {
    Matrix out(a.rows(), a.cols());
    std::vector<double> vals, res;
    std::vector<std::size_t> idx;
    for (std::size_t r = 0; r < a.rows(); ++r) {
        auto row = a.row(r);
        vals.clear();
        idx.clear();
        for (std::size_t c = 0; c < row.size(); ++c)
            if (!is_missing(row[c])) {
                vals.push_back(row[c]);
                idx.push_back(c);
            }
        if (vals.empty()) continue;
        res.assign(vals.size(), kMissing);
        f(std::span<const double>(vals), std::span<double>(res));
        auto dst = out.row(r);
        for (std::size_t k = 0; k < idx.size(); ++k) dst[idx[k]] = finite_or_missing(res[k]);
    }
    return out;
}

// Column-wise view of one instrument's history plus a prefix count of missing
// cells, so window completeness is an O(1) check.
struct Column {
    std::vector<double> v;
    std::vector<std::size_t> missing_prefix;  // missing_prefix[t] = #missing in [0, t)

    void load(const Matrix& m, std::size_t c) {
        const std::size_t n = m.rows();
        v.resize(n);
        missing_prefix.assign(n + 1, 0);
        for (std::size_t t = 0; t < n; ++t) {
            v[t] = m(t, c);
            missing_prefix[t + 1] = missing_prefix[t] + (is_missing(v[t]) ? 1 : 0);
        }
    }
    bool complete(std::size_t first, std::size_t last) const {  // [first, last]
        return missing_prefix[last + 1] == missing_prefix[first];
    }
    Window window(std::size_t first, std::size_t len) const { return {v.data() + first, len}; }
};

// f(window) over [t-n+1, t]; missing during warm-up or if any window cell is missing.
template <typename F>
Matrix rolling(const Matrix& a, std::size_t n, F f) {
    Matrix out(a.rows(), a.cols());
    Column col;
    for (std::size_t c = 0; c < a.cols(); ++c) {
        col.load(a, c);
        for (std::size_t t = n - 1; t < a.rows(); ++t) {
            const std::size_t first = t + 1 - n;
            if (col.complete(first, t)) out(t, c) = finite_or_missing(f(col.window(first, n)));
        }
    }
    return out;
}

template <typename F>
Matrix rolling2(const Matrix& a, const Matrix& b, std::size_t n, F f) {
    Matrix out(a.rows(), a.cols());
    Column ca, cb;
    for (std::size_t c = 0; c < a.cols(); ++c) {
        ca.load(a, c);
        cb.load(b, c);
        for (std::size_t t = n - 1; t < a.rows(); ++t) {
            const std::size_t first = t + 1 - n;
            if (ca.complete(first, t) && cb.complete(first, t))
                out(t, c) = finite_or_missing(f(ca.window(first, n), cb.window(first, n)));
        }
    }
    return out;
}

// value(t) = f(a[t], a[t-lag]).
template <typename F>
Matrix lagged(const Matrix& a, std::size_t lag, F f) {
    Matrix out(a.rows(), a.cols());
    for (std::size_t t = lag; t < a.rows(); ++t)
        for (std::size_t c = 0; c < a.cols(); ++c) {
            const double now = a(t, c), then = a(t - lag, c);
            if (!is_missing(now) && !is_missing(then)) out(t, c) = finite_or_missing(f(now, then));
        }
    return out;
}

// Seeded recursion: first present value seeds the state; a missing input
// yields missing and the next present value reseeds.
template <typename F>
Matrix recursive(const Matrix& a, F step) {
    Matrix out(a.rows(), a.cols());
    for (std::size_t c = 0; c < a.cols(); ++c) {
        bool seeded = false;
        double y = 0.0;
        for (std::size_t t = 0; t < a.rows(); ++t) {
            const double x = a(t, c);
            if (is_missing(x)) {
                seeded = false;
                continue;
            }
            y = seeded ? step(x, y) : x;
            seeded = true;
            out(t, c) = finite_or_missing(y);
        }
    }
    return out;
}

double window_sum(Window w) {
    double s = 0.0;
    for (double v : w) s += v;
    return s;
}

double window_mean(Window w) { return window_sum(w) / static_cast<double>(w.size()); }

double window_cov(Window a, Window b, double& va, double& vb) {
    const auto ma = stats::mean_pvar(a), mb = stats::mean_pvar(b);
    va = ma.var;
    vb = mb.var;
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma.mean) * (b[i] - mb.mean);
    return s / static_cast<double>(a.size());
}

// Days since the extreme, ties resolved to the most recent occurrence.
template <typename Cmp>
double days_since_extreme(Window w, Cmp better) {
    std::size_t best = w.size() - 1;
    for (std::size_t i = w.size() - 1; i-- > 0;)
        if (better(w[i], w[best])) best = i;
    return static_cast<double>(w.size() - 1 - best);
}

double slope(Window a, Window b) {
    const double ma = window_mean(a), mb = window_mean(b);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sxy += (a[i] - ma) * (b[i] - mb);
        sxx += (b[i] - mb) * (b[i] - mb);
    }
    return sxx > 0 ? sxy / sxx : kMissing;
}

double residual(Window a, Window b) {
    const double beta = slope(a, b);
    if (is_missing(beta)) return kMissing;
    const double ma = window_mean(a), mb = window_mean(b);
    return a.back() - ma - beta * (b.back() - mb);
}

class Evaluator {
public:
    explicit Evaluator(const Panel& p) : p_(p) {}

    Matrix eval(const Node& n) {
        switch (n.kind) {
        case Node::Kind::Literal: return Matrix(p_.num_dates(), p_.num_instruments(), n.value);
        case Node::Kind::Variable: return variable(n.name);
        case Node::Kind::Call: return call(n);
        }
        return {};
    }

private:
    Matrix variable(const std::string& name) {
        if (name == "open") return p_.open();
        if (name == "high") return p_.high();
        if (name == "low") return p_.low();
        if (name == "close") return p_.close();
        if (name == "volume") return p_.volume();
        if (name == "return")
            return lagged(p_.close(), 1, [](double now, double then) { return now / then - 1.0; });
        throw ParseError("unknown variable '" + name + "'");
    }

    static std::size_t iarg(const Node& n, std::size_t i) {
        return static_cast<std::size_t>(n.args[i].value);
    }

    Matrix regression(const Node& n, bool resid) {
        const Matrix a = eval(n.args[0]);
        const std::size_t w = iarg(n, 2);
        const Node& b = n.args[1];
        auto f = [resid](Window x, Window y) { return resid ? residual(x, y) : slope(x, y); };
        if (b.kind == Node::Kind::Call && b.name == "SEQUENCE") {
            std::vector<double> seq(w);
            for (std::size_t i = 0; i < w; ++i) seq[i] = static_cast<double>(i + 1);
            return rolling(a, w, [&](Window x) { return f(x, Window(seq)); });
        }
        return rolling2(a, eval(b), w, f);
    }

    Matrix call(const Node& n) {
        const std::string& op = n.name;
        const std::size_t arity = n.args.size();

        // element-wise binary
        if (op == "ADD") return map2(eval(n.args[0]), eval(n.args[1]), std::plus<>{});
        if (op == "SUB") return map2(eval(n.args[0]), eval(n.args[1]), std::minus<>{});
        if (op == "MUL") return map2(eval(n.args[0]), eval(n.args[1]), std::multiplies<>{});
        if (op == "DIV") return map2(eval(n.args[0]), eval(n.args[1]), std::divides<>{});
        if (op == "GT") return map2(eval(n.args[0]), eval(n.args[1]), [](double x, double y) { return x > y ? 1.0 : 0.0; });
        if (op == "GE") return map2(eval(n.args[0]), eval(n.args[1]), [](double x, double y) { return x >= y ? 1.0 : 0.0; });
        if (op == "LT") return map2(eval(n.args[0]), eval(n.args[1]), [](double x, double y) { return x < y ? 1.0 : 0.0; });
        if (op == "LE") return map2(eval(n.args[0]), eval(n.args[1]), [](double x, double y) { return x <= y ? 1.0 : 0.0; });
        if (op == "EQ") return map2(eval(n.args[0]), eval(n.args[1]), [](double x, double y) { return x == y ? 1.0 : 0.0; });
        if (op == "NE") return map2(eval(n.args[0]), eval(n.args[1]), [](double x, double y) { return x != y ? 1.0 : 0.0; });
        if (op == "AND") return map2(eval(n.args[0]), eval(n.args[1]), [](double x, double y) { return (x != 0 && y != 0) ? 1.0 : 0.0; });
        if (op == "OR") return map2(eval(n.args[0]), eval(n.args[1]), [](double x, double y) { return (x != 0 || y != 0) ? 1.0 : 0.0; });
        if ((op == "MAX" || op == "MIN") && arity == 2) {
            const bool mx = op == "MAX";
            return map2(eval(n.args[0]), eval(n.args[1]),
                        [mx](double x, double y) { return mx ? std::max(x, y) : std::min(x, y); });
        }

        if (op == "IFELSE") {
            const Matrix c = eval(n.args[0]), a = eval(n.args[1]), b = eval(n.args[2]);
            Matrix out(c.rows(), c.cols());
            for (std::size_t i = 0; i < c.size(); ++i) {
                const double cv = c.data()[i];
                if (!is_missing(cv)) out.data()[i] = cv != 0 ? a.data()[i] : b.data()[i];
            }
            return out;
        }
        if (op == "FILTER") {
            const Matrix a = eval(n.args[0]), c = eval(n.args[1]);
            Matrix out(c.rows(), c.cols());
            for (std::size_t i = 0; i < c.size(); ++i) {
                const double cv = c.data()[i];
                if (!is_missing(cv)) out.data()[i] = cv != 0 ? a.data()[i] : 0.0;
            }
            return out;
        }

        // element-wise unary
        if (op == "NEG") return map1(eval(n.args[0]), [](double x) { return -x; });
        if (op == "LOG") return map1(eval(n.args[0]), [](double x) { return x > 0 ? std::log(x) : kMissing; });
        if (op == "SQRT") return map1(eval(n.args[0]), [](double x) { return x >= 0 ? std::sqrt(x) : kMissing; });
        if (op == "EXP") return map1(eval(n.args[0]), [](double x) { return std::exp(x); });
        if (op == "ABS") return map1(eval(n.args[0]), [](double x) { return std::fabs(x); });
        if (op == "SIGN") return map1(eval(n.args[0]), [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
        if (op == "INV") return map1(eval(n.args[0]), [](double x) { return 1.0 / x; });
        if (op == "FLOOR") return map1(eval(n.args[0]), [](double x) { return std::floor(x); });
        if (op == "POW") {
            const double e = n.args[1].value;
            return map1(eval(n.args[0]), [e](double x) { return std::pow(x, e); });
        }

        // cross-sectional
        if (op == "RANK")
            return cross_section(eval(n.args[0]), [](Window v, std::span<double> out) {
                if (v.size() == 1) {
                    out[0] = 0.5;
                    return;
                }
                const auto r = stats::average_ranks(v);
                const double denom = static_cast<double>(v.size() - 1);
                for (std::size_t i = 0; i < v.size(); ++i) out[i] = (r[i] - 1.0) / denom;
            });
        if (op == "ZSCORE")
            return cross_section(eval(n.args[0]), [](Window v, std::span<double> out) {
                const auto mv = stats::mean_pvar(v);
                const bool degenerate = v.size() < 2 || !(mv.var > 0);
                const double sd = std::sqrt(mv.var);
                for (std::size_t i = 0; i < v.size(); ++i)
                    out[i] = degenerate ? 0.0 : (v[i] - mv.mean) / sd;
            });
        if (op == "MEAN" || op == "STD" || op == "SKEW" || op == "KURT" || op == "MEDIAN" ||
            op == "MAX" || op == "MIN" || (op == "PERCENTILE" && arity == 2)) {
            const double q = op == "PERCENTILE" ? n.args[1].value : 0.5;
            return cross_section(eval(n.args[0]), [&op, q](Window v, std::span<double> out) {
                double s = kMissing;
                if (op == "MEAN") s = window_mean(v);
                else if (op == "STD") s = std::sqrt(stats::mean_pvar(v).var);
                else if (op == "MAX") s = *std::max_element(v.begin(), v.end());
                else if (op == "MIN") s = *std::min_element(v.begin(), v.end());
                else if (op == "MEDIAN" || op == "PERCENTILE") s = stats::quantile(v, q);
                else {
                    const auto mv = stats::mean_pvar(v);
                    const bool skew = op == "SKEW";
                    if (mv.var > 0 && v.size() >= (skew ? 3u : 4u)) {
                        double m = 0.0;
                        for (double x : v) m += std::pow(x - mv.mean, skew ? 3 : 4);
                        m /= static_cast<double>(v.size());
                        s = skew ? m / std::pow(mv.var, 1.5) : m / (mv.var * mv.var) - 3.0;
                    }
                }
                std::fill(out.begin(), out.end(), s);
            });
        }

        // time-series change
        if (op == "DELAY") {
            const Matrix a = eval(n.args[0]);
            const std::size_t lag = iarg(n, 1);
            Matrix out(a.rows(), a.cols());
            for (std::size_t t = lag; t < a.rows(); ++t)
                for (std::size_t c = 0; c < a.cols(); ++c) out(t, c) = a(t - lag, c);
            return out;
        }
        if (op == "DELTA") return lagged(eval(n.args[0]), iarg(n, 1), [](double now, double then) { return now - then; });
        if (op == "TS_PCTCHANGE") return lagged(eval(n.args[0]), iarg(n, 1), [](double now, double then) { return now / then - 1.0; });

        // rolling aggregations
        if (op == "TS_MEAN" || op == "BB_MIDDLE") return rolling(eval(n.args[0]), iarg(n, 1), window_mean);
        if (op == "TS_SUM" || op == "SUMAC") return rolling(eval(n.args[0]), iarg(n, 1), window_sum);
        if (op == "TS_STD") return rolling(eval(n.args[0]), iarg(n, 1), [](Window w) { return std::sqrt(stats::mean_pvar(w).var); });
        if (op == "TS_VAR") return rolling(eval(n.args[0]), iarg(n, 1), [](Window w) { return stats::mean_pvar(w).var; });
        if (op == "TS_MIN") return rolling(eval(n.args[0]), iarg(n, 1), [](Window w) { return *std::min_element(w.begin(), w.end()); });
        if (op == "TS_MAX") return rolling(eval(n.args[0]), iarg(n, 1), [](Window w) { return *std::max_element(w.begin(), w.end()); });
        if (op == "TS_MEDIAN") return rolling(eval(n.args[0]), iarg(n, 1), [](Window w) { return stats::quantile(w, 0.5); });
        if (op == "TS_QUANTILE") {
            const double q = n.args[2].value;
            return rolling(eval(n.args[0]), iarg(n, 1), [q](Window w) { return stats::quantile(w, q); });
        }
        if (op == "PERCENTILE") {
            const double q = n.args[1].value;
            return rolling(eval(n.args[0]), iarg(n, 2), [q](Window w) { return stats::quantile(w, q); });
        }
        if (op == "TS_MAD")
            return rolling(eval(n.args[0]), iarg(n, 1), [](Window w) {
                const double med = stats::quantile(w, 0.5);
                std::vector<double> dev(w.size());
                for (std::size_t i = 0; i < w.size(); ++i) dev[i] = std::fabs(w[i] - med);
                return stats::quantile(dev, 0.5);
            });
        if (op == "TS_ZSCORE")
            return rolling(eval(n.args[0]), iarg(n, 1), [](Window w) {
                const auto mv = stats::mean_pvar(w);
                return mv.var > 0 ? (w.back() - mv.mean) / std::sqrt(mv.var) : kMissing;
            });
        if (op == "TS_RANK")
            return rolling(eval(n.args[0]), iarg(n, 1), [](Window w) {
                if (w.size() == 1) return 0.5;
                const double x = w.back();
                std::size_t less = 0, equal = 0;
                for (double v : w) {
                    less += v < x;
                    equal += v == x;
                }
                const double rank = static_cast<double>(less) + 0.5 * static_cast<double>(equal + 1);
                return (rank - 1.0) / static_cast<double>(w.size() - 1);
            });
        if (op == "TS_ARGMAX" || op == "HIGHDAY")
            return rolling(eval(n.args[0]), iarg(n, 1), [](Window w) { return days_since_extreme(w, std::greater<>{}); });
        if (op == "TS_ARGMIN" || op == "LOWDAY")
            return rolling(eval(n.args[0]), iarg(n, 1), [](Window w) { return days_since_extreme(w, std::less<>{}); });
        if (op == "PROD")
            return rolling(eval(n.args[0]), iarg(n, 1), [](Window w) {
                double p = 1.0;
                for (double v : w) p *= v;
                return p;
            });
        if (op == "COUNT")
            return rolling(eval(n.args[0]), iarg(n, 1), [](Window w) {
                return static_cast<double>(std::count_if(w.begin(), w.end(), [](double v) { return v != 0; }));
            });
        if (op == "SUMIF")
            return rolling2(eval(n.args[0]), eval(n.args[2]), iarg(n, 1), [](Window a, Window c) {
                double s = 0.0;
                for (std::size_t i = 0; i < a.size(); ++i)
                    if (c[i] != 0) s += a[i];
                return s;
            });

        // relations
        if (op == "TS_CORR")
            return rolling2(eval(n.args[0]), eval(n.args[1]), iarg(n, 2), [](Window a, Window b) {
                double va, vb;
                const double cov = window_cov(a, b, va, vb);
                if (!(va > 0) || !(vb > 0)) return kMissing;
                return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
            });
        if (op == "TS_COVARIANCE")
            return rolling2(eval(n.args[0]), eval(n.args[1]), iarg(n, 2), [](Window a, Window b) {
                double va, vb;
                const double cov = window_cov(a, b, va, vb);
                return (va > 0 && vb > 0) ? cov : kMissing;
            });
        if (op == "REGBETA") return regression(n, false);
        if (op == "REGRESI") return regression(n, true);

        // smoothing
        if (op == "WMA")
            return rolling(eval(n.args[0]), iarg(n, 1), [](Window w) {
                const std::size_t len = w.size();
                double num = 0.0, den = 0.0;
                for (std::size_t j = 0; j < len; ++j) {
                    const double wt = std::pow(0.9, static_cast<double>(len - j));
                    num += wt * w[j];
                    den += wt;
                }
                return num / den;
            });
        if (op == "DECAYLINEAR")
            return rolling(eval(n.args[0]), iarg(n, 1), [](Window w) {
                double num = 0.0;
                for (std::size_t j = 0; j < w.size(); ++j) num += static_cast<double>(j + 1) * w[j];
                const double len = static_cast<double>(w.size());
                return num / (len * (len + 1.0) / 2.0);
            });
        if (op == "EMA") {
            const double alpha = 2.0 / (static_cast<double>(iarg(n, 1)) + 1.0);
            return recursive(eval(n.args[0]), [alpha](double x, double y) { return alpha * x + (1.0 - alpha) * y; });
        }
        if (op == "SMA") {
            const double len = n.args[1].value, m = n.args[2].value;
            return recursive(eval(n.args[0]), [len, m](double x, double y) { return (m * x + (len - m) * y) / len; });
        }

        // technical
        if (op == "MACD") {
            const Matrix a = eval(n.args[0]);
            const double as = 2.0 / (n.args[1].value + 1.0), al = 2.0 / (n.args[2].value + 1.0);
            const Matrix s = recursive(a, [as](double x, double y) { return as * x + (1.0 - as) * y; });
            const Matrix l = recursive(a, [al](double x, double y) { return al * x + (1.0 - al) * y; });
            return map2(s, l, std::minus<>{});
        }
        if (op == "RSI")
            return rolling(eval(n.args[0]), iarg(n, 1) + 1, [](Window w) {
                double gain = 0.0, loss = 0.0;
                for (std::size_t i = 1; i < w.size(); ++i) {
                    const double d = w[i] - w[i - 1];
                    if (d > 0) gain += d;
                    else loss -= d;
                }
                const double k = static_cast<double>(w.size() - 1);
                gain /= k;
                loss /= k;
                return gain + loss > 0 ? 100.0 * gain / (gain + loss) : kMissing;
            });
        if (op == "BB_UPPER" || op == "BB_LOWER") {
            const double sign = op == "BB_UPPER" ? 1.0 : -1.0;
            return rolling(eval(n.args[0]), iarg(n, 1), [sign](Window w) {
                const auto mv = stats::mean_pvar(w);
                return mv.mean + sign * 2.0 * std::sqrt(mv.var);
            });
        }

        throw ParseError("operator '" + op + "' cannot be evaluated here", n.pos);
    }

    const Panel& p_;
};

} // namespace

Matrix evaluate(const FactorExpr& expr, const Panel& panel) {
    if (panel.empty()) throw PreconditionError("cannot evaluate on an empty panel");
    Evaluator ev(panel);
    return ev.eval(expr.root());
}

} // namespace alphalogics::dsl
