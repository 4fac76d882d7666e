#pragma once

// Naive per-cell reference evaluator and a random program generator, used to
// cross-check the production evaluator.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>

#include <stdexcept>

#include "alphalogics/dsl.hpp"

namespace dsl_reference {

using namespace alphalogics;
using namespace alphalogics::dsl;

using Grid = std::vector<std::vector<double>>;  // [date][instrument]

inline const double NA = std::numeric_limits<double>::quiet_NaN();

inline double fin(double v) { return std::isfinite(v) ? v : NA; }

inline Grid to_grid(const Matrix& m) {
    Grid g(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t t = 0; t < m.rows(); ++t)
        for (std::size_t i = 0; i < m.cols(); ++i) g[t][i] = m(t, i);
    return g;
}

inline Grid blank(const Grid& like) {
    return Grid(like.size(), std::vector<double>(like.front().size(), NA));
}

inline double sum_of(const std::vector<double>& w) {
    double s = 0;
    for (double v : w) s += v;
    return s;
}

inline double mean_of(const std::vector<double>& w) { return sum_of(w) / static_cast<double>(w.size()); }

inline double pvar_of(const std::vector<double>& w) {
    const double m = mean_of(w);
    double s = 0;
    for (double v : w) s += (v - m) * (v - m);
    return s / static_cast<double>(w.size());
}

inline double quantile_of(std::vector<double> w, double q) {
    std::sort(w.begin(), w.end());
    const double pos = q * static_cast<double>(w.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0) return w[lo];
    return w[lo] + frac * (w[lo + 1] - w[lo]);
}

// Rank in [0, 1] of x among w (x included), average rank on ties.
inline double unit_rank(const std::vector<double>& w, double x) {
    if (w.size() == 1) return 0.5;
    double less = 0, equal = 0;
    for (double v : w) {
        if (v < x) less += 1;
        if (v == x) equal += 1;
    }
    return (less + (equal + 1) / 2 - 1) / static_cast<double>(w.size() - 1);
}

// Window [t-n+1, t] of column i, or empty if incomplete.
inline std::vector<double> window(const Grid& g, std::size_t t, std::size_t i, std::size_t n) {
    if (t + 1 < n) return {};
    std::vector<double> w;
    for (std::size_t k = t + 1 - n; k <= t; ++k) {
        if (std::isnan(g[k][i])) return {};
        w.push_back(g[k][i]);
    }
    return w;
}

class Reference {
public:
    explicit Reference(const Panel& p) : p_(p) {}

    Grid eval(const Node& n) {
        const std::size_t T = p_.num_dates(), N = p_.num_instruments();
        if (n.kind == Node::Kind::Literal) return Grid(T, std::vector<double>(N, n.value));
        if (n.kind == Node::Kind::Variable) {
            if (n.name == "return") {
                const Grid c = to_grid(p_.close());
                Grid out = blank(c);
                for (std::size_t t = 1; t < T; ++t)
                    for (std::size_t i = 0; i < N; ++i) out[t][i] = fin(c[t][i] / c[t - 1][i] - 1);
                return out;
            }
            for (Field f : kAllFields)
                if (field_name(f) == n.name) return to_grid(p_.series(f));
            throw std::logic_error("unknown variable " + n.name);
        }
        return call(n);
    }

private:
    // Per-cell unary over a series with missing propagation.
    Grid unary(const Grid& a, const std::function<double(double)>& f) {
        Grid out = blank(a);
        for (std::size_t t = 0; t < a.size(); ++t)
            for (std::size_t i = 0; i < a[t].size(); ++i)
                if (!std::isnan(a[t][i])) out[t][i] = fin(f(a[t][i]));
        return out;
    }

    Grid binary(const Grid& a, const Grid& b, const std::function<double(double, double)>& f) {
        Grid out = blank(a);
        for (std::size_t t = 0; t < a.size(); ++t)
            for (std::size_t i = 0; i < a[t].size(); ++i)
                if (!std::isnan(a[t][i]) && !std::isnan(b[t][i])) out[t][i] = fin(f(a[t][i], b[t][i]));
        return out;
    }

    // f(window values) per cell over a single series.
    Grid roll(const Grid& a, std::size_t n, const std::function<double(const std::vector<double>&)>& f) {
        Grid out = blank(a);
        for (std::size_t t = 0; t < a.size(); ++t)
            for (std::size_t i = 0; i < a[t].size(); ++i) {
                const auto w = window(a, t, i, n);
                if (!w.empty()) out[t][i] = fin(f(w));
            }
        return out;
    }

    Grid roll2(const Grid& a, const Grid& b, std::size_t n,
               const std::function<double(const std::vector<double>&, const std::vector<double>&)>& f) {
        Grid out = blank(a);
        for (std::size_t t = 0; t < a.size(); ++t)
            for (std::size_t i = 0; i < a[t].size(); ++i) {
                const auto wa = window(a, t, i, n), wb = window(b, t, i, n);
                if (!wa.empty() && !wb.empty()) out[t][i] = fin(f(wa, wb));
            }
        return out;
    }

    // Per-date statistic over present entries, written back to each present cell.
    Grid per_date(const Grid& a, const std::function<double(const std::vector<double>&, double)>& f) {
        Grid out = blank(a);
        for (std::size_t t = 0; t < a.size(); ++t) {
            std::vector<double> xs;
            for (double v : a[t])
                if (!std::isnan(v)) xs.push_back(v);
            for (std::size_t i = 0; i < a[t].size(); ++i)
                if (!std::isnan(a[t][i])) out[t][i] = fin(f(xs, a[t][i]));
        }
        return out;
    }

    Grid ema(const Grid& a, double alpha) {
        Grid out = blank(a);
        for (std::size_t i = 0; i < a.front().size(); ++i) {
            double y = NA;
            for (std::size_t t = 0; t < a.size(); ++t) {
                if (std::isnan(a[t][i])) {
                    y = NA;
                    continue;
                }
                y = std::isnan(y) ? a[t][i] : alpha * a[t][i] + (1.0 - alpha) * y;
                out[t][i] = fin(y);
            }
        }
        return out;
    }

    static double beta_of(const std::vector<double>& a, const std::vector<double>& b) {
        const double ma = mean_of(a), mb = mean_of(b);
        double sxy = 0, sxx = 0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            sxy += (a[k] - ma) * (b[k] - mb);
            sxx += (b[k] - mb) * (b[k] - mb);
        }
        return sxx > 0 ? sxy / sxx : NA;
    }

    static double cov_of(const std::vector<double>& a, const std::vector<double>& b) {
        const double ma = mean_of(a), mb = mean_of(b);
        double s = 0;
        for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - ma) * (b[k] - mb);
        return s / static_cast<double>(a.size());
    }

    Grid call(const Node& n) {
        const std::string& op = n.name;
        auto A = [&] { return eval(n.args[0]); };
        auto B = [&] { return eval(n.args[1]); };
        auto num = [&](std::size_t k) { return n.args[k].value; };
        auto len = [&](std::size_t k) { return static_cast<std::size_t>(n.args[k].value); };
        const std::size_t arity = n.args.size();

        if (op == "ADD") return binary(A(), B(), [](double x, double y) { return x + y; });
        if (op == "SUB") return binary(A(), B(), [](double x, double y) { return x - y; });
        if (op == "MUL") return binary(A(), B(), [](double x, double y) { return x * y; });
        if (op == "DIV") return binary(A(), B(), [](double x, double y) { return x / y; });
        if (op == "NEG") return unary(A(), [](double x) { return -x; });
        if (op == "GT") return binary(A(), B(), [](double x, double y) { return double(x > y); });
        if (op == "GE") return binary(A(), B(), [](double x, double y) { return double(x >= y); });
        if (op == "LT") return binary(A(), B(), [](double x, double y) { return double(x < y); });
        if (op == "LE") return binary(A(), B(), [](double x, double y) { return double(x <= y); });
        if (op == "EQ") return binary(A(), B(), [](double x, double y) { return double(x == y); });
        if (op == "NE") return binary(A(), B(), [](double x, double y) { return double(x != y); });
        if (op == "AND") return binary(A(), B(), [](double x, double y) { return double(x != 0 && y != 0); });
        if (op == "OR") return binary(A(), B(), [](double x, double y) { return double(x != 0 || y != 0); });
        if (op == "IFELSE") {
            const Grid c = A(), a = B(), b = eval(n.args[2]);
            Grid out = blank(c);
            for (std::size_t t = 0; t < c.size(); ++t)
                for (std::size_t i = 0; i < c[t].size(); ++i)
                    if (!std::isnan(c[t][i])) out[t][i] = c[t][i] != 0 ? a[t][i] : b[t][i];
            return out;
        }
        if (op == "FILTER") {
            const Grid a = A(), c = B();
            Grid out = blank(c);
            for (std::size_t t = 0; t < c.size(); ++t)
                for (std::size_t i = 0; i < c[t].size(); ++i)
                    if (!std::isnan(c[t][i])) out[t][i] = c[t][i] != 0 ? a[t][i] : 0.0;
            return out;
        }
        if ((op == "MAX" || op == "MIN") && arity == 2)
            return binary(A(), B(), [&](double x, double y) {
                return op == "MAX" ? std::max(x, y) : std::min(x, y);
            });

        if (op == "LOG") return unary(A(), [](double x) { return x > 0 ? std::log(x) : NA; });
        if (op == "SQRT") return unary(A(), [](double x) { return x >= 0 ? std::sqrt(x) : NA; });
        if (op == "EXP") return unary(A(), [](double x) { return std::exp(x); });
        if (op == "ABS") return unary(A(), [](double x) { return std::fabs(x); });
        if (op == "SIGN") return unary(A(), [](double x) { return double((x > 0) - (x < 0)); });
        if (op == "INV") return unary(A(), [](double x) { return 1.0 / x; });
        if (op == "FLOOR") return unary(A(), [](double x) { return std::floor(x); });
        if (op == "POW") {
            const double e = num(1);
            return unary(A(), [e](double x) { return std::pow(x, e); });
        }

        if (op == "RANK") return per_date(A(), [](const std::vector<double>& xs, double x) { return unit_rank(xs, x); });
        if (op == "ZSCORE")
            return per_date(A(), [](const std::vector<double>& xs, double x) {
                const double v = pvar_of(xs);
                return (xs.size() < 2 || !(v > 0)) ? 0.0 : (x - mean_of(xs)) / std::sqrt(v);
            });
        if (op == "MEAN") return per_date(A(), [](const std::vector<double>& xs, double) { return mean_of(xs); });
        if (op == "STD") return per_date(A(), [](const std::vector<double>& xs, double) { return std::sqrt(pvar_of(xs)); });
        if (op == "MEDIAN") return per_date(A(), [](const std::vector<double>& xs, double) { return quantile_of(xs, 0.5); });
        if (op == "MAX") return per_date(A(), [](const std::vector<double>& xs, double) { return *std::max_element(xs.begin(), xs.end()); });
        if (op == "MIN") return per_date(A(), [](const std::vector<double>& xs, double) { return *std::min_element(xs.begin(), xs.end()); });
        if (op == "PERCENTILE" && arity == 2) {
            const double q = num(1);
            return per_date(A(), [q](const std::vector<double>& xs, double) { return quantile_of(xs, q); });
        }
        if (op == "SKEW" || op == "KURT") {
            const int k = op == "SKEW" ? 3 : 4;
            return per_date(A(), [k](const std::vector<double>& xs, double) {
                const double v = pvar_of(xs), m = mean_of(xs);
                if (!(v > 0) || xs.size() < static_cast<std::size_t>(k)) return NA;
                double s = 0;
                for (double x : xs) s += std::pow(x - m, k);
                s /= static_cast<double>(xs.size());
                return k == 3 ? s / std::pow(v, 1.5) : s / (v * v) - 3.0;
            });
        }

        if (op == "DELAY" || op == "DELTA" || op == "TS_PCTCHANGE") {
            const Grid a = A();
            const std::size_t lag = len(1);
            Grid out = blank(a);
            for (std::size_t t = lag; t < a.size(); ++t)
                for (std::size_t i = 0; i < a[t].size(); ++i) {
                    const double now = a[t][i], then = a[t - lag][i];
                    if (std::isnan(then) || (op != "DELAY" && std::isnan(now))) continue;
                    out[t][i] = fin(op == "DELAY" ? then : op == "DELTA" ? now - then : now / then - 1.0);
                }
            return out;
        }

        using W = const std::vector<double>&;
        if (op == "TS_MEAN" || op == "BB_MIDDLE") return roll(A(), len(1), [](W w) { return mean_of(w); });
        if (op == "TS_SUM" || op == "SUMAC") return roll(A(), len(1), [](W w) { return sum_of(w); });
        if (op == "TS_STD") return roll(A(), len(1), [](W w) { return std::sqrt(pvar_of(w)); });
        if (op == "TS_VAR") return roll(A(), len(1), [](W w) { return pvar_of(w); });
        if (op == "TS_MIN") return roll(A(), len(1), [](W w) { return *std::min_element(w.begin(), w.end()); });
        if (op == "TS_MAX") return roll(A(), len(1), [](W w) { return *std::max_element(w.begin(), w.end()); });
        if (op == "TS_MEDIAN") return roll(A(), len(1), [](W w) { return quantile_of(w, 0.5); });
        if (op == "TS_QUANTILE") {
            const double q = num(2);
            return roll(A(), len(1), [q](W w) { return quantile_of(w, q); });
        }
        if (op == "PERCENTILE") {
            const double q = num(1);
            return roll(A(), len(2), [q](W w) { return quantile_of(w, q); });
        }
        if (op == "TS_MAD")
            return roll(A(), len(1), [](W w) {
                const double med = quantile_of(w, 0.5);
                std::vector<double> d;
                for (double v : w) d.push_back(std::fabs(v - med));
                return quantile_of(d, 0.5);
            });
        if (op == "TS_ZSCORE")
            return roll(A(), len(1), [](W w) {
                const double v = pvar_of(w);
                return v > 0 ? (w.back() - mean_of(w)) / std::sqrt(v) : NA;
            });
        if (op == "TS_RANK") return roll(A(), len(1), [](W w) { return unit_rank(w, w.back()); });
        if (op == "TS_ARGMAX" || op == "HIGHDAY" || op == "TS_ARGMIN" || op == "LOWDAY") {
            const bool hi = op == "TS_ARGMAX" || op == "HIGHDAY";
            return roll(A(), len(1), [hi](W w) {
                // scan newest to oldest, keep the first strict improvement
                std::size_t age = 0;
                double best = w.back();
                for (std::size_t k = 1; k < w.size(); ++k) {
                    const double v = w[w.size() - 1 - k];
                    if (hi ? v > best : v < best) {
                        best = v;
                        age = k;
                    }
                }
                return static_cast<double>(age);
            });
        }
        if (op == "PROD")
            return roll(A(), len(1), [](W w) {
                double p = 1;
                for (double v : w) p *= v;
                return p;
            });
        if (op == "COUNT")
            return roll(A(), len(1), [](W w) {
                double c = 0;
                for (double v : w) c += v != 0;
                return c;
            });
        if (op == "SUMIF")
            return roll2(A(), eval(n.args[2]), len(1), [](W a, W c) {
                double s = 0;
                for (std::size_t k = 0; k < a.size(); ++k)
                    if (c[k] != 0) s += a[k];
                return s;
            });
        if (op == "TS_CORR")
            return roll2(A(), B(), len(2), [](W a, W b) {
                const double va = pvar_of(a), vb = pvar_of(b);
                if (!(va > 0) || !(vb > 0)) return NA;
                return std::clamp(cov_of(a, b) / std::sqrt(va * vb), -1.0, 1.0);
            });
        if (op == "TS_COVARIANCE")
            return roll2(A(), B(), len(2), [](W a, W b) {
                return (pvar_of(a) > 0 && pvar_of(b) > 0) ? cov_of(a, b) : NA;
            });
        if (op == "REGBETA" || op == "REGRESI") {
            const bool resid = op == "REGRESI";
            auto f = [resid](W a, W b) {
                const double beta = beta_of(a, b);
                if (std::isnan(beta) || !resid) return beta;
                return a.back() - mean_of(a) - beta * (b.back() - mean_of(b));
            };
            const Node& reg = n.args[1];
            if (reg.kind == Node::Kind::Call && reg.name == "SEQUENCE") {
                std::vector<double> seq;
                for (std::size_t k = 1; k <= len(2); ++k) seq.push_back(static_cast<double>(k));
                return roll(A(), len(2), [&](W a) { return f(a, seq); });
            }
            return roll2(A(), B(), len(2), f);
        }
        if (op == "WMA")
            return roll(A(), len(1), [](W w) {
                double num = 0, den = 0;
                for (std::size_t k = 0; k < w.size(); ++k) {
                    const double wt = std::pow(0.9, static_cast<double>(w.size() - k));
                    num += wt * w[k];
                    den += wt;
                }
                return num / den;
            });
        if (op == "DECAYLINEAR")
            return roll(A(), len(1), [](W w) {
                double num = 0;
                for (std::size_t k = 0; k < w.size(); ++k) num += static_cast<double>(k + 1) * w[k];
                const double d = static_cast<double>(w.size());
                return num / (d * (d + 1.0) / 2.0);
            });
        if (op == "EMA") return ema(A(), 2.0 / (num(1) + 1.0));
        if (op == "SMA") {
            const Grid a = A();
            const double nn = num(1), m = num(2);
            Grid out = blank(a);
            for (std::size_t i = 0; i < a.front().size(); ++i) {
                double y = NA;
                for (std::size_t t = 0; t < a.size(); ++t) {
                    if (std::isnan(a[t][i])) {
                        y = NA;
                        continue;
                    }
                    y = std::isnan(y) ? a[t][i] : (m * a[t][i] + (nn - m) * y) / nn;
                    out[t][i] = fin(y);
                }
            }
            return out;
        }
        if (op == "MACD") {
            const Grid a = A();
            return binary(ema(a, 2.0 / (num(1) + 1.0)), ema(a, 2.0 / (num(2) + 1.0)),
                          [](double x, double y) { return x - y; });
        }
        if (op == "RSI")
            return roll(A(), len(1) + 1, [](W w) {
                double up = 0, down = 0;
                for (std::size_t k = 1; k < w.size(); ++k) {
                    const double d = w[k] - w[k - 1];
                    if (d > 0) up += d;
                    else down -= d;
                }
                up /= static_cast<double>(w.size() - 1);
                down /= static_cast<double>(w.size() - 1);
                return up + down > 0 ? 100.0 * up / (up + down) : NA;
            });
        if (op == "BB_UPPER" || op == "BB_LOWER") {
            const double sign = op == "BB_UPPER" ? 1.0 : -1.0;
            return roll(A(), len(1), [sign](W w) { return mean_of(w) + sign * 2.0 * std::sqrt(pvar_of(w)); });
        }
        throw std::logic_error("reference has no rule for " + op);
        return {};
    }

    const Panel& p_;
};

// Random expression text over the whole catalogue.
class ProgramGenerator {
public:
    explicit ProgramGenerator(std::uint64_t seed) : rng_(seed) {
        for (const OperatorInfo& info : OperatorCatalogue::instance().entries())
            if (info.name != "SEQUENCE")
                for (const Signature& s : info.forms) forms_.push_back({&info, &s});
    }

    std::size_t num_forms() const { return forms_.size(); }

    // Expression whose root uses form `root` (or a random one when npos).
    std::string program(std::size_t depth, std::size_t root = std::string::npos) {
        return call(root == std::string::npos ? pick(forms_.size()) : root % forms_.size(), depth);
    }

private:
    std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
    bool coin(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }

    std::string series(std::size_t depth) {
        if (depth == 0 || coin(0.25)) {
            if (coin(0.08)) return std::to_string(1 + pick(5));
            return std::string(kVariables[pick(std::size(kVariables))]);
        }
        return call(pick(forms_.size()), depth - 1);
    }

    std::string call(std::size_t k, std::size_t depth) {
        const auto [info, sig] = forms_[k];
        const std::string& op = info->name;
        std::vector<std::string> a;
        std::size_t window = 2 + pick(5);
        const std::size_t short_window = 1 + pick(3);
        std::size_t windows_seen = 0;
        for (Slot s : sig->slots) {
            switch (s) {
            case Slot::Series: a.push_back(series(depth)); break;
            case Slot::Window:
                if (op == "MACD" && windows_seen++ == 0) a.push_back(std::to_string(short_window));
                else if (op == "MACD") a.push_back(std::to_string(short_window + 1 + pick(4)));
                else a.push_back(std::to_string(window));
                break;
            case Slot::Lag: a.push_back(std::to_string(1 + pick(3))); break;
            case Slot::Degree: a.push_back(std::to_string(1 + pick(3))); break;
            case Slot::Modifier: a.push_back(std::to_string(1 + pick(window))); break;
            case Slot::Quantile: {
                static const char* qs[] = {"0.1", "0.25", "0.5", "0.75", "0.9"};
                a.push_back(qs[pick(5)]);
                break;
            }
            case Slot::Sequence:
                a.push_back(coin(0.5) ? "SEQUENCE(" + std::to_string(window) + ")" : series(depth));
                break;
            }
        }
        // regression windows must match their SEQUENCE length (window is shared above)
        static const std::map<std::string, const char*> infix = {
            {"ADD", "+"}, {"SUB", "-"}, {"MUL", "*"}, {"DIV", "/"}, {"GT", ">"}, {"GE", ">="},
            {"LT", "<"},  {"LE", "<="}, {"EQ", "=="}, {"NE", "!="}, {"AND", "&&"}, {"OR", "||"}};
        if (auto it = infix.find(op); it != infix.end() && coin(0.7))
            return "(" + a[0] + " " + it->second + " " + a[1] + ")";
        if (op == "NEG" && coin(0.7)) return "-(" + a[0] + ")";
        if (op == "IFELSE" && coin(0.7)) return "(" + a[0] + " ? " + a[1] + " : " + a[2] + ")";
        std::string text = coin(0.2) ? lower(op) : op;
        text += "(";
        for (std::size_t i = 0; i < a.size(); ++i) text += (i ? ", " : "") + a[i];
        return text + ")";
    }

    static std::string lower(std::string s) {
        for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return s;
    }

    std::mt19937_64 rng_;
    std::vector<std::pair<const OperatorInfo*, const Signature*>> forms_;
};

inline bool agree(double a, double b) {
    return std::fabs(a - b) <= 1e-9 * std::max({1.0, std::fabs(a), std::fabs(b)});
}


} // namespace dsl_reference
