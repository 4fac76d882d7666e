#include "alphalogics/backtest.hpp"

#include <algorithm>
#include <numeric>

#include "alphalogics/error.hpp"
#include "alphalogics/stats.hpp"

namespace alphalogics::backtest {

void StrategyConfig::validate() const {
    if (top_k < 1) throw PreconditionError("top_k must be positive");
    if (n_drop > top_k) throw PreconditionError("n_drop must not exceed top_k");
    if (!(buy_cost >= 0.0 && buy_cost <= 0.1)) throw PreconditionError("buy_cost must be in [0, 0.1]");
    if (!(sell_cost >= 0.0 && sell_cost <= 0.1)) throw PreconditionError("sell_cost must be in [0, 0.1]");
    if (annualization < 1) throw PreconditionError("annualization must be positive");
}

std::vector<double> daily_ic(const Matrix& scores, const Matrix& returns, IndexRange rows) {
    if (!scores.same_shape(returns)) throw PreconditionError("scores and returns have different shapes");
    if (rows.end > scores.rows()) throw PreconditionError("IC rows exceed the panel");
    std::vector<double> out;
    std::vector<double> a, b;
    for (std::size_t t = rows.begin; t < rows.end; ++t) {
        a.clear();
        b.clear();
        for (std::size_t c = 0; c < scores.cols(); ++c) {
            const double s = scores(t, c), r = returns(t, c);
            if (is_missing(s) || is_missing(r)) continue;
            a.push_back(s);
            b.push_back(r);
        }
        out.push_back(a.size() < 2 ? kMissing : finite_or_missing(stats::spearman(a, b)));
    }
    return out;
}

IcSummary summarize_ic(std::span<const double> ic_series) {
    std::vector<double> xs;
    for (double v : ic_series)
        if (!is_missing(v)) xs.push_back(v);
    IcSummary s;
    s.count = xs.size();
    if (xs.empty()) return s;
    const auto mv = stats::mean_pvar(xs);
    s.ic = mv.mean;
    const double sd = std::sqrt(mv.var);
    if (xs.size() < 2 || stats::negligible_spread(mv.mean, sd)) {
        s.icir = 0.0;
        s.degenerate = true;
    } else {
        s.icir = mv.mean / sd;
    }
    return s;
}

namespace {

// Descending by score, ties to the lower index.
void sort_best_first(std::vector<std::size_t>& idx, std::span<const double> s) {
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (s[a] != s[b]) return s[a] > s[b];
        return a < b;
    });
}

} // namespace

Simulation simulate_topk(const Matrix& scores, const Matrix& returns, const StrategyConfig& config,
                         IndexRange rows) {
    config.validate();
    if (!scores.same_shape(returns)) throw PreconditionError("scores and returns have different shapes");
    if (rows.end > scores.rows()) throw PreconditionError("simulation rows exceed the panel");
    const std::size_t n = scores.cols();

    Simulation sim;
    sim.equity_curve.push_back(1.0);
    std::vector<std::size_t> held;
    std::vector<char> missing_return(n, 0);
    double value = 1.0;

    for (std::size_t t = rows.begin; t < rows.end; ++t) {
        const auto s = scores.row(t);
        std::vector<char> is_held(n, 0);
        for (std::size_t i : held) is_held[i] = 1;

        std::vector<std::size_t> candidates;
        for (std::size_t i = 0; i < n; ++i)
            if (!is_held[i] && !is_missing(s[i])) candidates.push_back(i);
        sort_best_first(candidates, s);

        // Weakest first: missing scores, then ascending score, ties to the higher index.
        std::vector<std::size_t> weakest = held;
        std::sort(weakest.begin(), weakest.end(), [&](std::size_t a, std::size_t b) {
            const bool ma = is_missing(s[a]), mb = is_missing(s[b]);
            if (ma != mb) return ma;
            if (!ma && s[a] != s[b]) return s[a] < s[b];
            return a > b;
        });
        std::vector<char> sell(n, 0);
        std::size_t forced = 0;
        for (std::size_t i : held)
            if (missing_return[i]) {
                sell[i] = 1;
                ++forced;
            }
        const std::size_t target = std::max(forced, std::min(config.n_drop, candidates.size()));
        std::size_t sold = forced;
        for (std::size_t i : weakest) {
            if (sold >= target) break;
            if (!sell[i]) {
                sell[i] = 1;
                ++sold;
            }
        }

        std::vector<std::size_t> next;
        for (std::size_t i : held)
            if (!sell[i]) next.push_back(i);
        std::size_t bought = 0;
        for (std::size_t i : candidates) {
            if (next.size() >= config.top_k) break;
            next.push_back(i);
            ++bought;
        }
        if (next.size() < config.top_k) sim.short_universe = true;
        std::sort(next.begin(), next.end());

        const double old_size = static_cast<double>(held.size());
        const double new_size = static_cast<double>(next.size());
        const double sold_frac = held.empty() ? 0.0 : static_cast<double>(sold) / old_size;
        const double bought_frac = next.empty() ? 0.0 : static_cast<double>(bought) / new_size;
        const double before = value;
        value *= 1.0 - config.sell_cost * sold_frac;
        value *= 1.0 - config.buy_cost * bought_frac;

        std::fill(missing_return.begin(), missing_return.end(), 0);
        double gross = 0.0;
        for (std::size_t i : next) {
            const double r = returns(t, i);
            if (is_missing(r)) missing_return[i] = 1;
            else gross += r;
        }
        if (!next.empty()) value *= 1.0 + gross / new_size;

        double bench = 0.0;
        std::size_t bench_n = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (!is_missing(returns(t, i))) {
                bench += returns(t, i);
                ++bench_n;
            }
        bench = bench_n ? bench / static_cast<double>(bench_n) : 0.0;

        const double net = value / before - 1.0;
        sim.portfolio_returns.push_back(net);
        sim.benchmark_returns.push_back(bench);
        sim.excess_returns.push_back(net - bench);
        sim.turnover.push_back(sold_frac + bought_frac);
        sim.equity_curve.push_back(value);
        sim.holdings.push_back(next);
        held = std::move(next);
    }

    if (config.liquidate_at_end && !held.empty() && !sim.portfolio_returns.empty()) {
        const double before = sim.equity_curve[sim.equity_curve.size() - 2];
        value *= 1.0 - config.sell_cost;
        sim.equity_curve.back() = value;
        sim.portfolio_returns.back() = value / before - 1.0;
        sim.excess_returns.back() = sim.portfolio_returns.back() - sim.benchmark_returns.back();
        sim.turnover.back() += 1.0;
    }
    return sim;
}

double max_drawdown(std::span<const double> equity) {
    double peak = -std::numeric_limits<double>::infinity();
    double mdd = 0.0;
    for (double e : equity) {
        peak = std::max(peak, e);
        if (peak > 0.0) mdd = std::min(mdd, e / peak - 1.0);
    }
    return mdd;
}

RiskSummary ar_ir_mdd(std::span<const double> excess, std::span<const double> equity, int annualization) {
    RiskSummary r;
    r.mdd = max_drawdown(equity);
    if (excess.empty()) return r;
    const auto mv = stats::mean_pvar(excess);
    const double a = static_cast<double>(annualization);
    r.ar = mv.mean * a;
    const double te = std::sqrt(mv.var) * std::sqrt(a);
    if (stats::negligible_spread(mv.mean, std::sqrt(mv.var))) {
        r.ir = 0.0;
        r.ir_degenerate = true;
    } else {
        r.ir = r.ar / te;
    }
    return r;
}

double BacktestReport::metric(std::string_view name) const {
    if (name == "ic") return ic;
    if (name == "icir") return icir;
    if (name == "ar") return ar;
    if (name == "ir") return ir;
    if (name == "mdd") return mdd;
    throw PreconditionError("unknown metric '" + std::string(name) + "'");
}

namespace {

nlohmann::json num(double v) { return is_missing(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

double num_from(const nlohmann::json& j) { return j.is_null() ? kMissing : j.get<double>(); }

nlohmann::json series(const std::vector<double>& xs) {
    nlohmann::json a = nlohmann::json::array();
    for (double v : xs) a.push_back(num(v));
    return a;
}

std::vector<double> series_from(const nlohmann::json& j) {
    std::vector<double> out;
    for (const auto& v : j) out.push_back(num_from(v));
    return out;
}

} // namespace

nlohmann::json to_json(const BacktestReport& r, bool with_series) {
    nlohmann::json j = {{"ic", num(r.ic)},   {"icir", num(r.icir)}, {"icir_degenerate", r.icir_degenerate},
                        {"ar", num(r.ar)},   {"ir", num(r.ir)},     {"ir_degenerate", r.ir_degenerate},
                        {"mdd", num(r.mdd)}, {"factor_ic", r.factor_ic ? num(*r.factor_ic) : nullptr}};
    if (with_series) {
        j["ic_series"] = series(r.ic_series);
        j["equity_curve"] = series(r.equity_curve);
        j["turnover_series"] = series(r.turnover_series);
        j["excess_returns"] = series(r.excess_returns);
    }
    return j;
}

BacktestReport report_from_json(const nlohmann::json& j) {
    try {
        BacktestReport r;
        r.ic = num_from(j.at("ic"));
        r.icir = num_from(j.at("icir"));
        r.icir_degenerate = j.at("icir_degenerate").get<bool>();
        r.ar = num_from(j.at("ar"));
        r.ir = num_from(j.at("ir"));
        r.ir_degenerate = j.at("ir_degenerate").get<bool>();
        r.mdd = num_from(j.at("mdd"));
        if (j.contains("factor_ic") && !j["factor_ic"].is_null()) r.factor_ic = j["factor_ic"].get<double>();
        if (j.contains("ic_series")) r.ic_series = series_from(j["ic_series"]);
        if (j.contains("equity_curve")) r.equity_curve = series_from(j["equity_curve"]);
        if (j.contains("turnover_series")) r.turnover_series = series_from(j["turnover_series"]);
        if (j.contains("excess_returns")) r.excess_returns = series_from(j["excess_returns"]);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("backtest report: ") + e.what());
    }
}

BacktestReport evaluate_scores(const Matrix& scores, const Matrix& returns, const StrategyConfig& config,
                               IndexRange rows) {
    BacktestReport r;
    r.ic_series = daily_ic(scores, returns, rows);
    const IcSummary ic = summarize_ic(r.ic_series);
    r.ic = ic.ic;
    r.icir = ic.icir;
    r.icir_degenerate = ic.degenerate;
    Simulation sim = simulate_topk(scores, returns, config, rows);
    const RiskSummary risk = ar_ir_mdd(sim.excess_returns, sim.equity_curve, config.annualization);
    r.ar = risk.ar;
    r.ir = risk.ir;
    r.ir_degenerate = risk.ir_degenerate;
    r.mdd = risk.mdd;
    r.equity_curve = std::move(sim.equity_curve);
    r.turnover_series = std::move(sim.turnover);
    r.excess_returns = std::move(sim.excess_returns);
    return r;
}

// ---- engine ----

BacktestEngine::BacktestEngine(const Panel& panel, const SplitSpec& splits, EngineConfig config)
    : config_(std::move(config)) {
    if (panel.empty()) throw PreconditionError("backtest needs a non-empty panel");
    config_.strategy.validate();
    if (config_.label_horizon < 1) throw PreconditionError("label horizon must be >= 1");
    splits.validate(panel.dates());
    idx_ = resolve_splits(splits, panel.dates());
    if (idx_.train.size() <= config_.label_horizon)
        throw PreconditionError("training interval is shorter than the label horizon");
    opt_panel_ = panel.slice_dates(0, idx_.validation.end);
    full_panel_ = panel;
}

namespace {

// Dates of `r` whose next-day return stays inside `r`.
IndexRange next_day_rows(IndexRange r) { return {r.begin, r.end > r.begin ? r.end - 1 : r.begin}; }

} // namespace

std::vector<BacktestReport> BacktestEngine::reports(const Panel& panel,
                                                    const std::vector<dsl::FactorExpr>& factors,
                                                    IndexRange fit_rows,
                                                    const std::vector<IndexRange>& eval_rows) const {
    const model::FeatureBlock features = model::build_features(panel, factors, config_.include_base_factors);
    const Matrix labels = cross_sectional_zscore(forward_returns(panel, config_.label_horizon).values);
    model::FitOptions fit = config_.fit;
    if (fit.kind == model::ModelKind::Passthrough) fit.passthrough_feature = features.size() - 1;
    const model::ScoreModel m = model::fit(features, labels, fit_rows, fit);
    const Matrix next = forward_returns(panel, 1).values;

    std::vector<BacktestReport> out;
    for (IndexRange r : eval_rows) {
        const Matrix scores = model::predict(m, features, r);
        BacktestReport rep = evaluate_scores(scores, next, config_.strategy, r);
        if (factors.size() == 1) {
            const auto raw = daily_ic(features.matrices.back(), next, r);
            rep.factor_ic = summarize_ic(raw).ic;
        }
        out.push_back(std::move(rep));
    }
    return out;
}

SplitReports BacktestEngine::run(const std::vector<dsl::FactorExpr>& factors) const {
    const std::size_t h = config_.label_horizon;
    const IndexRange fit_rows{idx_.train.begin, idx_.train.end - h};
    auto r = reports(opt_panel_, factors, fit_rows,
                     {next_day_rows(idx_.train), next_day_rows(idx_.validation)});
    return {std::move(r[0]), std::move(r[1])};
}

BacktestReport BacktestEngine::run_final(const std::vector<dsl::FactorExpr>& factors, bool final_run) const {
    if (!final_run) throw LeakageError("test-interval results require the final-run flag");
    const std::size_t h = config_.label_horizon;
    const IndexRange fit_rows{idx_.train.begin, idx_.validation.end - h};
    return std::move(reports(full_panel_, factors, fit_rows, {next_day_rows(idx_.test)})[0]);
}

} // namespace alphalogics::backtest
