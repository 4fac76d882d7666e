#pragma once

#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

#include "alphalogics/dsl.hpp"
#include "alphalogics/matrix.hpp"
#include "alphalogics/model.hpp"
#include "alphalogics/panel.hpp"

namespace alphalogics::backtest {

struct StrategyConfig {
    std::size_t top_k = 50;
    std::size_t n_drop = 5;
    double buy_cost = 0.0005;
    double sell_cost = 0.0015;
    int annualization = 252;
    /// Sell every holding after the last day, paying sell_cost.
    bool liquidate_at_end = false;

    /// Throws PreconditionError when an invariant is violated.
    void validate() const;
};

/// Per-date Spearman IC between scores(t) and returns(t) for t in `rows`.
/// Dates with fewer than two common non-missing cells (or a constant side)
/// are missing.
std::vector<double> daily_ic(const Matrix& scores, const Matrix& returns, IndexRange rows);

struct IcSummary {
    double ic = kMissing;
    double icir = kMissing;
    bool degenerate = false;  // zero std: icir reported as 0
    std::size_t count = 0;    // non-missing entries
};

/// Mean and mean/population-std over the non-missing entries.
IcSummary summarize_ic(std::span<const double> ic_series);

struct Simulation {
    std::vector<double> equity_curve;       // size days+1, starts at 1
    std::vector<double> portfolio_returns;  // net of costs
    std::vector<double> benchmark_returns;
    std::vector<double> excess_returns;
    std::vector<double> turnover;
    std::vector<std::vector<std::size_t>> holdings;  // per day, ascending
    bool short_universe = false;  // fewer than top_k scored names at some point
};

/// Top-k with daily dropout of the n_drop weakest holdings. On day t the
/// book is formed from scores(t) and earns returns(t), the next-day simple
/// return. Costs are charged on traded value fractions at execution.
Simulation simulate_topk(const Matrix& scores, const Matrix& returns, const StrategyConfig& config,
                         IndexRange rows);

struct RiskSummary {
    double ar = kMissing;
    double ir = kMissing;
    double mdd = 0.0;
    bool ir_degenerate = false;  // zero tracking error: ir reported as 0
};

/// Drawdown as trough/peak - 1, minimized over the curve.
double max_drawdown(std::span<const double> equity);
RiskSummary ar_ir_mdd(std::span<const double> excess, std::span<const double> equity, int annualization);

struct BacktestReport {
    double ic = kMissing;
    double icir = kMissing;
    bool icir_degenerate = false;
    double ar = kMissing;
    double ir = kMissing;
    bool ir_degenerate = false;
    double mdd = 0.0;
    /// Mean daily IC of the single generated factor alone, when there is one.
    std::optional<double> factor_ic;
    std::vector<double> ic_series;
    std::vector<double> equity_curve;
    std::vector<double> turnover_series;
    std::vector<double> excess_returns;

    /// Metric lookup by name: ic, icir, ar, ir, mdd.
    double metric(std::string_view name) const;
};

/// Missing values become JSON null.
nlohmann::json to_json(const BacktestReport& r, bool with_series = false);
BacktestReport report_from_json(const nlohmann::json& j);

/// IC and portfolio metrics of a score matrix over `rows`.
BacktestReport evaluate_scores(const Matrix& scores, const Matrix& returns, const StrategyConfig& config,
                               IndexRange rows);

struct EngineConfig {
    StrategyConfig strategy;
    model::FitOptions fit;
    bool include_base_factors = true;
    std::size_t label_horizon = 1;
};

struct SplitReports {
    BacktestReport train;
    BacktestReport validation;
};

/// Runs the score model plus portfolio simulation on the splits. The
/// optimization path only ever sees the panel truncated at the end of the
/// validation interval; the test interval is reachable only via run_final.
class BacktestEngine {
public:
    BacktestEngine(const Panel& panel, const SplitSpec& splits, EngineConfig config);

    SplitReports run(const std::vector<dsl::FactorExpr>& factors) const;

    /// Refit on train+validation and report on test. Throws LeakageError
    /// unless `final_run` is set.
    BacktestReport run_final(const std::vector<dsl::FactorExpr>& factors, bool final_run) const;

    const EngineConfig& config() const noexcept { return config_; }
    const SplitIndexes& splits() const noexcept { return idx_; }
    const Panel& optimization_panel() const noexcept { return opt_panel_; }

private:
    /// Fits on `fit_rows` of `panel` and reports on each of `eval_rows`.
    std::vector<BacktestReport> reports(const Panel& panel, const std::vector<dsl::FactorExpr>& factors,
                                        IndexRange fit_rows, const std::vector<IndexRange>& eval_rows) const;

    Panel opt_panel_;
    Panel full_panel_;
    SplitIndexes idx_;
    EngineConfig config_;
};

} // namespace alphalogics::backtest
