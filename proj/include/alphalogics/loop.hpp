#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "alphalogics/agents.hpp"
#include "alphalogics/backtest.hpp"
#include "alphalogics/logic.hpp"

namespace alphalogics::loop {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Scalar selection objective: a weighted sum of validation metrics. Higher is
/// better; mdd is stored as a non-positive fraction so it needs no sign flip.
/// Missing metrics make J = -inf.
struct Objective {
    std::map<std::string, double> weights{{"ir", 1.0}};

    double operator()(const backtest::BacktestReport& r) const;
    /// Throws PreconditionError for unknown metric names or an empty map.
    void validate() const;
};

Json to_json(const Objective& o);
Objective objective_from_json(const Json& j);

struct LoopConfig {
    int rounds = 5;                  // T, outer rounds
    int early_stop = 3;              // T_early
    std::size_t max_candidates = 5;  // per inner round
    std::size_t buffer = 5;          // M, candidates shown to the feedback agent
    std::size_t trial_cap = 20;      // candidates backtested per logic
    int regeneration_budget = 3;     // generator calls per inner round

    void validate() const;
};

Json to_json(const LoopConfig& c);
LoopConfig loop_config_from_json(const Json& j);

// ---- evidence ----

struct CandidateRecord {
    int round = 0;
    std::string generated;   // canonical text as generated
    std::string expression;  // canonical text actually evaluated
    bool flipped = false;    // negated to match the logic's direction
    double j = 0.0;
    backtest::BacktestReport train;
    backtest::BacktestReport validation;
};

struct InnerRound {
    int round = 0;
    std::vector<std::size_t> candidates;  // indexes into Evidence::candidates
    std::optional<std::size_t> round_best;
    bool improved = false;
    int counter = 0;  // c after the round
    int regenerations = 0;
    std::vector<agents::Rejection> rejected;
    bool feedback_requested = false;
    Json feedback;  // null when not requested or unavailable
    std::string error;
};

struct Evidence {
    std::string logic_id;
    std::string status = "empty";  // "ok", "empty" or "invalid"
    std::string error;
    std::optional<logic::MarketLogicStruct> h_struct;
    std::optional<logic::ConstraintSet> gamma;
    std::vector<CandidateRecord> candidates;
    std::vector<InnerRound> rounds;
    std::optional<std::size_t> best;  // index into candidates
    std::string stop_reason;          // "early_stop", "trial_cap" or "invalid"

    double best_j() const;  // -inf without a best candidate
    const CandidateRecord* best_candidate() const { return best ? &candidates[*best] : nullptr; }
    std::size_t feedback_requests() const;
};

Json to_json(const Evidence& e);
Evidence evidence_from_json(const Json& j);

/// Compact, validation-only view handed to the outer-loop agents.
Json agent_view(const Evidence& e);

// ---- candidate evaluation ----

class CandidateEvaluator {
public:
    virtual ~CandidateEvaluator() = default;
    /// Train and validation reports; must never touch test-interval data.
    virtual backtest::SplitReports evaluate(const dsl::FactorExpr& expr, const logic::MarketLogicStruct& h) = 0;
};

/// Backtest-engine evaluator: base factors plus the candidate through the
/// score model, labels at the logic's horizon B.h.
class EngineEvaluator : public CandidateEvaluator {
public:
    EngineEvaluator(Panel panel, SplitSpec splits, backtest::EngineConfig config);

    backtest::SplitReports evaluate(const dsl::FactorExpr& expr, const logic::MarketLogicStruct& h) override;
    /// Refit on train+validation and report on test; LeakageError unless
    /// `final_run`.
    backtest::BacktestReport evaluate_final(const dsl::FactorExpr& expr, const logic::MarketLogicStruct& h,
                                            bool final_run);

private:
    const backtest::BacktestEngine& engine_for(std::size_t horizon);

    Panel panel_;
    SplitSpec splits_;
    backtest::EngineConfig config_;
    std::mutex mu_;
    std::map<std::size_t, std::unique_ptr<backtest::BacktestEngine>> engines_;
};

// ---- inner loop ----

struct LoopContext {
    agents::CompletionBackend& backend;
    CandidateEvaluator& evaluator;
    Objective objective;
    LoopConfig config;
    agents::CallOptions call;
    std::optional<std::string> rag;
    std::optional<std::string> potential_direction;
};

/// Factor optimization under one fixed logic. Uses m.h_struct when present,
/// otherwise asks the constraint agent. Never throws for agent or compile
/// failures: they are recorded in the evidence.
Evidence inner_loop(const logic::MarketLogic& m, LoopContext& ctx);

// ---- outer loop ----

struct OuterRound {
    int round = 0;  // 1-based
    std::string logic_id;
    Evidence evidence;
    Json feedback;  // refinement record or null
    bool best_updated = false;
    std::optional<std::string> generated_id;  // logic produced for the next round
    std::string generation_error;
};

struct OuterState {
    logic::LogicLibrary library;
    std::size_t init_size = 0;
    std::string current_id;
    std::vector<std::string> hist;  // ids: initial generation plus one per round
    std::vector<OuterRound> rounds;
    std::string best_id;
    std::optional<std::size_t> best_round;  // index into rounds
    int t = 0;
    bool complete = false;

    const Evidence* best_evidence() const { return best_round ? &rounds[*best_round].evidence : nullptr; }
};

Json to_json(const OuterState& s);

/// Run directory: config.json, library.jsonl, rounds/round_NNN.json,
/// state.json and final_report.json. state.json is written last and marks the
/// last completed round.
class RunStore {
public:
    explicit RunStore(std::filesystem::path dir);

    const std::filesystem::path& dir() const noexcept { return dir_; }
    bool has_state() const;

    void write_config(const Json& config) const;
    std::optional<Json> read_config() const;

    /// Writes the library, every round file not yet written, then state.json.
    void save(const OuterState& s) const;
    /// Throws SchemaError on a corrupt or mismatched record.
    OuterState load() const;

    void write_final(const Json& record) const;
    std::optional<Json> read_final() const;

private:
    std::filesystem::path dir_;
};

/// Generates the first logic from the library and records round 0.
OuterState start_outer_loop(const logic::LogicLibrary& initial, LoopContext& ctx, const RunStore* store = nullptr);

/// One outer round: inner loop, refinement feedback, best update, next logic.
void advance_outer_loop(OuterState& s, LoopContext& ctx, const RunStore* store = nullptr);

/// Runs (or continues) until t = T.
OuterState outer_loop(const logic::LogicLibrary& initial, LoopContext& ctx, const RunStore* store = nullptr);
void finish_outer_loop(OuterState& s, LoopContext& ctx, const RunStore* store = nullptr);

/// Final test-interval backtest of the best logic's best expression. Requires
/// `final_run` and a complete state (LeakageError otherwise); cached in the
/// store so a second call returns the identical record.
Json final_evaluation(const OuterState& s, EngineEvaluator& evaluator, bool final_run,
                      const RunStore* store = nullptr);

} // namespace alphalogics::loop
