#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"

#include "alphalogics/agents.hpp"
#include "alphalogics/backtest.hpp"
#include "alphalogics/loop.hpp"
#include "alphalogics/panel.hpp"

namespace alphalogics::config {

using Json = nlohmann::json;

inline constexpr int kConfigVersion = 1;

struct DataConfig {
    std::filesystem::path panel;    // OHLCV csv
    std::filesystem::path library;  // initial logic library (jsonl)
    std::size_t min_days = 100;
    CsvSchema columns;
};

struct BackendConfig {
    std::string kind = "scripted";  // "scripted" or "http"
    std::filesystem::path fixtures;  // scripted only
    agents::HttpConfig http;
    int max_retries = 3;
};

/// Everything a pipeline run needs. Relative paths in the file are resolved
/// against the directory holding it.
struct RunConfig {
    DataConfig data;
    SplitSpec splits;
    backtest::StrategyConfig strategy;
    model::FitOptions fit;
    bool include_base_factors = true;
    loop::Objective objective;
    loop::LoopConfig loop;
    BackendConfig backend;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir;
    std::optional<std::string> rag;
    std::optional<std::string> potential_direction;

    /// Range checks plus existence of every referenced input file. Throws
    /// SchemaError.
    void validate() const;
};

/// Throws SchemaError on unknown keys, bad types or a version mismatch.
RunConfig run_config_from_json(const Json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical snapshot written into the run directory. The output directory is
/// left out so two runs of one config produce identical records.
Json to_json(const RunConfig& c);

SplitSpec splits_from_json(const Json& j);
Json to_json(const SplitSpec& s);
backtest::StrategyConfig strategy_from_json(const Json& j, backtest::StrategyConfig base = {});
Json to_json(const backtest::StrategyConfig& s);

std::unique_ptr<agents::CompletionBackend> make_backend(const BackendConfig& b, std::uint64_t seed);

/// Ingests and filters the configured panel.
Panel load_panel(const DataConfig& d);

backtest::EngineConfig engine_config(const RunConfig& c);

struct RunOptions {
    bool resume = false;
    bool final_run = false;
    /// Overrides RunConfig::output_dir when set.
    std::optional<std::filesystem::path> output_dir;
};

struct RunResult {
    loop::OuterState state;
    std::optional<Json> final_report;
    std::filesystem::path run_dir;
};

/// Outer loop plus (with final_run) the test-interval evaluation, persisted
/// in the run directory. A directory that already holds a run is only
/// reused with `resume`, and only for the same config snapshot.
RunResult run_pipeline(const RunConfig& c, const RunOptions& opts);

/// Test-split report and compact run summary for printing.
Json summary(const RunResult& r);

} // namespace alphalogics::config
