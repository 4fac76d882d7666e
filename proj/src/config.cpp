#include "alphalogics/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>

#include "alphalogics/error.hpp"

namespace alphalogics::config {

namespace fs = std::filesystem;

namespace {

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw SchemaError(where + ": expected an object");
    for (const auto& [k, v] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
            throw SchemaError(where + ": unknown key '" + k + "'");
    }
}

template <class T>
T get_or(const Json& j, const char* key, T fallback, const std::string& where) {
    if (!j.contains(key) || j[key].is_null()) return fallback;
    try {
        return j[key].get<T>();
    } catch (const Json::exception&) {
        throw SchemaError(where + "." + key + ": wrong type");
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return {};
    const fs::path raw(p);
    return (raw.is_absolute() ? raw : base / raw).lexically_normal();
}

std::optional<std::string> optional_text(const Json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (!j[key].is_string()) throw SchemaError(std::string("config.") + key + ": expected a string");
    return j[key].get<std::string>();
}

Json text_or_null(const std::optional<std::string>& s) { return s ? Json(*s) : Json(nullptr); }

DateInterval interval_from_json(const Json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_string() || !j[1].is_string())
        throw SchemaError(where + ": expected [\"YYYY-MM-DD\", \"YYYY-MM-DD\"]");
    try {
        return {Date::parse(j[0].get<std::string>()), Date::parse(j[1].get<std::string>())};
    } catch (const DataError& e) {
        throw SchemaError(where + ": " + e.what());
    }
}

} // namespace

SplitSpec splits_from_json(const Json& j) {
    check_keys(j, {"train", "validation", "test"}, "splits");
    for (const char* k : {"train", "validation", "test"})
        if (!j.contains(k)) throw SchemaError(std::string("splits: missing '") + k + "'");
    return {interval_from_json(j["train"], "splits.train"), interval_from_json(j["validation"], "splits.validation"),
            interval_from_json(j["test"], "splits.test")};
}

Json to_json(const SplitSpec& s) {
    auto iv = [](const DateInterval& d) { return Json::array({d.first.to_string(), d.last.to_string()}); };
    return {{"train", iv(s.train)}, {"validation", iv(s.validation)}, {"test", iv(s.test)}};
}

backtest::StrategyConfig strategy_from_json(const Json& j, backtest::StrategyConfig s) {
    const std::string w = "strategy";
    check_keys(j, {"top_k", "n_drop", "buy_cost", "sell_cost", "annualization", "liquidate_at_end"}, w);
    s.top_k = get_or(j, "top_k", s.top_k, w);
    s.n_drop = get_or(j, "n_drop", s.n_drop, w);
    s.buy_cost = get_or(j, "buy_cost", s.buy_cost, w);
    s.sell_cost = get_or(j, "sell_cost", s.sell_cost, w);
    s.annualization = get_or(j, "annualization", s.annualization, w);
    s.liquidate_at_end = get_or(j, "liquidate_at_end", s.liquidate_at_end, w);
    return s;
}

Json to_json(const backtest::StrategyConfig& s) {
    return {{"top_k", s.top_k},         {"n_drop", s.n_drop},
            {"buy_cost", s.buy_cost},   {"sell_cost", s.sell_cost},
            {"annualization", s.annualization}, {"liquidate_at_end", s.liquidate_at_end}};
}

RunConfig run_config_from_json(const Json& j, const fs::path& base_dir) {
    check_keys(j,
               {"schema_version", "data", "splits", "strategy", "model", "objective", "loop", "backend", "seed",
                "output_dir", "rag", "potential_direction"},
               "config");
    if (!j.contains("schema_version") || j["schema_version"] != kConfigVersion)
        throw SchemaError("config: unsupported or missing schema_version");
    RunConfig c;

    if (!j.contains("data")) throw SchemaError("config: missing 'data'");
    const Json& d = j["data"];
    check_keys(d, {"panel", "library", "min_days", "columns"}, "data");
    c.data.panel = resolve(base_dir, get_or<std::string>(d, "panel", "", "data"));
    c.data.library = resolve(base_dir, get_or<std::string>(d, "library", "", "data"));
    c.data.min_days = get_or(d, "min_days", c.data.min_days, "data");
    if (d.contains("columns")) {
        const Json& col = d["columns"];
        check_keys(col, {"date", "symbol", "open", "high", "low", "close", "volume"}, "data.columns");
        CsvSchema& s = c.data.columns;
        s.date = get_or(col, "date", s.date, "data.columns");
        s.instrument = get_or(col, "symbol", s.instrument, "data.columns");
        s.open = get_or(col, "open", s.open, "data.columns");
        s.high = get_or(col, "high", s.high, "data.columns");
        s.low = get_or(col, "low", s.low, "data.columns");
        s.close = get_or(col, "close", s.close, "data.columns");
        s.volume = get_or(col, "volume", s.volume, "data.columns");
    }

    if (!j.contains("splits")) throw SchemaError("config: missing 'splits'");
    c.splits = splits_from_json(j["splits"]);
    if (j.contains("strategy")) c.strategy = strategy_from_json(j["strategy"]);

    if (j.contains("model")) {
        const Json& m = j["model"];
        check_keys(m, {"kind", "ridge_lambda", "include_base_factors"}, "model");
        const std::string kind = get_or<std::string>(m, "kind", "ridge", "model");
        if (kind == "ridge") {
            c.fit.kind = model::ModelKind::Ridge;
        } else if (kind == "passthrough") {
            c.fit.kind = model::ModelKind::Passthrough;
        } else {
            throw SchemaError("model.kind must be 'ridge' or 'passthrough'");
        }
        c.fit.ridge_lambda = get_or(m, "ridge_lambda", c.fit.ridge_lambda, "model");
        c.include_base_factors = get_or(m, "include_base_factors", c.include_base_factors, "model");
    }

    try {
        if (j.contains("objective")) c.objective = loop::objective_from_json(j["objective"]);
        if (j.contains("loop")) {
            check_keys(j["loop"],
                       {"rounds", "early_stop", "max_candidates", "buffer", "trial_cap", "regeneration_budget"},
                       "loop");
            c.loop = loop::loop_config_from_json(j["loop"]);
        }
    } catch (const PreconditionError& e) {
        throw SchemaError(e.what());
    }

    if (!j.contains("backend")) throw SchemaError("config: missing 'backend'");
    const Json& b = j["backend"];
    check_keys(b, {"kind", "fixtures", "max_retries", "base_url", "model", "api_key_env", "timeout_seconds",
                   "temperature", "max_concurrency"},
               "backend");
    c.backend.kind = get_or<std::string>(b, "kind", c.backend.kind, "backend");
    c.backend.fixtures = resolve(base_dir, get_or<std::string>(b, "fixtures", "", "backend"));
    c.backend.max_retries = get_or(b, "max_retries", c.backend.max_retries, "backend");
    agents::HttpConfig& h = c.backend.http;
    h.base_url = get_or(b, "base_url", h.base_url, "backend");
    h.model = get_or(b, "model", h.model, "backend");
    h.api_key_env = get_or(b, "api_key_env", h.api_key_env, "backend");
    h.timeout_seconds = get_or(b, "timeout_seconds", h.timeout_seconds, "backend");
    h.temperature = get_or(b, "temperature", h.temperature, "backend");
    h.max_concurrency = get_or(b, "max_concurrency", h.max_concurrency, "backend");

    c.seed = get_or<std::uint64_t>(j, "seed", 0, "config");
    c.output_dir = resolve(base_dir, get_or<std::string>(j, "output_dir", "", "config"));
    c.rag = optional_text(j, "rag");
    c.potential_direction = optional_text(j, "potential_direction");
    c.validate();
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot read config " + path.string());
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) throw SchemaError("config " + path.string() + " is not valid JSON");
    return run_config_from_json(j, fs::absolute(path).parent_path());
}

void RunConfig::validate() const {
    auto must_exist = [](const fs::path& p, const char* what) {
        if (p.empty()) throw SchemaError(std::string("config: ") + what + " path is required");
        if (!fs::exists(p)) throw SchemaError(std::string("config: ") + what + " '" + p.string() + "' does not exist");
    };
    must_exist(data.panel, "data.panel");
    must_exist(data.library, "data.library");
    if (data.min_days < 1) throw SchemaError("config: data.min_days must be >= 1");
    if (backend.kind == "scripted") {
        must_exist(backend.fixtures, "backend.fixtures");
    } else if (backend.kind != "http") {
        throw SchemaError("config: backend.kind must be 'scripted' or 'http'");
    }
    if (backend.max_retries < 0) throw SchemaError("config: backend.max_retries must be >= 0");
    if (backend.http.max_concurrency < 1) throw SchemaError("config: backend.max_concurrency must be >= 1");
    if (!(fit.ridge_lambda >= 0.0)) throw SchemaError("config: model.ridge_lambda must be >= 0");
    try {
        strategy.validate();
        objective.validate();
        loop.validate();
    } catch (const PreconditionError& e) {
        throw SchemaError(std::string("config: ") + e.what());
    }
    if (splits.train.last < splits.train.first || splits.validation.last < splits.validation.first ||
        splits.test.last < splits.test.first || !(splits.train.last < splits.validation.first) ||
        !(splits.validation.last < splits.test.first))
        throw SchemaError("config: splits must be non-empty, ordered and disjoint");
}

Json to_json(const RunConfig& c) {
    Json backend = {{"kind", c.backend.kind}, {"max_retries", c.backend.max_retries}};
    if (c.backend.kind == "scripted") {
        backend["fixtures"] = c.backend.fixtures.string();
    } else {
        const agents::HttpConfig& h = c.backend.http;
        backend.update({{"base_url", h.base_url},
                        {"model", h.model},
                        {"api_key_env", h.api_key_env},
                        {"timeout_seconds", h.timeout_seconds},
                        {"temperature", h.temperature},
                        {"max_concurrency", h.max_concurrency}});
    }
    const CsvSchema& s = c.data.columns;
    return {{"schema_version", kConfigVersion},
            {"data",
             {{"panel", c.data.panel.string()},
              {"library", c.data.library.string()},
              {"min_days", c.data.min_days},
              {"columns",
               {{"date", s.date},
                {"symbol", s.instrument},
                {"open", s.open},
                {"high", s.high},
                {"low", s.low},
                {"close", s.close},
                {"volume", s.volume}}}}},
            {"splits", to_json(c.splits)},
            {"strategy", to_json(c.strategy)},
            {"model",
             {{"kind", c.fit.kind == model::ModelKind::Ridge ? "ridge" : "passthrough"},
              {"ridge_lambda", c.fit.ridge_lambda},
              {"include_base_factors", c.include_base_factors}}},
            {"objective", loop::to_json(c.objective)},
            {"loop", loop::to_json(c.loop)},
            {"backend", backend},
            {"seed", c.seed},
            {"rag", text_or_null(c.rag)},
            {"potential_direction", text_or_null(c.potential_direction)}};
}

std::unique_ptr<agents::CompletionBackend> make_backend(const BackendConfig& b, std::uint64_t seed) {
    if (b.kind == "scripted") return std::make_unique<agents::ScriptedBackend>(agents::ScriptedBackend::read_fixture_file(b.fixtures));
    if (b.kind == "http") {
        agents::HttpConfig h = b.http;
        h.seed = seed;
        return std::make_unique<agents::HttpBackend>(h);
    }
    throw SchemaError("unknown backend kind '" + b.kind + "'");
}

Panel load_panel(const DataConfig& d) { return filter_universe(ingest_csv(d.panel, d.columns), d.min_days); }

backtest::EngineConfig engine_config(const RunConfig& c) {
    backtest::EngineConfig e;
    e.strategy = c.strategy;
    e.fit = c.fit;
    e.include_base_factors = c.include_base_factors;
    return e;
}

RunResult run_pipeline(const RunConfig& c, const RunOptions& opts) {
    const fs::path dir = opts.output_dir ? *opts.output_dir : c.output_dir;
    if (dir.empty()) throw SchemaError("no output directory configured");

    Panel panel = load_panel(c.data);
    c.splits.validate(panel.dates());
    const logic::LogicLibrary initial = logic::LogicLibrary::load(c.data.library);

    loop::RunStore store(dir);
    const Json snapshot = to_json(c);
    RunResult result;
    result.run_dir = dir;
    if (store.has_state()) {
        if (!opts.resume) throw PreconditionError(dir.string() + " already holds a run; pass --resume to continue it");
        const auto previous = store.read_config();
        if (!previous || *previous != snapshot)
            throw PreconditionError("config differs from the one recorded in " + dir.string());
    } else {
        store.write_config(snapshot);
    }

    auto backend = make_backend(c.backend, c.seed);
    loop::EngineEvaluator evaluator(std::move(panel), c.splits, engine_config(c));
    loop::LoopContext ctx{*backend, evaluator, c.objective, c.loop, agents::CallOptions{c.backend.max_retries},
                          c.rag, c.potential_direction};

    if (store.has_state()) {
        result.state = store.load();
        loop::finish_outer_loop(result.state, ctx, &store);
    } else {
        result.state = loop::outer_loop(initial, ctx, &store);
    }
    if (opts.final_run) result.final_report = loop::final_evaluation(result.state, evaluator, true, &store);
    return result;
}

Json summary(const RunResult& r) {
    const loop::OuterState& s = r.state;
    Json j = {{"run_dir", r.run_dir.string()},
              {"rounds", s.t},
              {"library_size", s.library.size()},
              {"best_logic", s.best_id.empty() ? Json(nullptr) : Json(s.best_id)}};
    if (const loop::Evidence* ev = s.best_evidence(); ev && ev->best_candidate()) {
        j["best_expression"] = ev->best_candidate()->expression;
        j["validation"] = backtest::to_json(ev->best_candidate()->validation);
    }
    if (r.final_report) {
        Json test = (*r.final_report)["test"];
        for (const char* k : {"ic_series", "equity_curve", "turnover_series", "excess_returns"}) test.erase(k);
        j["test"] = test;
    }
    return j;
}

} // namespace alphalogics::config
