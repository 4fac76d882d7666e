// alphalogics: command-line front end.
//
// Exit codes: 0 success, 1 runtime error, 2 usage, parse or schema error.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "alphalogics/agents.hpp"
#include "alphalogics/backtest.hpp"
#include "alphalogics/config.hpp"
#include "alphalogics/dsl.hpp"
#include "alphalogics/error.hpp"
#include "alphalogics/logic.hpp"
#include "alphalogics/loop.hpp"
#include "alphalogics/panel.hpp"
#include "alphalogics/synth.hpp"

namespace al = alphalogics;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct UsageError : al::Error {
    using al::Error::Error;
};

std::string cell(double v, int width = 10, int prec = 4) {
    char buf[64];
    if (!std::isfinite(v)) {
        std::snprintf(buf, sizeof buf, "%*s", width, "NA");
    } else {
        std::snprintf(buf, sizeof buf, "%*.*f", width, prec, v);
    }
    return buf;
}

void print_table(const std::vector<std::pair<std::string, al::backtest::BacktestReport>>& rows) {
    std::printf("%-12s%10s%10s%10s%10s%10s\n", "split", "IC", "ICIR", "AR", "IR", "MDD");
    for (const auto& [name, r] : rows)
        std::printf("%-12s%s%s%s%s%s\n", name.c_str(), cell(r.ic).c_str(), cell(r.icir).c_str(), cell(r.ar).c_str(),
                    cell(r.ir).c_str(), cell(r.mdd).c_str());
}

void print_json(const Json& j) { std::cout << j.dump(2) << "\n"; }

Json read_json_file(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw UsageError("cannot read " + p.string());
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) throw al::SchemaError(p.string() + " is not valid JSON");
    return j;
}

al::DateInterval interval(const std::vector<std::string>& v, const char* name) {
    if (v.size() != 2) throw UsageError(std::string("--") + name + " takes FIRST LAST");
    try {
        return {al::Date::parse(v[0]), al::Date::parse(v[1])};
    } catch (const al::DataError& e) {
        throw UsageError(std::string("--") + name + ": " + e.what());
    }
}

void require_credential(const std::string& env) {
    const char* key = std::getenv(env.c_str());
    if (!key || !*key) throw UsageError("the http backend needs the credential in $" + env);
}

// ---- commands ----

struct IngestArgs {
    std::string csv, out;
    std::size_t min_days = 100;
};

int cmd_ingest(const IngestArgs& a, bool json) {
    const al::Panel raw = al::ingest_csv(a.csv);
    const al::Panel p = al::filter_universe(raw, a.min_days);
    if (!a.out.empty()) al::write_csv(p, a.out);
    const Json s = {{"dates", p.num_dates()},
                    {"instruments", p.num_instruments()},
                    {"removed", raw.num_instruments() - p.num_instruments()},
                    {"first_date", p.dates().front().to_string()},
                    {"last_date", p.dates().back().to_string()},
                    {"output", a.out.empty() ? Json(nullptr) : Json(a.out)}};
    if (json) {
        print_json(s);
    } else {
        std::printf("%zu dates x %zu instruments (%zu removed by min_days=%zu), %s .. %s\n", p.num_dates(),
                    p.num_instruments(), raw.num_instruments() - p.num_instruments(), a.min_days,
                    p.dates().front().to_string().c_str(), p.dates().back().to_string().c_str());
        if (!a.out.empty()) std::printf("wrote %s\n", a.out.c_str());
    }
    return 0;
}

struct EvalArgs {
    std::string expr, panel, date;
    std::size_t min_days = 1;
};

int cmd_eval(const EvalArgs& a, bool json) {
    const al::dsl::FactorExpr e = al::dsl::parse(a.expr);
    const al::Panel p = al::filter_universe(al::ingest_csv(a.panel), a.min_days);
    std::size_t row = p.num_dates() - 1;
    if (!a.date.empty()) {
        row = p.lower_bound(al::Date::parse(a.date));
        if (row == p.num_dates() || p.dates()[row] != al::Date::parse(a.date))
            throw UsageError("date " + a.date + " is not in the panel");
    }
    const al::Matrix m = al::dsl::evaluate(e, p);
    if (json) {
        Json values = Json::object();
        for (std::size_t i = 0; i < p.num_instruments(); ++i)
            values[p.instruments()[i]] = std::isfinite(m(row, i)) ? Json(m(row, i)) : Json(nullptr);
        print_json({{"expression", al::dsl::unparse(e)}, {"date", p.dates()[row].to_string()}, {"values", values}});
    } else {
        std::printf("# %s on %s\n", al::dsl::unparse(e).c_str(), p.dates()[row].to_string().c_str());
        for (std::size_t i = 0; i < p.num_instruments(); ++i)
            std::printf("%-12s %s\n", p.instruments()[i].c_str(),
                        std::isfinite(m(row, i)) ? cell(m(row, i), 0, 6).c_str() : "NA");
    }
    return 0;
}

struct BacktestArgs {
    std::string expr, panel, config, split = "validation";
    std::vector<std::string> train, validation, test;
    std::size_t min_days = 100;
    std::optional<std::size_t> top_k, n_drop;
    std::optional<double> buy_cost, sell_cost;
    std::optional<int> annualization;
    std::size_t horizon = 1;
    bool raw = false;
    bool final_run = false;
};

int cmd_backtest(const BacktestArgs& a, bool json) {
    const al::dsl::FactorExpr e = al::dsl::parse(a.expr);
    al::backtest::EngineConfig ec;
    al::Panel panel;
    al::SplitSpec splits;
    if (!a.config.empty()) {
        const al::config::RunConfig c = al::config::load_run_config(a.config);
        ec = al::config::engine_config(c);
        panel = al::config::load_panel(c.data);
        splits = c.splits;
    }
    if (!a.panel.empty()) panel = al::filter_universe(al::ingest_csv(a.panel), a.min_days);
    if (panel.empty()) throw UsageError("backtest needs --panel or --config");
    if (!a.train.empty()) splits.train = interval(a.train, "train");
    if (!a.validation.empty()) splits.validation = interval(a.validation, "validation");
    if (!a.test.empty()) splits.test = interval(a.test, "test");
    if (a.config.empty() && (a.train.empty() || a.validation.empty() || a.test.empty()))
        throw UsageError("without --config, --train, --validation and --test are required");

    if (a.top_k) ec.strategy.top_k = *a.top_k;
    if (a.n_drop) ec.strategy.n_drop = *a.n_drop;
    if (a.buy_cost) ec.strategy.buy_cost = *a.buy_cost;
    if (a.sell_cost) ec.strategy.sell_cost = *a.sell_cost;
    if (a.annualization) ec.strategy.annualization = *a.annualization;
    ec.label_horizon = a.horizon;
    if (a.raw) {
        ec.include_base_factors = false;
        ec.fit.kind = al::model::ModelKind::Passthrough;
    }
    const bool wants_test = a.split == "test" || a.split == "all";
    if (wants_test && !a.final_run) throw al::LeakageError("the test split is only reported with --final");

    const al::backtest::BacktestEngine engine(panel, splits, ec);
    std::vector<std::pair<std::string, al::backtest::BacktestReport>> rows;
    if (a.split != "test") {
        const al::backtest::SplitReports r = engine.run({e});
        if (a.split == "train" || a.split == "all") rows.emplace_back("train", r.train);
        if (a.split == "validation" || a.split == "all") rows.emplace_back("validation", r.validation);
    }
    if (wants_test) rows.emplace_back("test", engine.run_final({e}, true));

    if (json) {
        Json out = {{"expression", al::dsl::unparse(e)}};
        for (const auto& [name, r] : rows) out[name] = al::backtest::to_json(r);
        print_json(out);
    } else {
        std::printf("# %s\n", al::dsl::unparse(e).c_str());
        print_table(rows);
    }
    return 0;
}

int cmd_compile(const std::string& path, const std::vector<std::string>& exprs, bool json) {
    const Json rec = read_json_file(path);
    al::logic::MarketLogicStruct h;
    if (rec.contains("h_struct") && rec["h_struct"].is_object()) {
        h = al::logic::struct_from_json(rec["h_struct"]);
    } else if (rec.contains("C") || rec.contains("H_struct")) {
        h = al::logic::canonicalize_fields(rec);
    } else {
        throw al::SchemaError(path + ": expected a logic record with h_struct, or a structured logic with C and B");
    }
    const al::logic::ConstraintSet g = al::logic::compile(h);
    Json checks = Json::array();
    bool all_ok = true;
    for (const std::string& text : exprs) {
        const al::logic::CheckReport rep = al::logic::check(al::dsl::parse(text), g);
        Json v = Json::array();
        for (const auto& x : rep.violations) v.push_back({{"rule", x.rule}, {"path", x.path}, {"message", x.message}});
        checks.push_back({{"expression", text}, {"ok", rep.ok()}, {"violations", v}});
        all_ok = all_ok && rep.ok();
    }
    if (json) {
        Json out = {{"H_struct", al::logic::to_json(h)}, {"Gamma", al::logic::to_json(g)}};
        if (!exprs.empty()) out["checks"] = checks;
        print_json(out);
    } else {
        std::cout << al::logic::serialize(g) << "\n";
        for (const Json& c : checks) {
            std::printf("%s: %s\n", c["ok"].get<bool>() ? "ok" : "rejected", c["expression"].get<std::string>().c_str());
            for (const Json& v : c["violations"])
                std::printf("  %s at %s: %s\n", v["rule"].get<std::string>().c_str(),
                            v["path"].get<std::string>().c_str(), v["message"].get<std::string>().c_str());
        }
    }
    return all_ok ? 0 : 1;
}

struct BackendArgs {
    std::string kind = "scripted", fixtures, base_url, model;
    int max_retries = 3;
    std::uint64_t seed = 0;
};

std::unique_ptr<al::agents::CompletionBackend> backend_from(const BackendArgs& a) {
    al::config::BackendConfig b;
    b.kind = a.kind;
    b.fixtures = a.fixtures;
    if (!a.base_url.empty()) b.http.base_url = a.base_url;
    if (!a.model.empty()) b.http.model = a.model;
    if (a.kind == "scripted" && a.fixtures.empty()) throw UsageError("the scripted backend needs --fixtures");
    if (a.kind == "http") require_credential(b.http.api_key_env);
    return al::config::make_backend(b, a.seed);
}

int cmd_mine(const std::string& file, const std::string& out, const BackendArgs& ba, bool json) {
    std::ifstream in(file);
    if (!in) throw UsageError("cannot read " + file);
    auto backend = backend_from(ba);
    const al::agents::CallOptions call{ba.max_retries};

    al::logic::LogicLibrary lib;
    Json skipped = Json::array();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto last = line.find_last_not_of(" \t\r");
        const std::string formula = line.substr(first, last - first + 1);
        try {
            lib.append(al::agents::mine_logic(formula, lib.next_id("mined"), *backend, call));
        } catch (const al::PreconditionError& e) {
            std::fprintf(stderr, "warning: line %zu skipped: %s\n", lineno, e.what());
            skipped.push_back({{"line", lineno}, {"formula", formula}, {"reason", e.what()}});
        }
    }
    if (!out.empty()) lib.save(out);
    if (json) {
        Json logics = Json::array();
        for (const auto& m : lib.entries()) logics.push_back(al::logic::to_json(m));
        print_json({{"logics", logics}, {"skipped", skipped}});
    } else {
        for (const auto& m : lib.entries()) std::printf("%s: %s\n", m.id.c_str(), m.logic_text.c_str());
        std::printf("%zu logics mined, %zu formulas skipped\n", lib.size(), skipped.size());
        if (!out.empty()) std::printf("wrote %s\n", out.c_str());
    }
    return 0;
}

struct RunArgs {
    std::string config, out;
    std::optional<std::uint64_t> seed;
    bool resume = false;
    bool final_run = false;
};

int cmd_run(const RunArgs& a, bool json) {
    al::config::RunConfig c = al::config::load_run_config(a.config);
    if (a.seed) c.seed = *a.seed;
    if (c.backend.kind == "http") require_credential(c.backend.http.api_key_env);
    al::config::RunOptions opts;
    opts.resume = a.resume;
    opts.final_run = a.final_run;
    if (!a.out.empty()) opts.output_dir = fs::absolute(a.out);
    const al::config::RunResult r = al::config::run_pipeline(c, opts);
    const Json s = al::config::summary(r);
    if (json) {
        print_json(s);
        return 0;
    }
    std::printf("run directory: %s\n", r.run_dir.string().c_str());
    std::printf("rounds: %d, library size: %zu\n", r.state.t, r.state.library.size());
    const al::loop::Evidence* ev = r.state.best_evidence();
    if (!ev || !ev->best_candidate()) {
        std::printf("no candidate was evaluated\n");
        return 0;
    }
    std::printf("best logic: %s\n", r.state.best_id.c_str());
    if (const auto* m = r.state.library.find(r.state.best_id)) std::printf("  %s\n", m->logic_text.c_str());
    std::printf("best expression: %s\n", ev->best_candidate()->expression.c_str());
    std::vector<std::pair<std::string, al::backtest::BacktestReport>> rows{{"validation", ev->best_candidate()->validation}};
    if (r.final_report) rows.emplace_back("test", al::backtest::report_from_json((*r.final_report)["test"]));
    print_table(rows);
    if (!r.final_report) std::printf("(test split not evaluated; pass --final)\n");
    return 0;
}

struct SynthArgs {
    std::string out;
    al::synth::PlantedOptions opts;
};

int cmd_synth(const SynthArgs& a, bool json) {
    const al::Panel p = al::synth::planted_panel(a.opts);
    al::write_csv(p, a.out);
    if (json) {
        print_json({{"output", a.out}, {"dates", p.num_dates()}, {"instruments", p.num_instruments()},
                    {"seed", a.opts.seed}});
    } else {
        std::printf("wrote %s (%zu dates x %zu instruments, seed %llu)\n", a.out.c_str(), p.num_dates(),
                    p.num_instruments(), static_cast<unsigned long long>(a.opts.seed));
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Market-logic driven alpha factor mining"};
    app.require_subcommand(1);
    bool json = false;
    app.add_flag("--json", json, "Emit machine-readable JSON");

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Ingest an OHLCV csv and apply the universe filter");
    c_ingest->add_option("csv", ingest.csv, "Input csv")->required()->check(CLI::ExistingFile);
    c_ingest->add_option("-o,--out", ingest.out, "Write the filtered panel here");
    c_ingest->add_option("--min-days", ingest.min_days, "Minimum non-missing closes")->check(CLI::PositiveNumber);

    EvalArgs eval;
    auto* c_eval = app.add_subcommand("eval", "Evaluate an expression and print one cross-section");
    c_eval->add_option("expression", eval.expr)->required();
    c_eval->add_option("--panel", eval.panel)->required()->check(CLI::ExistingFile);
    c_eval->add_option("--date", eval.date, "YYYY-MM-DD (default: last date)");
    c_eval->add_option("--min-days", eval.min_days)->check(CLI::PositiveNumber);

    BacktestArgs bt;
    auto* c_bt = app.add_subcommand("backtest", "Backtest a single expression with the base factors");
    c_bt->add_option("expression", bt.expr)->required();
    c_bt->add_option("--panel", bt.panel)->check(CLI::ExistingFile);
    c_bt->add_option("--config", bt.config, "Take panel, splits, strategy and model from a run config")
        ->check(CLI::ExistingFile);
    c_bt->add_option("--train", bt.train)->expected(2);
    c_bt->add_option("--validation", bt.validation)->expected(2);
    c_bt->add_option("--test", bt.test)->expected(2);
    c_bt->add_option("--split", bt.split)->check(CLI::IsMember({"train", "validation", "test", "all"}));
    c_bt->add_option("--min-days", bt.min_days)->check(CLI::PositiveNumber);
    c_bt->add_option("--top-k", bt.top_k);
    c_bt->add_option("--n-drop", bt.n_drop);
    c_bt->add_option("--buy-cost", bt.buy_cost);
    c_bt->add_option("--sell-cost", bt.sell_cost);
    c_bt->add_option("--annualization", bt.annualization);
    c_bt->add_option("--horizon", bt.horizon, "Label horizon in days")->check(CLI::PositiveNumber);
    c_bt->add_flag("--raw", bt.raw, "Rank by the expression alone (no base factors)");
    c_bt->add_flag("--final", bt.final_run, "Allow reading the test split");

    std::string compile_path;
    auto* c_compile = app.add_subcommand("compile", "Canonicalize a structured logic and print its constraints");
    c_compile->add_option("record", compile_path)->required()->check(CLI::ExistingFile);
    std::vector<std::string> compile_checks;
    c_compile->add_option("--check", compile_checks, "Check an expression against the constraints (repeatable)");

    std::string mine_file, mine_out;
    BackendArgs mine_backend;
    auto* c_mine = app.add_subcommand("mine", "Mine market logic from a file of factor formulas");
    c_mine->add_option("formulas", mine_file, "One formula per line; '#' starts a comment")
        ->required()
        ->check(CLI::ExistingFile);
    c_mine->add_option("-o,--out", mine_out, "Write the mined logic library (jsonl)");
    c_mine->add_option("--backend", mine_backend.kind)->check(CLI::IsMember({"scripted", "http"}));
    c_mine->add_option("--fixtures", mine_backend.fixtures)->check(CLI::ExistingFile);
    c_mine->add_option("--base-url", mine_backend.base_url);
    c_mine->add_option("--model", mine_backend.model);
    c_mine->add_option("--max-retries", mine_backend.max_retries)->check(CLI::NonNegativeNumber);

    RunArgs run;
    auto* c_run = app.add_subcommand("run", "Run the full optimization pipeline from a config");
    c_run->add_option("--config", run.config)->required()->check(CLI::ExistingFile);
    c_run->add_option("--out", run.out, "Run directory (overrides output_dir)");
    c_run->add_option("--seed", run.seed);
    c_run->add_flag("--resume", run.resume, "Continue an interrupted run");
    c_run->add_flag("--final", run.final_run, "Evaluate the best factor on the test split");

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Write the planted-signal synthetic panel");
    c_synth->add_option("-o,--out", synth.out)->required();
    c_synth->add_option("--dates", synth.opts.dates);
    c_synth->add_option("--instruments", synth.opts.instruments);
    c_synth->add_option("--seed", synth.opts.seed);
    c_synth->add_option("--strength", synth.opts.strength);
    c_synth->add_option("--noise", synth.opts.noise);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*c_ingest) return cmd_ingest(ingest, json);
        if (*c_eval) return cmd_eval(eval, json);
        if (*c_bt) return cmd_backtest(bt, json);
        if (*c_compile) return cmd_compile(compile_path, compile_checks, json);
        if (*c_mine) return cmd_mine(mine_file, mine_out, mine_backend, json);
        if (*c_run) return cmd_run(run, json);
        if (*c_synth) return cmd_synth(synth, json);
    } catch (const al::ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return 2;
    } catch (const al::SchemaError& e) {
        std::fprintf(stderr, "schema error: %s\n", e.what());
        return 2;
    } catch (const al::CompileError& e) {
        std::fprintf(stderr, "compile error: %s\n", e.what());
        return 2;
    } catch (const al::LeakageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
