// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dsl_reference.hpp"
#include "metric_oracles.hpp"
#include "support.hpp"

#include "alphalogics/agents.hpp"
#include "alphalogics/backtest.hpp"
#include "alphalogics/config.hpp"
#include "alphalogics/dsl.hpp"
#include "alphalogics/error.hpp"
#include "alphalogics/logic.hpp"
#include "alphalogics/loop.hpp"
#include "alphalogics/synth.hpp"

using namespace alphalogics;
namespace fs = std::filesystem;
using Json = nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path kSource = ALPHALOGICS_SOURCE_DIR;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("alphalogics_acceptance_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

/// Relative path -> bytes for every regular file under `dir`.
std::map<std::string, std::string> tree(const fs::path& dir, const std::set<std::string>& skip = {}) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const std::string rel = fs::relative(e.path(), dir).generic_string();
        if (!skip.count(rel)) out[rel] = slurp(e.path());
    }
    return out;
}

Json read_json(const fs::path& p) { return Json::parse(slurp(p)); }

/// Records every exchange passing through it.
class Recorder : public agents::CompletionBackend {
public:
    explicit Recorder(agents::CompletionBackend& inner) : inner_(inner) {}
    std::string complete(const agents::CompletionRequest& r) override {
        std::string out = inner_.complete(r);
        requests.push_back(r);
        replies.push_back(out);
        return out;
    }
    std::vector<agents::CompletionRequest> requests;
    std::vector<std::string> replies;

private:
    agents::CompletionBackend& inner_;
};

/// Candidate evaluator driven by a table of validation IRs.
class TableEvaluator : public loop::CandidateEvaluator {
public:
    std::map<std::string, double> ir;
    double scale = 1.0;
    backtest::SplitReports evaluate(const dsl::FactorExpr& e, const logic::MarketLogicStruct& h) override {
        backtest::SplitReports r;
        const std::string text = dsl::unparse(e);
        const auto it = ir.find(text);
        const double v = it == ir.end() ? 0.0 : it->second;
        r.validation.ir = r.train.ir = v * scale;
        r.validation.icir = r.train.icir = v;
        r.validation.ic = r.train.ic = 0.01;
        r.validation.factor_ic = 0.05 * h.b.d;  // already aligned with the logic
        return r;
    }
};

logic::MarketLogicStruct windowed_struct(int w) {
    logic::MarketLogicStruct h = logic::canonicalize_fields(Json::parse(R"({
      "C": {"formula": "p1 AND p2",
            "predicates": [{"id": "p1", "v": "price", "op": "trend_up", "theta": "", "w": 1},
                           {"id": "p2", "v": "volume", "op": "trend_not_up", "theta": "", "w": 1}]},
      "B": {"y": "forward_return", "d": -1, "h": 1}})"));
    for (auto& p : h.predicates) p.w = w;
    return h;
}

Json fixture(const char* agent, Json responses, Json selector = {{"default", true}}) {
    Json f = std::move(selector);
    f["agent"] = agent;
    f["responses"] = std::move(responses);
    return f;
}

Json feg_reply(const std::string& expr) {
    return {{"factors", {{{"expression", expr}, {"rationale", "scripted"}, {"operators", {"RANK"}}}}}, {"notes", ""}};
}

const Json kFeedback = {{"summary", {{"best_expression", "RANK(open)"}, {"key_metrics", "IR"}}},
                        {"feedback", {"keep the rank form"}},
                        {"suggested_edits", Json::array()}};
const Json kRefinement = {{"refinement_actions", {{{"action", "tighten"}, {"target", "C.p1"}, {"detail", "longer window"}}}},
                          {"focus_variables", {"volume"}},
                          {"horizon_suggestion", "keep"},
                          {"rationale", "scripted"}};

loop::LoopConfig loop_config(int rounds, std::size_t max_candidates) {
    loop::LoopConfig c;
    c.rounds = rounds;
    c.early_stop = 3;
    c.max_candidates = max_candidates;
    c.buffer = 5;
    c.trial_cap = 20;
    c.regeneration_budget = 1;
    return c;
}

config::RunConfig bundled_config() { return config::load_run_config(kSource / "data/run/config.json"); }

/// The bundled scripted run through the loop API, with every agent exchange
/// recorded. Optimization only: no final evaluation.
loop::OuterState recorded_run(const config::RunConfig& c, const Panel& panel, const fs::path& dir, Recorder& rec) {
    loop::EngineEvaluator evaluator(panel, c.splits, config::engine_config(c));
    loop::LoopContext ctx{rec, evaluator, c.objective, c.loop, {c.backend.max_retries}, c.rag, c.potential_direction};
    const loop::RunStore store(dir);
    return loop::outer_loop(logic::LogicLibrary::load(c.data.library), ctx, &store);
}

bool mentions_test_key(const Json& j) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items())
            if (k.find("test") != std::string::npos || mentions_test_key(v)) return true;
    } else if (j.is_array()) {
        for (const Json& v : j)
            if (mentions_test_key(v)) return true;
    }
    return false;
}

// ---- criteria ----

Outcome operator_oracle() {
    const auto t0 = Clock::now();
    dsl_reference::ProgramGenerator gen(1000);
    std::mt19937_64 rng(60);
    std::size_t programs = 0, cells = 0, mismatches = 0;
    std::set<dsl::Family> families;
    std::string first_bad;
    int panel_no = 0;
    while (programs < 1000) {
        const Panel p = testing_support::random_panel(rng, 60, 30, panel_no % 2 ? 0.05 : 0.0);
        dsl_reference::Reference ref(p);
        ++panel_no;
        for (std::size_t k = 0; k < 2 * gen.num_forms() && programs < 1000; ++k) {
            const std::string text = gen.program(k % 5, k);
            dsl::FactorExpr e;
            try {
                e = dsl::parse(text);
            } catch (const ParseError&) {
                continue;  // e.g. a literal-only tree
            }
            ++programs;
            for (const std::string& op : dsl::list_operators(e))
                for (const auto& form : dsl::OperatorCatalogue::instance().find(op)->forms) families.insert(form.family);
            const Matrix got = dsl::evaluate(e, p);
            const dsl_reference::Grid want = ref.eval(e.root());
            for (std::size_t t = 0; t < p.num_dates(); ++t)
                for (std::size_t i = 0; i < p.num_instruments(); ++i, ++cells) {
                    const double g = got(t, i), w = want[t][i];
                    if (std::isnan(g) != std::isnan(w) || (!std::isnan(g) && !dsl_reference::agree(g, w))) {
                        if (!mismatches++) first_bad = text;
                    }
                }
        }
    }
    const double secs = seconds_since(t0);
    const bool all_families = families.size() == 10;
    Outcome o;
    o.pass = mismatches == 0 && all_families && secs <= 60.0;
    o.detail = std::to_string(programs) + " programs, " + std::to_string(cells) + " cells, " +
               std::to_string(mismatches) + " mismatches, " + std::to_string(families.size()) + "/10 families, " +
               fmt("%.1fs", secs);
    if (mismatches) o.detail += "; first: " + first_bad;
    return o;
}

Outcome metric_oracle() {
    using namespace metric_oracles;
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_int_distribution<int> size(2, 20), small(0, 4);
    double worst_ic = 0;
    int ic_cases = 0;
    while (ic_cases < 500) {
        const int n = size(rng);
        Matrix s(1, n), r(1, n);
        std::vector<double> a(n), b(n);
        for (int i = 0; i < n; ++i) {
            // ties on purpose for a third of the cases
            a[i] = ic_cases % 3 == 0 ? small(rng) : z(rng);
            b[i] = z(rng);
            s(0, i) = a[i];
            r(0, i) = b[i];
        }
        const double want = brute_spearman(a, b);
        if (!std::isfinite(want)) continue;  // constant side
        const double got = backtest::daily_ic(s, r, {0, 1})[0];
        worst_ic = std::max(worst_ic, std::fabs(got - want));
        ++ic_cases;
    }

    double worst_series = 0;
    std::normal_distribution<double> ex(0.0004, 0.01), icz(0.03, 0.1);
    for (int k = 0; k < 100; ++k) {
        std::vector<double> excess(30 + k), eq{1.0}, ics(20 + k);
        for (double& v : excess) {
            v = ex(rng);
            eq.push_back(eq.back() * (1.0 + v));
        }
        for (double& v : ics) v = icz(rng);
        const backtest::IcSummary s = backtest::summarize_ic(ics);
        const backtest::RiskSummary r = backtest::ar_ir_mdd(excess, eq, 252);
        const double ar = mean(excess) * 252, ir = ar / (pop_std(excess) * std::sqrt(252.0));
        const double icir = mean(ics) / pop_std(ics);
        for (auto [got, want] : {std::pair{s.ic, mean(ics)}, {s.icir, icir}, {r.ar, ar}, {r.ir, ir}, {r.mdd, brute_mdd(eq)}})
            worst_series = std::max(worst_series, std::fabs(got - want) / std::max(1.0, std::fabs(want)));
    }
    const std::vector<double> curve{1.0, 1.2, 0.9, 1.1};
    const double mdd = backtest::max_drawdown(curve);

    Outcome o;
    o.pass = worst_ic <= 1e-12 && worst_series <= 1e-12 && mdd == -0.25;
    o.detail = "IC max err " + fmt("%.2e", worst_ic) + " over 500 cross-sections, ICIR/AR/IR/MDD max rel err " +
               fmt("%.2e", worst_series) + " over 100 series, MDD[1,1.2,0.9,1.1] = " + fmt("%.17g", mdd);
    return o;
}

Outcome compilation_golden() {
    // the worked-example structured logic, as transcribed in the fixture file
    const Json doc = read_json(kSource / "data/fixtures/worked_example.json");
    Json raw;
    for (const Json& f : doc["fixtures"])
        if (f["agent"] == agents::kLogicToConstraint) raw = f["responses"][0];
    const logic::MarketLogicStruct h = logic::canonicalize_fields(raw);
    const logic::ConstraintSet g = logic::compile(h);
    const std::string a = logic::serialize(g), b = logic::serialize(logic::compile(logic::canonicalize_fields(raw)));

    std::vector<std::string> missing;
    for (const char* v : {"open", "high", "low", "close", "volume"})
        if (!g.allowed_variables.count(v)) missing.push_back(v);
    const std::set<std::string> ops = g.allowed_operators();
    for (const char* op : {"RANK", "ZSCORE", "DELTA", "TS_CORR", "TS_MEAN"})
        if (!ops.count(op)) missing.push_back(op);
    bool params_ok = !g.parameter_constraints.empty();
    for (const auto& [slot, rule] : g.parameter_constraints) params_ok = params_ok && rule.min >= 1;
    const bool window_rule = g.parameter_constraints.count("window") == 1;
    const logic::CheckReport rep = logic::check(dsl::parse("-TS_CORR(RANK(open), RANK(volume), 10)"), g);

    Outcome o;
    o.pass = missing.empty() && params_ok && window_rule && g.direction.d == -1 && a == b && rep.ok();
    o.detail = std::string("variables and operators ") + (missing.empty() ? "complete" : "missing some") +
               ", integer params >= 1: " + (params_ok && window_rule ? "yes" : "no") +
               ", direction d = " + std::to_string(g.direction.d) + ", byte-identical: " + (a == b ? "yes" : "no") +
               ", example factor check: " + (rep.ok() ? "ok" : rep.summary());
    for (const auto& m : missing) o.detail += " [" + m + "]";
    return o;
}

Outcome inner_trace() {
    // one candidate per generation round, J = 0.5, 0.4, 0.4, 0.4, ...
    const char* exprs[] = {"RANK(open)", "RANK(high)", "RANK(low)", "RANK(close)", "RANK(volume)"};
    Json responses = Json::array();
    for (const char* e : exprs) responses.push_back(feg_reply(e));
    Json feg = fixture(agents::kFactorGenerator, responses);
    feg["sequence"] = true;
    agents::ScriptedBackend backend(Json{{"fixtures", {feg, fixture(agents::kFactorFeedback, {kFeedback})}}});

    TableEvaluator eval;
    eval.ir = {{"RANK(open)", 0.5}, {"RANK(high)", 0.4}, {"RANK(low)", 0.4}, {"RANK(close)", 0.4}, {"RANK(volume)", 0.4}};
    const logic::MarketLogic m{"logic-001", logic::Provenance::Generated, "t", "c", "b", windowed_struct(1), {}};
    loop::LoopContext ctx{backend, eval, loop::Objective{}, loop_config(1, 1), {}, {}, {}};
    const loop::Evidence ev = loop::inner_loop(m, ctx);

    const std::size_t rounds = ev.rounds.size(), gen_calls = backend.calls(agents::kFactorGenerator);
    const std::size_t fb = ev.feedback_requests(), fb_calls = backend.calls(agents::kFactorFeedback);
    Outcome o;
    o.pass = rounds == 4 && gen_calls == 4 && fb == 3 && fb_calls == 3 && ev.best_j() == 0.5;
    o.detail = std::to_string(rounds) + " generation rounds (" + std::to_string(gen_calls) + " generator calls), " +
               std::to_string(fb_calls) + " feedback requests, best J = " + fmt("%g", ev.best_j());
    return o;
}

Outcome outer_bookkeeping() {
    const char* exprs[] = {"RANK(open)", "RANK(high)", "RANK(low)"};
    Json fx = Json::array();
    for (int k = 1; k <= 3; ++k) {
        const std::string c = "condition " + std::to_string(k);
        fx.push_back(fixture(agents::kLogicGenerator,
                             {Json{{"logic_text", "logic " + std::to_string(k)}, {"c_text", c}, {"b_text", "reverts"}}},
                             {{"match", {{"/round", k}}}}));
        const logic::MarketLogicStruct h = windowed_struct(k);
        fx.push_back(fixture(agents::kLogicToConstraint,
                             {Json{{"H_struct", logic::to_json(h)},
                                   {"Gamma", {{"allowed_variables", {"price", "volume"}},
                                              {"operator_families", {"rank"}},
                                              {"parameter_constraints", {{"window", "positive integer"}, {"lag", "positive integer"}}},
                                              {"direction_constraint", "negative IC"}}},
                                   {"canonicalization_notes", ""}}},
                             {{"match", {{"/c_text", c}}}}));
        fx.push_back(fixture(agents::kFactorGenerator, {feg_reply(exprs[k - 1])},
                             {{"match", {{"/Gamma/parameter_constraints/window/advised", {k}}}}}));
    }
    fx.push_back(fixture(agents::kFactorFeedback, {kFeedback}));
    fx.push_back(fixture(agents::kLogicRefinement, {kRefinement}));

    logic::LogicLibrary init;
    init.append({"init-001", logic::Provenance::Mined, "divergence", "price up, volume down", "reversal", {}, {}});
    init.append({"init-002", logic::Provenance::Mined, "gap fade", "gap up, weak close", "reversal", {}, {}});

    auto run = [&](double scale) {
        agents::ScriptedBackend backend(Json{{"fixtures", fx}});
        TableEvaluator eval;
        eval.ir = {{"RANK(open)", 0.2}, {"RANK(high)", 0.6}, {"RANK(low)", 0.3}};
        eval.scale = scale;
        loop::LoopContext ctx{backend, eval, loop::Objective{}, loop_config(2, 1), {}, {}, {}};
        return loop::outer_loop(init, ctx);
    };
    const loop::OuterState s = run(1.0);

    // independent argmax over the evaluated logics
    std::string argmax;
    double best = -INFINITY;
    for (const loop::OuterRound& r : s.rounds)
        if (r.evidence.best_j() > best) {
            best = r.evidence.best_j();
            argmax = r.logic_id;
        }
    std::size_t fb_hist = 0;
    for (const loop::OuterRound& r : s.rounds) fb_hist += r.feedback.is_null() ? 0 : 1;
    const bool invariant = run(3.5).best_id == s.best_id && run(0.01).best_id == s.best_id;

    Outcome o;
    o.pass = s.library.size() == init.size() + 3 && s.hist.size() - 1 == 2 && s.rounds.size() == 2 && fb_hist == 2 &&
             s.best_id == argmax && invariant;
    o.detail = "library " + std::to_string(init.size()) + " -> " + std::to_string(s.library.size()) +
               ", H_hist beyond initial " + std::to_string(s.hist.size() - 1) + ", E_hist " +
               std::to_string(s.rounds.size()) + ", fb_hist " + std::to_string(fb_hist) + ", H_best " + s.best_id +
               (s.best_id == argmax ? " (argmax)" : " (not argmax " + argmax + ")") +
               ", invariant under rescaling: " + (invariant ? "yes" : "no");
    for (const loop::OuterRound& r : s.rounds)
        if (r.evidence.status != "ok") o.detail += "; round " + std::to_string(r.round) + " " + r.evidence.status + ": " + r.evidence.error;
    return o;
}

Outcome leakage_guard() {
    const config::RunConfig c = bundled_config();
    const Panel clean = config::load_panel(c.data);
    const std::size_t first_test = clean.lower_bound(c.splits.test.first);
    auto poison = [&](Matrix m, double sentinel) {
        for (std::size_t t = first_test; t < m.rows(); ++t)
            for (std::size_t i = 0; i < m.cols(); ++i) m(t, i) = sentinel + static_cast<double>(t + i);
        return m;
    };
    const Panel bad = Panel::make(clean.dates(), clean.instruments(), poison(clean.open(), 7e6), poison(clean.high(), 9e6),
                                  poison(clean.low(), 1e6), poison(clean.close(), 5e6), poison(clean.volume(), 3e9));

    const fs::path da = fresh_dir("clean"), db = fresh_dir("poisoned");
    agents::ScriptedBackend ba(agents::ScriptedBackend::read_fixture_file(c.backend.fixtures));
    agents::ScriptedBackend bb(agents::ScriptedBackend::read_fixture_file(c.backend.fixtures));
    Recorder ra(ba), rb(bb);
    const loop::OuterState sa = recorded_run(c, clean, da, ra);
    const loop::OuterState sb = recorded_run(c, bad, db, rb);
    const auto ta = tree(da), tb = tree(db);
    bool payloads_equal = ra.requests.size() == rb.requests.size();
    for (std::size_t k = 0; payloads_equal && k < ra.requests.size(); ++k)
        payloads_equal = ra.requests[k].user == rb.requests[k].user;
    bool test_keys = false;
    for (const auto& r : ra.requests) test_keys = test_keys || mentions_test_key(r.payload);

    int refusals = 0;
    loop::EngineEvaluator eval(clean, c.splits, config::engine_config(c));
    const dsl::FactorExpr f = dsl::parse("RANK(close)");
    const backtest::BacktestEngine engine(clean, c.splits, config::engine_config(c));
    try { engine.run_final({f}, false); } catch (const LeakageError&) { ++refusals; }
    try { eval.evaluate_final(f, windowed_struct(1), false); } catch (const LeakageError&) { ++refusals; }
    try { loop::final_evaluation(sa, eval, false); } catch (const LeakageError&) { ++refusals; }
    loop::OuterState partial = sa;
    partial.complete = false;
    try { loop::final_evaluation(partial, eval, true); } catch (const LeakageError&) { ++refusals; }

    Outcome o;
    o.pass = ta == tb && ta.size() >= 5 && payloads_equal && !test_keys && refusals == 4;
    o.detail = std::to_string(ta.size()) + " run records " + (ta == tb ? "byte-identical" : "DIFFER") +
               " with the test interval poisoned, " + std::to_string(ra.requests.size()) + " agent prompts " +
               (payloads_equal ? "identical" : "DIFFER") + (test_keys ? ", test key in a payload" : "") +
               ", test reads without the final flag refused " + std::to_string(refusals) + "/4";
    return o;
}

Outcome cost_model() {
    Matrix s(1, 1, 1.0), r(1, 1, 0.0);
    backtest::StrategyConfig c;
    c.top_k = 1;
    c.n_drop = 0;
    c.buy_cost = 0.0005;
    c.sell_cost = 0.0015;
    c.liquidate_at_end = true;
    const backtest::Simulation sim = backtest::simulate_topk(s, r, c, {0, 1});
    const double want = (1 - 0.0005) * (1 - 0.0015), got = sim.equity_curve.back();
    Outcome o;
    o.pass = std::fabs(got - want) <= 1e-12;
    o.detail = "final equity " + fmt("%.15f", got) + ", expected " + fmt("%.15f", want) + ", error " +
               fmt("%.1e", std::fabs(got - want));
    return o;
}

Outcome planted_run() {
    const auto t0 = Clock::now();
    const fs::path work = fresh_dir("planted");
    synth::PlantedOptions po;  // 200 dates x 60 instruments, seed 7
    write_csv(synth::planted_panel(po), work / "panel.csv");
    const bool same_as_bundled = slurp(work / "panel.csv") == slurp(kSource / "data/run/panel.csv");

    config::RunConfig c = bundled_config();
    c.data.panel = work / "panel.csv";
    c.seed = po.seed;
    config::RunOptions opts;
    opts.final_run = true;
    opts.output_dir = work / "run_a";
    const config::RunResult a = config::run_pipeline(c, opts);
    opts.output_dir = work / "run_b";
    config::run_pipeline(c, opts);
    const bool identical = tree(work / "run_a") == tree(work / "run_b");
    const double secs = seconds_since(t0);

    const Json test = (*a.final_report)["test"];
    const double ic = test["ic"].is_number() ? test["ic"].get<double>() : NAN;
    const double ir = test["ir"].is_number() ? test["ir"].get<double>() : NAN;
    Outcome o;
    o.pass = a.state.t == 3 && c.loop.max_candidates == 5 && ic >= 0.05 && ir > 0 && identical && secs <= 300.0;
    o.detail = "T = " + std::to_string(a.state.t) + ", test IC " + fmt("%.4f", ic) + ", test IR " + fmt("%.4f", ir) +
               ", run records " + (identical ? "byte-identical" : "DIFFER") + " across two runs, panel " +
               (same_as_bundled ? "matches" : "differs from") + " the bundled copy, " + fmt("%.1fs", secs);
    return o;
}

Outcome schema_conformance() {
    std::map<std::string, std::size_t> exchanges;
    std::vector<std::string> problems;
    auto audit = [&](const Recorder& rec) {
        for (std::size_t k = 0; k < rec.requests.size(); ++k) {
            const auto& t = agents::find_template(rec.requests[k].agent);
            for (const auto& e : agents::validate_input(t, rec.requests[k].payload)) problems.push_back(t.name + " in " + e);
            const auto out = agents::extract_json(rec.replies[k]);
            if (!out) {
                problems.push_back(t.name + ": reply is not JSON");
                continue;
            }
            for (const auto& e : agents::validate_output(t, *out)) problems.push_back(t.name + " out " + e);
            ++exchanges[t.name];
        }
    };

    // mining chain over the bundled formulas
    {
        agents::ScriptedBackend backend(agents::ScriptedBackend::read_fixture_file(kSource / "data/mine/fixtures.json"));
        Recorder rec(backend);
        std::ifstream in(kSource / "data/mine/formulas.txt");
        std::string line;
        int n = 0;
        while (std::getline(in, line))
            if (!line.empty() && line[0] != '#') agents::mine_logic(line, "m-" + std::to_string(++n), rec);
        audit(rec);
    }
    // the bundled outer loop
    {
        const config::RunConfig c = bundled_config();
        agents::ScriptedBackend backend(agents::ScriptedBackend::read_fixture_file(c.backend.fixtures));
        Recorder rec(backend);
        recorded_run(c, config::load_panel(c.data), fresh_dir("schema"), rec);
        audit(rec);
    }

    // malformed completion: one repair retry, then a structured failure
    agents::ScriptedBackend bad(Json{{"fixtures", {fixture(agents::kFactorGenerator, {Json{{"notes", "no factors"}}})}}});
    Recorder rec(bad);
    const Json payload = {{"Gamma", logic::to_json(logic::compile(windowed_struct(1)))},
                          {"feedback", nullptr},
                          {"max_candidates", 2}};
    const agents::AgentResult r = agents::call_agent(agents::kFactorGenerator, payload, rec, {1});
    const std::string repair = "Your previous reply was rejected";
    const bool sequence_ok = !r.ok && r.attempts == 2 && rec.requests.size() == 2 && rec.requests[0].attempt == 0 &&
                             rec.requests[1].attempt == 1 && rec.requests[0].user.find(repair) == std::string::npos &&
                             rec.requests[1].user.find(repair) != std::string::npos &&
                             rec.requests[1].user.find("factors") != std::string::npos && !r.errors.empty();

    std::size_t total = 0;
    for (const auto& [name, n] : exchanges) total += n;
    Outcome o;
    o.pass = exchanges.size() == 8 && problems.empty() && sequence_ok;
    o.detail = std::to_string(total) + " exchanges over " + std::to_string(exchanges.size()) + "/8 agents, " +
               std::to_string(problems.size()) + " schema problems, malformed completion: " +
               std::to_string(r.attempts) + " attempts then " + (r.ok ? "accepted" : "structured failure") +
               (sequence_ok ? "" : " (sequence WRONG)");
    if (!problems.empty()) o.detail += "; first: " + problems.front();
    return o;
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"operator oracle", operator_oracle},
        {"metric oracle", metric_oracle},
        {"compilation golden", compilation_golden},
        {"inner-loop trace", inner_trace},
        {"outer-loop bookkeeping", outer_bookkeeping},
        {"leakage guard", leakage_guard},
        {"cost model", cost_model},
        {"planted-signal run", planted_run},
        {"schema conformance", schema_conformance},
    };
    int failed = 0, k = 0;
    for (const auto& [name, fn] : criteria) {
        ++k;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.detail = std::string("threw: ") + e.what();
        }
        failed += o.pass ? 0 : 1;
        std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", k, name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", k - failed, criteria.size());
    return failed ? 1 : 0;
}
