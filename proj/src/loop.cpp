#include "alphalogics/loop.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>

#include "alphalogics/error.hpp"

namespace alphalogics::loop {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> n = {"ic", "icir", "ar", "ir", "mdd"};
    return n;
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
double number_or(const Json& j, double fallback) { return j.is_number() ? j.get<double>() : fallback; }

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void write_atomic(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << text;
        if (!out.flush()) throw Error("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::optional<std::string> read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json parse_record(const std::filesystem::path& path, const std::string& text) {
    Json j = Json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw SchemaError("corrupt record " + path.string());
    if (!j.contains("schema_version") || j["schema_version"] != kSchemaVersion)
        throw SchemaError("record " + path.string() + " has an unsupported schema_version");
    return j;
}

std::string round_file(int round) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "round_%03d.json", round);
    return buf;
}

Json report_json(const backtest::BacktestReport& r) { return backtest::to_json(r, false); }

// Round-best order: higher J, then higher ICIR, then earlier.
bool better_in_round(const CandidateRecord& a, const CandidateRecord& b) {
    if (a.j != b.j) return a.j > b.j;
    const double ia = std::isfinite(a.validation.icir) ? a.validation.icir : kNegInf;
    const double ib = std::isfinite(b.validation.icir) ? b.validation.icir : kNegInf;
    return ia > ib;
}

} // namespace

// ---- objective ----

double Objective::operator()(const backtest::BacktestReport& r) const {
    double j = 0.0;
    for (const auto& [name, w] : weights) {
        if (w == 0.0) continue;
        const double v = r.metric(name);
        if (!std::isfinite(v)) return kNegInf;
        j += w * v;
    }
    return j;
}

void Objective::validate() const {
    if (weights.empty()) throw PreconditionError("objective needs at least one metric");
    for (const auto& [name, w] : weights) {
        if (std::find(metric_names().begin(), metric_names().end(), name) == metric_names().end())
            throw PreconditionError("unknown objective metric '" + name + "'");
        if (!std::isfinite(w)) throw PreconditionError("objective weight for '" + name + "' is not finite");
    }
}

Json to_json(const Objective& o) { return Json(o.weights); }

Objective objective_from_json(const Json& j) {
    Objective o;
    if (j.is_string()) {
        o.weights = {{j.get<std::string>(), 1.0}};
    } else if (j.is_object()) {
        o.weights.clear();
        for (const auto& [k, v] : j.items()) {
            if (!v.is_number()) throw SchemaError("objective weight for '" + k + "' must be a number");
            o.weights[k] = v.get<double>();
        }
    } else {
        throw SchemaError("objective must be a metric name or a {metric: weight} object");
    }
    o.validate();
    return o;
}

// ---- loop config ----

void LoopConfig::validate() const {
    if (rounds < 1) throw PreconditionError("rounds (T) must be >= 1");
    if (early_stop < 1) throw PreconditionError("early_stop (T_early) must be >= 1");
    if (max_candidates < 1) throw PreconditionError("max_candidates must be >= 1");
    if (buffer < 1) throw PreconditionError("buffer (M) must be >= 1");
    if (trial_cap < 1) throw PreconditionError("trial_cap must be >= 1");
    if (regeneration_budget < 1) throw PreconditionError("regeneration_budget must be >= 1");
}

Json to_json(const LoopConfig& c) {
    return {{"rounds", c.rounds},         {"early_stop", c.early_stop}, {"max_candidates", c.max_candidates},
            {"buffer", c.buffer},         {"trial_cap", c.trial_cap},   {"regeneration_budget", c.regeneration_budget}};
}

LoopConfig loop_config_from_json(const Json& j) {
    LoopConfig c;
    try {
        c.rounds = j.value("rounds", c.rounds);
        c.early_stop = j.value("early_stop", c.early_stop);
        c.max_candidates = j.value("max_candidates", c.max_candidates);
        c.buffer = j.value("buffer", c.buffer);
        c.trial_cap = j.value("trial_cap", c.trial_cap);
        c.regeneration_budget = j.value("regeneration_budget", c.regeneration_budget);
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("loop config: ") + e.what());
    }
    c.validate();
    return c;
}

// ---- evidence ----

double Evidence::best_j() const { return best ? candidates[*best].j : kNegInf; }

std::size_t Evidence::feedback_requests() const {
    return static_cast<std::size_t>(
        std::count_if(rounds.begin(), rounds.end(), [](const InnerRound& r) { return r.feedback_requested; }));
}

Json to_json(const Evidence& e) {
    Json cands = Json::array();
    for (const CandidateRecord& c : e.candidates)
        cands.push_back({{"round", c.round},
                         {"generated", c.generated},
                         {"expression", c.expression},
                         {"flipped", c.flipped},
                         {"J", finite_or_null(c.j)},
                         {"train", report_json(c.train)},
                         {"validation", report_json(c.validation)}});
    Json rounds = Json::array();
    for (const InnerRound& r : e.rounds) {
        Json rej = Json::array();
        for (const agents::Rejection& x : r.rejected) rej.push_back({{"expression", x.expression}, {"reason", x.reason}});
        rounds.push_back({{"round", r.round},
                          {"candidates", r.candidates},
                          {"round_best", r.round_best ? Json(*r.round_best) : Json(nullptr)},
                          {"improved", r.improved},
                          {"counter", r.counter},
                          {"regenerations", r.regenerations},
                          {"rejected", rej},
                          {"feedback_requested", r.feedback_requested},
                          {"feedback", r.feedback},
                          {"error", r.error}});
    }
    return {{"logic_id", e.logic_id},
            {"status", e.status},
            {"error", e.error},
            {"H_struct", e.h_struct ? logic::to_json(*e.h_struct) : Json(nullptr)},
            {"Gamma", e.gamma ? logic::to_json(*e.gamma) : Json(nullptr)},
            {"candidates", cands},
            {"rounds", rounds},
            {"best", e.best ? Json(*e.best) : Json(nullptr)},
            {"stop_reason", e.stop_reason}};
}

Evidence evidence_from_json(const Json& j) {
    try {
        Evidence e;
        e.logic_id = j.at("logic_id").get<std::string>();
        e.status = j.at("status").get<std::string>();
        e.error = j.at("error").get<std::string>();
        if (!j.at("H_struct").is_null()) e.h_struct = logic::struct_from_json(j["H_struct"]);
        if (!j.at("Gamma").is_null()) e.gamma = logic::gamma_from_json(j["Gamma"]);
        for (const Json& c : j.at("candidates")) {
            CandidateRecord r;
            r.round = c.at("round").get<int>();
            r.generated = c.at("generated").get<std::string>();
            r.expression = c.at("expression").get<std::string>();
            r.flipped = c.at("flipped").get<bool>();
            r.j = number_or(c.at("J"), kNegInf);
            r.train = backtest::report_from_json(c.at("train"));
            r.validation = backtest::report_from_json(c.at("validation"));
            e.candidates.push_back(std::move(r));
        }
        for (const Json& x : j.at("rounds")) {
            InnerRound r;
            r.round = x.at("round").get<int>();
            r.candidates = x.at("candidates").get<std::vector<std::size_t>>();
            if (!x.at("round_best").is_null()) r.round_best = x["round_best"].get<std::size_t>();
            r.improved = x.at("improved").get<bool>();
            r.counter = x.at("counter").get<int>();
            r.regenerations = x.at("regenerations").get<int>();
            for (const Json& rj : x.at("rejected"))
                r.rejected.push_back({rj.at("expression").get<std::string>(), rj.at("reason").get<std::string>()});
            r.feedback_requested = x.at("feedback_requested").get<bool>();
            r.feedback = x.at("feedback");
            r.error = x.at("error").get<std::string>();
            e.rounds.push_back(std::move(r));
        }
        if (!j.at("best").is_null()) {
            e.best = j["best"].get<std::size_t>();
            if (*e.best >= e.candidates.size()) throw SchemaError("evidence best index out of range");
        }
        e.stop_reason = j.at("stop_reason").get<std::string>();
        return e;
    } catch (const Json::exception& ex) {
        throw SchemaError(std::string("corrupt evidence record: ") + ex.what());
    }
}

Json agent_view(const Evidence& e) {
    Json v = {{"logic_id", e.logic_id}, {"status", e.status}};
    if (!e.error.empty()) v["error"] = e.error;
    if (const CandidateRecord* b = e.best_candidate()) {
        v["best_expression"] = b->expression;
        v["best_validation"] = {{"IC", finite_or_null(b->validation.ic)},
                                {"ICIR", finite_or_null(b->validation.icir)},
                                {"AR", finite_or_null(b->validation.ar)},
                                {"IR", finite_or_null(b->validation.ir)},
                                {"MDD", finite_or_null(b->validation.mdd)}};
    } else {
        v["best_expression"] = nullptr;
        v["best_validation"] = nullptr;
    }
    Json table = Json::array();
    for (const CandidateRecord& c : e.candidates)
        table.push_back({{"expression", c.expression},
                         {"IC", finite_or_null(c.validation.ic)},
                         {"IR", finite_or_null(c.validation.ir)},
                         {"flipped", c.flipped}});
    v["candidates"] = table;
    v["inner_rounds"] = e.rounds.size();
    return v;
}

// ---- engine evaluator ----

EngineEvaluator::EngineEvaluator(Panel panel, SplitSpec splits, backtest::EngineConfig config)
    : panel_(std::move(panel)), splits_(splits), config_(std::move(config)) {
    engine_for(config_.label_horizon);
}

const backtest::BacktestEngine& EngineEvaluator::engine_for(std::size_t horizon) {
    std::lock_guard lock(mu_);
    auto& slot = engines_[horizon];
    if (!slot) {
        backtest::EngineConfig c = config_;
        c.label_horizon = horizon;
        slot = std::make_unique<backtest::BacktestEngine>(panel_, splits_, c);
    }
    return *slot;
}

backtest::SplitReports EngineEvaluator::evaluate(const dsl::FactorExpr& expr, const logic::MarketLogicStruct& h) {
    return engine_for(static_cast<std::size_t>(h.b.h)).run({expr});
}

backtest::BacktestReport EngineEvaluator::evaluate_final(const dsl::FactorExpr& expr,
                                                         const logic::MarketLogicStruct& h, bool final_run) {
    if (!final_run) throw LeakageError("test-interval evaluation requires the final-run flag");
    return engine_for(static_cast<std::size_t>(h.b.h)).run_final({expr}, true);
}

// ---- inner loop ----

Evidence inner_loop(const logic::MarketLogic& m, LoopContext& ctx) {
    const LoopConfig& cfg = ctx.config;
    Evidence ev;
    ev.logic_id = m.id;

    try {
        if (m.h_struct) {
            ev.h_struct = *m.h_struct;
        } else {
            ev.h_struct = agents::structure_logic(m, ctx.backend, ctx.call).h_struct;
        }
        ev.gamma = logic::compile(*ev.h_struct);
    } catch (const Error& e) {
        ev.status = "invalid";
        ev.stop_reason = "invalid";
        ev.error = e.what();
        return ev;
    }
    const logic::MarketLogicStruct& h = *ev.h_struct;
    const logic::ConstraintSet& gamma = *ev.gamma;

    int c = 0;
    Json fb = nullptr;
    std::deque<std::size_t> buffer;
    std::size_t trials = 0;
    int round = 0;

    const auto request_feedback = [&](InnerRound& r) {
        if (c >= cfg.early_stop || buffer.empty()) return;
        std::vector<agents::CandidateMetrics> shown;
        for (std::size_t k : buffer) shown.push_back({ev.candidates[k].expression, ev.candidates[k].validation});
        r.feedback_requested = true;
        const auto out = agents::factor_feedback(h, shown, ctx.backend, ctx.call);
        fb = out ? *out : Json(nullptr);
        r.feedback = fb;
    };

    ev.stop_reason = "early_stop";
    while (c < cfg.early_stop) {
        if (trials >= cfg.trial_cap) {
            ev.stop_reason = "trial_cap";
            break;
        }
        InnerRound r;
        r.round = ++round;
        agents::GenerationOptions gen_opts;
        gen_opts.max_candidates = std::min(cfg.max_candidates, cfg.trial_cap - trials);
        gen_opts.call_budget = cfg.regeneration_budget;
        gen_opts.call = ctx.call;

        agents::GenerationResult gen;
        try {
            gen = agents::generate_factors(gamma, fb, ctx.backend, gen_opts);
        } catch (const AgentError& e) {
            r.error = e.what();
            r.counter = ++c;
            request_feedback(r);
            ev.rounds.push_back(std::move(r));
            continue;
        }
        r.regenerations = gen.regenerations;
        r.rejected = gen.rejected;
        trials += gen.factors.size();

        for (std::size_t i = 0; i < gen.factors.size(); ++i) {
            CandidateRecord rec;
            rec.round = r.round;
            rec.generated = gen.texts[i];
            dsl::FactorExpr expr = gen.factors[i];
            backtest::SplitReports rep = ctx.evaluator.evaluate(expr, h);
            const std::optional<double> fic = rep.validation.factor_ic;
            if (fic && std::isfinite(*fic) && *fic != 0.0 && (*fic > 0 ? 1 : -1) != h.b.d) {
                expr = dsl::negate(expr);
                rep = ctx.evaluator.evaluate(expr, h);
                rec.flipped = true;
            }
            rec.expression = dsl::unparse(expr);
            rec.train = std::move(rep.train);
            rec.validation = std::move(rep.validation);
            rec.j = ctx.objective(rec.validation);
            const std::size_t idx = ev.candidates.size();
            ev.candidates.push_back(std::move(rec));
            r.candidates.push_back(idx);
            if (!r.round_best || better_in_round(ev.candidates[idx], ev.candidates[*r.round_best])) r.round_best = idx;
            buffer.push_back(idx);
            while (buffer.size() > cfg.buffer) buffer.pop_front();
        }

        const double j = ev.candidates[*r.round_best].j;
        if (!ev.best || j > ev.best_j()) {
            ev.best = r.round_best;
            r.improved = true;
            c = 0;
        } else {
            ++c;
        }
        r.counter = c;
        request_feedback(r);
        ev.rounds.push_back(std::move(r));
    }
    ev.status = ev.best ? "ok" : "empty";
    return ev;
}

// ---- outer loop ----

namespace {

Json round_json(const OuterRound& r) {
    return {{"schema_version", kSchemaVersion},
            {"round", r.round},
            {"logic_id", r.logic_id},
            {"evidence", to_json(r.evidence)},
            {"feedback", r.feedback},
            {"best_updated", r.best_updated},
            {"generated_id", r.generated_id ? Json(*r.generated_id) : Json(nullptr)},
            {"generation_error", r.generation_error}};
}

OuterRound round_from_json(const Json& j) {
    try {
        OuterRound r;
        r.round = j.at("round").get<int>();
        r.logic_id = j.at("logic_id").get<std::string>();
        r.evidence = evidence_from_json(j.at("evidence"));
        r.feedback = j.at("feedback");
        r.best_updated = j.at("best_updated").get<bool>();
        if (!j.at("generated_id").is_null()) r.generated_id = j["generated_id"].get<std::string>();
        r.generation_error = j.at("generation_error").get<std::string>();
        return r;
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("corrupt round record: ") + e.what());
    }
}

Json state_json(const OuterState& s) {
    return {{"schema_version", kSchemaVersion},
            {"library_size", s.library.size()},
            {"init_size", s.init_size},
            {"current_id", s.current_id},
            {"hist", s.hist},
            {"best_id", s.best_id},
            {"best_round", s.best_round ? Json(*s.best_round) : Json(nullptr)},
            {"t", s.t},
            {"complete", s.complete}};
}

agents::LogicHistory history_for(const OuterState& s, const LoopContext& ctx) {
    agents::LogicHistory h;
    for (const logic::MarketLogic& m : s.library.entries()) h.library.push_back(agents::describe_logic(m));
    h.current = agents::describe_logic(*s.library.find(s.current_id));
    for (const std::string& id : s.hist) h.hist.push_back(agents::describe_logic(*s.library.find(id)));
    for (const OuterRound& r : s.rounds) {
        h.evidence.push_back(agent_view(r.evidence));
        h.feedback.push_back(r.feedback);
    }
    h.round = s.t + 2;
    h.rag = ctx.rag;
    h.potential_direction = ctx.potential_direction;
    return h;
}

logic::MarketLogic make_logic(const logic::LogicLibrary& lib, const agents::GeneratedText& g, logic::Provenance p) {
    logic::MarketLogic m;
    m.id = lib.next_id("logic");
    m.provenance = p;
    m.logic_text = g.logic_text;
    m.c_text = g.c_text;
    m.b_text = g.b_text;
    return m;
}

} // namespace

Json to_json(const OuterState& s) {
    Json j = state_json(s);
    j["library"] = Json::array();
    for (const logic::MarketLogic& m : s.library.entries()) j["library"].push_back(logic::to_json(m));
    j["rounds"] = Json::array();
    for (const OuterRound& r : s.rounds) j["rounds"].push_back(round_json(r));
    return j;
}

RunStore::RunStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

bool RunStore::has_state() const { return std::filesystem::exists(dir_ / "state.json"); }

void RunStore::write_config(const Json& config) const {
    Json j = config;
    j["schema_version"] = kSchemaVersion;
    write_atomic(dir_ / "config.json", dump(j));
}

std::optional<Json> RunStore::read_config() const {
    const auto p = dir_ / "config.json";
    auto text = read_text(p);
    if (!text) return std::nullopt;
    return parse_record(p, *text);
}

void RunStore::save(const OuterState& s) const {
    std::filesystem::create_directories(dir_);
    s.library.save(dir_ / "library.jsonl");
    for (const OuterRound& r : s.rounds) {
        const auto p = dir_ / "rounds" / round_file(r.round);
        // rounds are immutable once written; only new ones are added
        if (!std::filesystem::exists(p)) write_atomic(p, dump(round_json(r)));
    }
    write_atomic(dir_ / "state.json", dump(state_json(s)));
}

OuterState RunStore::load() const {
    const auto sp = dir_ / "state.json";
    const auto text = read_text(sp);
    if (!text) throw PreconditionError("no run state in " + dir_.string());
    const Json st = parse_record(sp, *text);
    OuterState s;
    try {
        const logic::LogicLibrary full = logic::LogicLibrary::load(dir_ / "library.jsonl");
        const std::size_t n = st.at("library_size").get<std::size_t>();
        if (full.size() < n) throw SchemaError("library.jsonl is shorter than the recorded state");
        // entries appended after the last completed round are discarded
        for (std::size_t i = 0; i < n; ++i) s.library.append(full.entries()[i]);
        s.init_size = st.at("init_size").get<std::size_t>();
        s.current_id = st.at("current_id").get<std::string>();
        s.hist = st.at("hist").get<std::vector<std::string>>();
        s.best_id = st.at("best_id").get<std::string>();
        if (!st.at("best_round").is_null()) s.best_round = st["best_round"].get<std::size_t>();
        s.t = st.at("t").get<int>();
        s.complete = st.at("complete").get<bool>();
    } catch (const Json::exception& e) {
        throw SchemaError("corrupt record " + sp.string() + ": " + e.what());
    }
    for (int r = 1; r <= s.t; ++r) {
        const auto p = dir_ / "rounds" / round_file(r);
        const auto rt = read_text(p);
        if (!rt) throw SchemaError("missing round record " + p.string());
        s.rounds.push_back(round_from_json(parse_record(p, *rt)));
    }
    if (s.best_round && *s.best_round >= s.rounds.size()) throw SchemaError("state best_round out of range");
    if (!s.library.contains(s.current_id)) throw SchemaError("state names an unknown current logic");
    return s;
}

void RunStore::write_final(const Json& record) const { write_atomic(dir_ / "final_report.json", dump(record)); }

std::optional<Json> RunStore::read_final() const {
    const auto p = dir_ / "final_report.json";
    auto text = read_text(p);
    if (!text) return std::nullopt;
    return parse_record(p, *text);
}

OuterState start_outer_loop(const logic::LogicLibrary& initial, LoopContext& ctx, const RunStore* store) {
    ctx.config.validate();
    ctx.objective.validate();
    if (initial.size() == 0) throw PreconditionError("the initial logic library is empty");
    OuterState s;
    s.library = initial;
    s.init_size = initial.size();

    agents::LogicHistory h;
    for (const logic::MarketLogic& m : initial.entries()) h.library.push_back(agents::describe_logic(m));
    h.rag = ctx.rag;
    h.potential_direction = ctx.potential_direction;
    const auto g = agents::generate_logic(h, ctx.backend, ctx.call);
    if (!g) throw AgentError(agents::kLogicGenerator, "initial logic generation failed its schema");
    logic::MarketLogic first = make_logic(s.library, *g, logic::Provenance::Generated);
    s.current_id = first.id;
    s.best_id = first.id;
    s.hist = {first.id};
    s.library.append(std::move(first));
    if (store) store->save(s);
    return s;
}

void advance_outer_loop(OuterState& s, LoopContext& ctx, const RunStore* store) {
    if (s.t >= ctx.config.rounds) throw PreconditionError("the outer loop has already run all rounds");
    OuterRound r;
    r.round = s.t + 1;
    r.logic_id = s.current_id;

    logic::MarketLogic current = *s.library.find(s.current_id);
    r.evidence = inner_loop(current, ctx);
    // keep the canonical structure with the library entry
    if (r.evidence.h_struct && !current.h_struct) {
        current.h_struct = r.evidence.h_struct;
        current.gamma = r.evidence.gamma;
        s.library.replace(current);
    }
    s.rounds.push_back(r);

    // refinement direction over the histories including this round
    r.feedback = agents::refinement_direction(history_for(s, ctx), ctx.backend, ctx.call).value_or(Json(nullptr));
    s.rounds.back().feedback = r.feedback;

    const Evidence* best = s.best_evidence();
    if (!best || r.evidence.best_j() > best->best_j()) {
        s.best_id = s.current_id;
        s.best_round = s.rounds.size() - 1;
        s.rounds.back().best_updated = true;
    }

    const auto g = agents::generate_logic(history_for(s, ctx), ctx.backend, ctx.call);
    if (g) {
        logic::MarketLogic next = make_logic(s.library, *g, logic::Provenance::Refined);
        s.rounds.back().generated_id = next.id;
        s.hist.push_back(next.id);
        s.current_id = next.id;
        s.library.append(std::move(next));
    } else {
        s.rounds.back().generation_error = "logic generation failed its schema; the current logic is kept";
    }
    ++s.t;
    if (s.t >= ctx.config.rounds) s.complete = true;
    if (store) store->save(s);
}

void finish_outer_loop(OuterState& s, LoopContext& ctx, const RunStore* store) {
    while (s.t < ctx.config.rounds) advance_outer_loop(s, ctx, store);
    if (!s.complete) {
        s.complete = true;
        if (store) store->save(s);
    }
}

OuterState outer_loop(const logic::LogicLibrary& initial, LoopContext& ctx, const RunStore* store) {
    OuterState s = start_outer_loop(initial, ctx, store);
    finish_outer_loop(s, ctx, store);
    return s;
}

Json final_evaluation(const OuterState& s, EngineEvaluator& evaluator, bool final_run, const RunStore* store) {
    if (!final_run) throw LeakageError("final evaluation reads the test interval and requires the final-run flag");
    if (!s.complete) throw LeakageError("final evaluation is only available after the outer loop completes");
    if (store)
        if (auto cached = store->read_final()) return *cached;
    const Evidence* ev = s.best_evidence();
    const CandidateRecord* best = ev ? ev->best_candidate() : nullptr;
    if (!best || !ev->h_struct) throw PreconditionError("no evaluated candidate to test");

    const backtest::BacktestReport test = evaluator.evaluate_final(dsl::parse(best->expression), *ev->h_struct, true);
    Json record = {{"schema_version", kSchemaVersion},
                   {"logic_id", s.best_id},
                   {"expression", best->expression},
                   {"flipped", best->flipped},
                   {"validation", report_json(best->validation)},
                   {"test", backtest::to_json(test, true)}};
    if (store) {
        store->write_final(record);
        return *store->read_final();
    }
    return record;
}

} // namespace alphalogics::loop
