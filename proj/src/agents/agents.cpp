#include <cmath>
#include <set>

#include "alphalogics/agents.hpp"
#include "alphalogics/error.hpp"

namespace alphalogics::agents {

namespace {

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::string join_errors(const std::vector<std::string>& errs) {
    std::string out;
    for (const std::string& e : errs) out += "- " + e + "\n";
    return out;
}

AgentResult call_or_throw(std::string_view agent, const Json& payload, CompletionBackend& backend,
                          const CallOptions& options) {
    AgentResult r = call_agent(agent, payload, backend, options);
    if (!r.ok)
        throw AgentError(std::string(agent), "no schema-valid reply after " + std::to_string(r.attempts) +
                                                 " attempts:\n" + join_errors(r.errors));
    return r;
}

Json keep_keys(const Json& obj, std::initializer_list<const char*> keys) {
    Json out = Json::object();
    for (const char* k : keys) out[k] = obj.at(k);
    return out;
}

} // namespace

std::string render_user_message(const AgentTemplate& t, const Json& payload) {
    nlohmann::ordered_json msg;
    msg["instruction"] = t.instruction;
    msg["input"] = payload;
    msg["output_schema"] = t.output_schema;
    return msg.dump(2);
}

AgentResult call_agent(std::string_view agent, const Json& payload, CompletionBackend& backend,
                       const CallOptions& options) {
    const AgentTemplate& t = find_template(agent);
    if (auto errs = validate_input(t, payload); !errs.empty())
        throw SchemaError(t.name + " input does not match its schema:\n" + join_errors(errs));

    const std::string base = render_user_message(t, payload);
    AgentResult result;
    const int max_attempts = 1 + std::max(0, options.max_retries);
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        CompletionRequest req{t.name, t.system, base, payload, attempt};
        if (attempt > 0)
            req.user += "\n\nYour previous reply was rejected:\n" + join_errors(result.errors) +
                        "Reply with a single JSON object that matches output_schema exactly.";
        result.raw_text = backend.complete(req);
        result.attempts = attempt + 1;
        auto parsed = extract_json(result.raw_text);
        if (!parsed || !parsed->is_object()) {
            result.errors = {"$: reply is not a JSON object"};
            continue;
        }
        result.errors = validate_output(t, *parsed);
        if (result.errors.empty()) {
            result.ok = true;
            result.output = std::move(*parsed);
            return result;
        }
    }
    result.output = nullptr;
    return result;
}

std::string describe_logic(const logic::MarketLogic& m) {
    return m.logic_text + "\nCondition (C): " + m.c_text + "\nOutcome (B): " + m.b_text;
}

Json metrics_payload(const backtest::BacktestReport& validation) {
    return {{"IC", number_or_null(validation.ic)},
            {"IR", number_or_null(validation.ir)},
            {"MDD", number_or_null(validation.mdd)}};
}

logic::MarketLogic mine_logic(std::string_view formula, std::string id, CompletionBackend& backend,
                              const CallOptions& options) {
    try {
        dsl::parse(formula);
    } catch (const ParseError& e) {
        throw PreconditionError(std::string("cannot mine an invalid formula: ") + e.what());
    }
    const std::string library = dsl::OperatorCatalogue::instance().describe();

    const Json structure = call_or_throw(kFormulaStructure,
                                         {{"formula", formula}, {"factor_operations_library", library}},
                                         backend, options)
                               .output;
    if (structure["components"].empty()) throw AgentError(kFormulaStructure, "no components returned");

    Json math_components = Json::array();
    for (const Json& c : structure["components"])
        math_components.push_back(keep_keys(c, {"name", "expression", "mathematical_meaning"}));

    const Json semantics = call_or_throw(kFinancialSemantics,
                                         {{"factor_formula", formula},
                                          {"mathematical_analysis", {{"components", math_components}}},
                                          {"factor_operations_library", library}},
                                         backend, options)
                               .output;
    const Json& fin = semantics["components"];
    if (fin.size() != math_components.size())
        throw AgentError(kFinancialSemantics, "returned " + std::to_string(fin.size()) + " components, expected " +
                                                  std::to_string(math_components.size()));
    Json fin_components = Json::array();
    for (std::size_t i = 0; i < fin.size(); ++i) {
        for (const char* key : {"name", "expression", "mathematical_meaning"})
            if (fin[i][key] != math_components[i][key])
                throw AgentError(kFinancialSemantics,
                                 "component " + std::to_string(i) + " changed its " + key + " field");
        fin_components.push_back(
            keep_keys(fin[i], {"name", "expression", "mathematical_meaning", "financial_interpretation"}));
    }

    const Json abstraction =
        call_or_throw(kLogicAbstraction, {{"component_analysis", {{"components", fin_components}}}}, backend, options)
            .output;

    logic::MarketLogic m;
    m.id = std::move(id);
    m.provenance = logic::Provenance::Mined;
    m.logic_text = abstraction["logic_text"].get<std::string>();
    m.c_text = abstraction["c_text"].get<std::string>();
    m.b_text = abstraction["b_text"].get<std::string>();
    try {
        m.validate();
    } catch (const SchemaError& e) {
        throw AgentError(kLogicAbstraction, e.what());
    }
    return m;
}

StructuredLogic structure_logic(const logic::MarketLogic& m, CompletionBackend& backend,
                                const CallOptions& options) {
    const Json payload = {{"logic_text", m.logic_text},
                          {"c_text", m.c_text},
                          {"b_text", m.b_text},
                          {"dsl_operators", dsl::OperatorCatalogue::instance().names()}};
    const Json out = call_or_throw(kLogicToConstraint, payload, backend, options).output;
    StructuredLogic s;
    try {
        s.h_struct = logic::canonicalize_fields(out);
    } catch (const SchemaError& e) {
        throw AgentError(kLogicToConstraint, std::string("unusable H_struct: ") + e.what());
    }
    s.gamma = logic::compile(s.h_struct);
    s.agent_gamma = out["Gamma"];
    s.notes = out["canonicalization_notes"].get<std::string>();
    return s;
}

GenerationResult generate_factors(const logic::ConstraintSet& gamma, const Json& feedback,
                                  CompletionBackend& backend, const GenerationOptions& options) {
    if (options.max_candidates == 0) throw PreconditionError("max_candidates must be positive");
    GenerationResult res;
    std::set<std::string> seen;
    const Json gamma_json = logic::to_json(gamma);
    Json current_feedback = feedback;

    while (res.factors.size() < options.max_candidates && res.calls < std::max(1, options.call_budget)) {
        const Json payload = {{"Gamma", gamma_json},
                              {"feedback", current_feedback},
                              {"max_candidates", options.max_candidates - res.factors.size()}};
        if (res.calls > 0) ++res.regenerations;
        ++res.calls;
        const AgentResult r = call_agent(kFactorGenerator, payload, backend, options.call);
        std::vector<Rejection> round_rejects;
        if (r.ok) {
            for (const Json& f : r.output["factors"]) {
                if (res.factors.size() >= options.max_candidates) break;
                const std::string text = f["expression"].get<std::string>();
                dsl::FactorExpr expr;
                try {
                    expr = dsl::parse(text);
                } catch (const ParseError& e) {
                    round_rejects.push_back({text, std::string("parse error: ") + e.what()});
                    continue;
                }
                const logic::CheckReport report = logic::check(expr, gamma);
                if (!report.ok()) {
                    round_rejects.push_back({text, report.summary()});
                    continue;
                }
                std::string canonical = dsl::unparse(expr);
                if (!seen.insert(canonical).second) {
                    round_rejects.push_back({text, "duplicate of an accepted candidate"});
                    continue;
                }
                res.factors.push_back(std::move(expr));
                res.texts.push_back(std::move(canonical));
            }
        } else {
            round_rejects.push_back({"", "reply did not match the output schema"});
        }
        res.rejected.insert(res.rejected.end(), round_rejects.begin(), round_rejects.end());
        // only rejected candidates are regenerated; a clean short reply is final
        if (round_rejects.empty()) break;
        Json rejected = Json::array();
        for (const Rejection& rj : round_rejects) rejected.push_back({{"expression", rj.expression}, {"reason", rj.reason}});
        current_feedback = {{"previous_feedback", feedback}, {"rejected", rejected}};
    }
    if (res.factors.empty())
        throw AgentError(kFactorGenerator, "no admissible candidate after " + std::to_string(res.calls) + " calls");
    return res;
}

std::optional<Json> factor_feedback(const logic::MarketLogicStruct& h, const std::vector<CandidateMetrics>& candidates,
                                    CompletionBackend& backend, const CallOptions& options) {
    if (candidates.empty()) throw PreconditionError("feedback needs at least one evaluated candidate");
    Json list = Json::array();
    for (const CandidateMetrics& c : candidates)
        list.push_back({{"expression", c.expression}, {"metrics", metrics_payload(c.validation)}});
    AgentResult r = call_agent(kFactorFeedback, {{"H_struct", logic::to_json(h)}, {"candidates", list}}, backend, options);
    if (!r.ok) return std::nullopt;
    return std::move(r.output);
}

Json logic_generation_payload(const LogicHistory& h) {
    if (h.round < 1) throw PreconditionError("round numbers start at 1");
    Json fb = Json::array();
    for (const Json& f : h.feedback) fb.push_back(f.is_null() ? Json{{"status", "unavailable"}} : f);
    Json p = {{"H_init_lib", h.library},
              {"H_current", h.current ? Json(*h.current) : Json(nullptr)},
              {"H_hist", h.hist},
              {"E_hist", h.evidence},
              {"fb_hist", fb},
              {"round", h.round}};
    if (h.rag) p["RAG"] = *h.rag;
    if (h.potential_direction) p["potential_direction_content"] = *h.potential_direction;
    return p;
}

std::optional<GeneratedText> generate_logic(const LogicHistory& h, CompletionBackend& backend,
                                            const CallOptions& options) {
    AgentResult r = call_agent(kLogicGenerator, logic_generation_payload(h), backend, options);
    if (!r.ok) return std::nullopt;
    GeneratedText t{r.output["logic_text"], r.output["c_text"], r.output["b_text"]};
    if (t.logic_text.empty() || t.c_text.empty() || t.b_text.empty()) return std::nullopt;
    return t;
}

std::optional<Json> refinement_direction(const LogicHistory& h, CompletionBackend& backend,
                                         const CallOptions& options) {
    if (!h.current) throw PreconditionError("refinement needs a current logic");
    Json fb = Json::array();
    for (const Json& f : h.feedback) fb.push_back(f.is_null() ? Json{{"status", "unavailable"}} : f);
    const Json payload = {{"H_current", *h.current}, {"H_hist", h.hist}, {"E_hist", h.evidence}, {"fb_hist", fb}};
    AgentResult r = call_agent(kLogicRefinement, payload, backend, options);
    if (!r.ok) return std::nullopt;
    return std::move(r.output);
}

} // namespace alphalogics::agents
