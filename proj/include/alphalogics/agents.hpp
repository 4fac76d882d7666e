#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "alphalogics/backtest.hpp"
#include "alphalogics/dsl.hpp"
#include "alphalogics/logic.hpp"

namespace alphalogics::agents {

using Json = nlohmann::json;

inline constexpr const char* kFormulaStructure = "FormulaStructureAgent";
inline constexpr const char* kFinancialSemantics = "FinancialSemanticsMappingAgent";
inline constexpr const char* kLogicAbstraction = "MarketLogicAbstractionAgent";
inline constexpr const char* kLogicToConstraint = "LogicToFinanceConstraintAgent";
inline constexpr const char* kFactorGenerator = "FactorExpressionGeneratorAgent";
inline constexpr const char* kFactorFeedback = "FactorPerformanceFeedbackAgent";
inline constexpr const char* kLogicGenerator = "MarketLogicGeneratorAgent";
inline constexpr const char* kLogicRefinement = "MarketLogicRefinementDirectionAgent";

struct AgentTemplate {
    std::string name;
    std::string system;
    std::string instruction;
    Json input_schema;
    Json output_schema;
    /// Input keys that may be present beyond input_schema.
    std::vector<std::string> optional_inputs;
};

const std::vector<AgentTemplate>& all_templates();
/// Throws PreconditionError for an unknown agent.
const AgentTemplate& find_template(std::string_view name);

// ---- schema validation ----

enum class KeyPolicy { Exact, AllowExtra };

/// Validates `value` against a template schema. String leaves are type
/// placeholders ("<string>", "<int>", "<float>", "<object>"), unions
/// ("<string or null>"), enums ("<a|b>") or free text; one-element arrays
/// describe homogeneous lists. Returns one message per problem.
std::vector<std::string> validate(const Json& schema, const Json& value, KeyPolicy keys,
                                  const std::string& path = "$");

std::vector<std::string> validate_input(const AgentTemplate& t, const Json& payload);
std::vector<std::string> validate_output(const AgentTemplate& t, const Json& payload);

/// Stable hex fingerprint of a payload (FNV-1a over the sorted-key dump).
std::string fingerprint(const Json& payload);

/// Parses a completion as JSON, tolerating surrounding prose or code fences.
std::optional<Json> extract_json(std::string_view text);

// ---- backends ----

struct CompletionRequest {
    std::string agent;
    std::string system;
    std::string user;
    Json payload;     // the validated input payload
    int attempt = 0;  // 0 for the first try
};

class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    /// Returns the raw completion text; throws AgentError on transport failure.
    virtual std::string complete(const CompletionRequest& request) = 0;
};

/// Fixture-driven backend. A fixture file is a JSON object with a "fixtures"
/// array; each entry names an "agent" and "responses" (indexed by attempt,
/// or by how often the entry has been hit when "sequence" is true; the last
/// one repeats), plus one selector: "fingerprint" (exact payload),
/// "match" (JSON pointer -> expected value, all must hold; the entry with the
/// most pointers wins) or "default": true. Lookups with no matching entry
/// throw AgentError.
class ScriptedBackend : public CompletionBackend {
public:
    struct Fixture {
        std::string agent;
        std::optional<std::string> fingerprint;
        std::vector<std::pair<Json::json_pointer, Json>> match;
        bool is_default = false;
        bool sequence = false;
        std::vector<std::string> responses;
        std::size_t hits = 0;
    };

    struct LogEntry {
        std::string agent;
        Json payload;
        int attempt = 0;
        std::string response;
    };

    ScriptedBackend() = default;
    explicit ScriptedBackend(const Json& fixture_doc);
    static ScriptedBackend from_file(const std::filesystem::path& path);
    static Json read_fixture_file(const std::filesystem::path& path);

    void add(Fixture f);
    /// Appends the fixtures of another document.
    void load(const Json& fixture_doc);

    std::string complete(const CompletionRequest& request) override;

    std::vector<LogEntry> log() const;
    std::size_t calls(std::string_view agent) const;

private:
    std::vector<Fixture> fixtures_;
    mutable std::mutex mu_;
    std::vector<LogEntry> log_;
};

struct HttpConfig {
    std::string base_url = "http://127.0.0.1:8000";
    std::string model = "gpt-4o-mini";
    /// Name of the environment variable holding the bearer credential.
    std::string api_key_env = "ALPHALOGICS_API_KEY";
    double timeout_seconds = 120.0;
    double temperature = 0.0;
    int max_concurrency = 4;
    /// Sent as the request "seed" when set.
    std::optional<std::uint64_t> seed;
};

/// OpenAI-compatible chat-completions client.
class HttpBackend : public CompletionBackend {
public:
    explicit HttpBackend(HttpConfig config);
    ~HttpBackend() override;
    std::string complete(const CompletionRequest& request) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// ---- exchanges ----

struct CallOptions {
    int max_retries = 3;
};

struct AgentResult {
    bool ok = false;
    Json output;               // valid when ok
    std::string raw_text;      // last completion
    int attempts = 0;
    std::vector<std::string> errors;  // last attempt's schema problems
};

/// Validates the payload (SchemaError if invalid), renders the template and
/// asks the backend, re-prompting with a repair note while the completion
/// fails the output schema. Never throws for schema-invalid completions.
AgentResult call_agent(std::string_view agent, const Json& payload, CompletionBackend& backend,
                       const CallOptions& options = {});

/// Renders the user message for a template and payload.
std::string render_user_message(const AgentTemplate& t, const Json& payload);

/// Text used for a logic in payloads: "logic (C) ... (B) ...".
std::string describe_logic(const logic::MarketLogic& m);

/// Validation metrics shown to agents. Only validation numbers are ever
/// passed in, never test-interval ones.
Json metrics_payload(const backtest::BacktestReport& validation);

/// Formula -> structure -> semantics -> logic. The three components must keep
/// name, expression and mathematical_meaning across stages.
logic::MarketLogic mine_logic(std::string_view formula, std::string id, CompletionBackend& backend,
                              const CallOptions& options = {});

struct StructuredLogic {
    logic::MarketLogicStruct h_struct;
    logic::ConstraintSet gamma;  // deterministic compile of h_struct
    Json agent_gamma;            // the agent's own Gamma, kept for the record
    std::string notes;
};

/// Agent canonicalization followed by canonicalize_fields and compile.
StructuredLogic structure_logic(const logic::MarketLogic& m, CompletionBackend& backend,
                                const CallOptions& options = {});

struct Rejection {
    std::string expression;
    std::string reason;
};

struct GenerationResult {
    std::vector<dsl::FactorExpr> factors;
    std::vector<std::string> texts;  // canonical text per factor
    std::vector<Rejection> rejected;
    int calls = 0;
    int regenerations = 0;
};

struct GenerationOptions {
    std::size_t max_candidates = 5;
    int call_budget = 3;  // first call plus regenerations
    CallOptions call;
};

/// Candidates that parse and pass check(expr, gamma). Rejected candidates
/// trigger a regeneration request with their reasons while the budget lasts.
/// Throws AgentError when the budget runs out with nothing accepted.
GenerationResult generate_factors(const logic::ConstraintSet& gamma, const Json& feedback,
                                  CompletionBackend& backend, const GenerationOptions& options = {});

struct CandidateMetrics {
    std::string expression;
    backtest::BacktestReport validation;
};

/// std::nullopt when the exchange fails its schema.
std::optional<Json> factor_feedback(const logic::MarketLogicStruct& h, const std::vector<CandidateMetrics>& candidates,
                                    CompletionBackend& backend, const CallOptions& options = {});

struct LogicHistory {
    std::vector<std::string> library;  // described logics
    std::optional<std::string> current;
    std::vector<std::string> hist;
    std::vector<Json> evidence;
    std::vector<Json> feedback;  // null entries for skipped refinement
    int round = 1;
    std::optional<std::string> rag;
    std::optional<std::string> potential_direction;
};

/// Builds the generator payload; the first round carries the library only.
Json logic_generation_payload(const LogicHistory& h);

struct GeneratedText {
    std::string logic_text;
    std::string c_text;
    std::string b_text;
};

std::optional<GeneratedText> generate_logic(const LogicHistory& h, CompletionBackend& backend,
                                            const CallOptions& options = {});

std::optional<Json> refinement_direction(const LogicHistory& h, CompletionBackend& backend,
                                         const CallOptions& options = {});

} // namespace alphalogics::agents
