#include "agents/templates.hpp"

namespace alphalogics::agents::detail {

// Prompt templates, one JSON document per agent.
const std::vector<std::pair<std::string_view, std::string_view>>& template_texts() {
    static const std::vector<std::pair<std::string_view, std::string_view>> t = {
        {"FormulaStructureAgent", R"TEMPLATE({
  "system": "Decompose the factor formula into operational structure and formal properties only. Identify sub-expressions, map operators to mathematical meaning using the factor operations library, and note any inferred operators. Use only variables {open, close, high, low, volume, return} with canonical meanings. Do not provide financial interpretation.",
  "instruction": "Identify sub-expressions, map operators to mathematical meaning using the factor operations library, and return a structured decomposition.",
  "input_schema": {
    "formula": "<string>",
    "factor_operations_library": "<string>"
  },
  "output_schema": {
    "components": [
      {
        "name": "<string>",
        "expression": "<string>",
        "mathematical_meaning": "<string>"
      }
    ]
  }
})TEMPLATE"},
        {"FinancialSemanticsMappingAgent", R"TEMPLATE({
  "system": "Translate mathematical factor components into financial interpretations. Preserve mathematical_meaning exactly, and connect each component to market behavior, investor psychology, trading patterns, liquidity, information flow, and risk-return characteristics using the factor operations library.",
  "instruction": "Given factor_formula, mathematical_analysis, and factor_operations_library, add financial_interpretation to each component; preserve mathematical_meaning exactly and return only JSON. Use only variables {open, close, high, low, volume, return} with their standard meanings.",
  "input_schema": {
    "factor_formula": "<string>",
    "mathematical_analysis": {
      "components": [
        {
          "name": "<string>",
          "expression": "<string>",
          "mathematical_meaning": "<string>"
        }
      ]
    },
    "factor_operations_library": "<string>"
  },
  "output_schema": {
    "components": [
      {
        "name": "<string>",
        "expression": "<string>",
        "mathematical_meaning": "<string>",
        "financial_interpretation": "<string>"
      }
    ]
  }
})TEMPLATE"},
        {"MarketLogicAbstractionAgent", R"TEMPLATE({
  "system": "Abstract component-level financial semantics into explicit market logic H with C/B semantics. Provide a concise, human-readable logic_text and explicit C (conditions) and B (target, direction, horizon) to support downstream canonicalization.",
  "instruction": "Given component_analysis, infer the market logic H. Provide a human-readable logic_text plus explicit C (conditions) and B (target/direction/horizon). Avoid formula details and keep the logic generalizable.",
  "input_schema": {
    "component_analysis": {
      "components": [
        {
          "name": "<string>",
          "expression": "<string>",
          "mathematical_meaning": "<string>",
          "financial_interpretation": "<string>"
        }
      ]
    }
  },
  "output_schema": {
    "logic_text": "<string>",
    "c_text": "<string>",
    "b_text": "<string>"
  }
})TEMPLATE"},
        {"LogicToFinanceConstraintAgent", R"TEMPLATE({
  "system": "Canonicalize H into H_struct (C as a Boolean formula over predicates; B with target, direction, horizon), then compile constraints Gamma over variables, operator families, parameter ranges, and direction consistency.",
  "instruction": "Canonicalize H into H_struct (C as a Boolean formula over predicates, B with target/direction/horizon), then compile constraints Gamma.",
  "input_schema": {
    "logic_text": "<string>",
    "c_text": "<string>",
    "b_text": "<string>",
    "dsl_operators": ["<string>"]
  },
  "output_schema": {
    "H_struct": {
      "C": {
        "formula": "<string>",
        "predicates": [
          {"id": "<string>", "v": "<string>", "op": "<string>", "theta": "<string>", "w": "<int>"}
        ]
      },
      "B": {"y": "<string>", "d": "<+1|-1>", "h": "<int>"}
    },
    "Gamma": {
      "allowed_variables": ["<string>"],
      "operator_families": ["<string>"],
      "parameter_constraints": {"window": "positive integer", "lag": "positive integer"},
      "direction_constraint": "<string>"
    },
    "canonicalization_notes": "<string>"
  }
})TEMPLATE"},
        {"FactorExpressionGeneratorAgent", R"TEMPLATE({
  "system": "Generate candidate factor expressions that satisfy Gamma. Select operators, time windows, and compositions consistent with allowed variables, operator families, and parameter constraints; ensure direction consistency.",
  "instruction": "Generate candidate factor expressions consistent with Gamma. Use allowed variables, operator families, parameter constraints, and direction constraints. Incorporate feedback if provided, and return up to max_candidates expressions with brief rationale and operator list.",
  "input_schema": {
    "Gamma": "<object>",
    "feedback": "<string or object or null>",
    "max_candidates": "<int>"
  },
  "output_schema": {
    "factors": [
      {"expression": "<string>", "rationale": "<string>", "operators": ["<string>"]}
    ],
    "notes": "<string>"
  }
})TEMPLATE"},
        {"FactorPerformanceFeedbackAgent", R"TEMPLATE({
  "system": "Summarize candidate performance under a fixed logic. Compare validation metrics across candidates, identify the best expression, diagnose weaknesses, and suggest edits to guide the next generation.",
  "instruction": "Compare recent candidates under the same logic and validation metrics. Identify the best expression and key metrics, explain weaknesses, and suggest edits to guide the next generation.",
  "input_schema": {
    "H_struct": "<object>",
    "candidates": [
      {"expression": "<string>", "metrics": {"IC": "<float>", "IR": "<float>", "MDD": "<float>"}}
    ]
  },
  "output_schema": {
    "summary": {"best_expression": "<string>", "key_metrics": "<string>"},
    "feedback": ["<string>"],
    "suggested_edits": [{"action": "<tighten|relax|shift>", "detail": "<string>"}]
  }
})TEMPLATE"},
        {"MarketLogicGeneratorAgent", R"TEMPLATE({
  "system": "Generate new market logic H = <C,B> based on historical logics and feedback. Ensure the logic reflects plausible market mechanisms and remains consistent with the structured C/B schema.",
  "instruction": "Use H_init_lib to seed the first-round logic; in later rounds use H_init_lib, H_current, H_hist, E_hist, and fb_hist to propose a new market logic grounded in existing market mechanisms and distinct from prior logics. Output a human-readable logic with explicit C and B semantics.",
  "input_schema": {
    "H_init_lib": ["<string>"],
    "H_current": "<string or null>",
    "H_hist": ["<string>"],
    "E_hist": ["<object>"],
    "fb_hist": ["<object>"],
    "round": "<int>"
  },
  "output_schema": {
    "logic_text": "<string>",
    "c_text": "<string>",
    "b_text": "<string>"
  }
})TEMPLATE"},
        {"MarketLogicRefinementDirectionAgent", R"TEMPLATE({
  "system": "Analyze evidence and propose logic refinement directions. Aggregate factor performance across time, market conditions, and risk dimensions; identify logic components that are too broad, vague, or mismatched with market structure.",
  "instruction": "Analyze historical evidence and propose logic refinements. Summarize factor performance distribution across time, market conditions, and risk dimensions, and identify logic components that are too broad, vague, or mismatched with market structure.",
  "input_schema": {
    "H_current": "<string>",
    "H_hist": ["<string>"],
    "E_hist": ["<object>"],
    "fb_hist": ["<object>"]
  },
  "output_schema": {
    "refinement_actions": [
      {"action": "<tighten|relax|shift|reweight>", "target": "<C or B field>", "detail": "<string>"}
    ],
    "focus_variables": ["<string>"],
    "horizon_suggestion": "<string>",
    "rationale": "<string>"
  }
})TEMPLATE"},
    };
    return t;
}

} // namespace alphalogics::agents::detail
