#pragma once

#include "medhop/backends.hpp"
#include "medhop/prompt.hpp"
#include "medhop/types.hpp"

#include <string>

namespace medhop::decompose {

// True when declarative sentences precede the final interrogative sentence,
// or the text runs past 50 tokens.
bool needs_simplification(const Question& question);

struct SimplifyOutcome {
    std::string text;
    bool truncated = false;  // fallback truncation was applied
};

// Asks the model for a sub-50-token restatement; one stricter re-prompt when
// the first answer is too long, then a mechanical truncation to the final
// interrogative sentence (capped at 49 tokens) with the flag set.
SimplifyOutcome simplify(backends::LlmBackend& llm, const prompt::PromptLibrary& prompts,
                         const Question& question, const std::string& model_id,
                         double temperature);

// Longest run of capitalized tokens, earliest run on ties, outer punctuation
// stripped. Used when the model omits an explicit anchor.
std::string fallback_anchor(const std::string& question_text);

// Unwraps one ``` fence (with optional language tag) around a payload;
// returns the text unchanged when there is no fence.
std::string strip_code_fence(const std::string& text);

// Chain-of-sub-questions plan for a sequential question: renders the
// decomposition prompt with the worked examples, parses a JSON array of
// {sub_question, sub_query} steps (optional "anchor" on the first), validates
// it, and re-prompts once on malformed output.
// Throws Error{MalformedPlan} after the retry, Error{BackendFailure} as-is.
DecompositionPlan decompose_sequential(backends::LlmBackend& llm,
                                       const prompt::PromptLibrary& prompts,
                                       const Question& question, const std::string& model_id,
                                       double temperature, int max_hops = 4);

// One-step plan for a direct question: sub_question is the question itself;
// a dedicated prompt extracts {sub_query, anchor}. Same retry contract.
DecompositionPlan extract_direct(backends::LlmBackend& llm,
                                 const prompt::PromptLibrary& prompts, const Question& question,
                                 const std::string& model_id, double temperature,
                                 int max_hops = 4);

// Structural invariants plus the module rules: step count <= max_hops and
// every sub_question at least 3 tokens. Throws Error{MalformedPlan} naming
// the first violated rule; returns the plan unchanged otherwise.
const DecompositionPlan& validate_plan(const DecompositionPlan& plan, int max_hops = 4);

}  // namespace medhop::decompose
