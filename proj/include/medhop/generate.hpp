#pragma once

#include "medhop/backends.hpp"
#include "medhop/prompt.hpp"
#include "medhop/types.hpp"

#include <iosfwd>
#include <string>

namespace medhop::generate {

struct AnswerRequest {
    std::string sub_question;
    std::string sub_query;
    std::string anchor;     // previous hop's normalized answer
    ContextBundle context;
};

// Context serialized as one numbered list, snippets first then wiki
// sentences; an empty bundle binds the literal "(none)". Exposed for tests
// and fixture tooling.
std::string serialize_context(const ContextBundle& context);

// Deterministic rendering of the answer prompt. Throws
// Error{MissingPlaceholder} when the template lacks a binding.
prompt::RenderedPrompt render_answer_prompt(const AnswerRequest& request,
                                            const prompt::PromptTemplate& tpl);

// One completion call parsed as a JSON object with exactly the keys
// long_answer and short_answer (both non-empty strings); tolerates one code
// fence; re-prompts once on malformed output.
// Throws Error{MalformedAnswer} after the retry, Error{BackendFailure} as-is.
AnswerPair generate_answer(backends::LlmBackend& llm, const prompt::RenderedPrompt& rendered,
                           const std::string& model_id, double temperature);

// Everything one hop needs, bundled so callers thread config once.
struct HopDeps {
    backends::LlmBackend& llm;
    backends::SearchBackend& search;
    backends::WikiClient& wiki;
    const prompt::PromptLibrary& prompts;
    std::string answer_model_id;
    double temperature = 0.0;
    int search_limit = 10;
    int max_articles = 3;
    int wiki_token_budget = 300;
    int max_sentences = 0;  // 0: the token budget alone limits selection
    std::size_t prompt_char_budget = 16000;
    bool wiki_title_guard = true;
    std::ostream* log = nullptr;
};

// One full reasoning hop: search on sub_query + anchor, fetch and rank
// Wikipedia sentences, assemble the context bundle, render the prompt
// (overrunning the character budget is an error, never a silent truncation),
// generate, and normalize the short answer.
// Failures other than QuotaExceeded are wrapped as Error{HopError} carrying
// the hop index; QuotaExceeded passes through so batch runs can defer the
// whole question.
HopRecord run_hop(const HopDeps& deps, const DecompositionStep& step,
                  const std::string& anchor_in);

}  // namespace medhop::generate
