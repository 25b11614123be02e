#pragma once

#include "medhop/backends.hpp"
#include "medhop/types.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace medhop::retrieve {

struct RankedSentence {
    std::string sentence;
    double score = 0.0;     // cosine similarity, in [0,1]
    int source_order = 0;   // position in the input corpus; breaks score ties
};

// sub_query and anchor joined by one space, trimmed; an empty side drops out.
std::string build_search_query(const std::string& sub_query, const std::string& anchor);

// At most `limit` results (clamped to [1,10]) in provider order. Empty input
// or zero provider hits give an empty list.
std::vector<backends::SearchResult> search(backends::SearchBackend& backend,
                                           const std::string& query, int limit = 10);

// "https://en.wikipedia.org/wiki/HFE_(gene)" -> "HFE (gene)"; nullopt for
// non-Wikipedia links.
std::optional<std::string> wikipedia_title_from_link(const std::string& link);

// Article texts for Wikipedia links among the results; when there are none,
// falls back to one Wikipedia search on `query`. Individual fetch failures
// are logged to `log` (when given) and skipped — a hop never dies here.
std::vector<std::string> fetch_wikipedia(backends::WikiClient& client,
                                         const std::vector<backends::SearchResult>& results,
                                         const std::string& query, int max_articles = 3,
                                         std::ostream* log = nullptr);

// TF-IDF over `sentences` as the corpus (one sentence = one document):
// tf = raw count, idf = ln((1+N)/(1+df)) + 1, vectors L2-normalized, cosine
// against the query in the same space. Sorted by score descending, ties by
// ascending source_order.
std::vector<RankedSentence> rank_sentences_tfidf(const std::vector<std::string>& sentences,
                                                 const std::string& query);

// Greedy prefix under the token budget: take sentences in rank order while
// they fit, stop at the first one that does not. max_sentences > 0 caps the
// count; 0 leaves it to the budget alone.
std::vector<std::string> select_top_sentences(const std::vector<RankedSentence>& ranked,
                                              int token_budget = 300, int max_sentences = 0);

// Snippets (capped at 10) plus wiki sentences with exact snippet duplicates
// removed; re-applies the budget rule as a safety net so wiki_token_count
// can never exceed the budget regardless of caller discipline.
ContextBundle assemble_context(const std::vector<std::string>& snippets,
                               const std::vector<std::string>& wiki_sentences,
                               int token_budget = 300);

}  // namespace medhop::retrieve
