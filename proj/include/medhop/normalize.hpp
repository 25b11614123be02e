#pragma once

#include "medhop/backends.hpp"

#include <iosfwd>
#include <string>

namespace medhop::normalize {

enum class KindHint { YesNo, Entity, Numeric, Unknown };

const char* to_string(KindHint k);

// Routes by the sub-question's opening words: auxiliary verb first -> YesNo;
// "how many"/"how much" -> Numeric; WH word first -> Entity; anything else
// -> Unknown.
KindHint derive_kind_hint(const std::string& sub_question);

// Mechanical cleanup of a model's short answer: trim, strip surrounding
// quotes and trailing sentence punctuation (to a fixpoint), collapse internal
// whitespace; YesNo answers canonicalize to exactly "Yes"/"No" from the
// leading token; Entity answers lose leading articles.
// Throws Error{UnverifiableAnswer} when a YesNo answer leads with neither.
std::string apply_format_rules(const std::string& short_answer, KindHint hint);

// Replaces the answer with the top Wikipedia page title for it, provided the
// title shares at least one content token with the answer (the guard keeps
// an unrelated top hit from overwriting a correct answer; disabling it
// restores unconditional adoption). Best-effort: any client failure logs and
// returns the input unchanged.
std::string wikipedia_normalize(backends::WikiClient& client, const std::string& short_answer,
                                bool title_guard = true, std::ostream* log = nullptr);

// Full chain: format rules, then the title lookup for Entity/Unknown answers
// only (YesNo and Numeric never touch the wiki), then format rules again so
// an adopted title obeys the same shape. Idempotent for a fixed client.
std::string normalize(backends::WikiClient& client, const std::string& short_answer,
                      KindHint hint, bool title_guard = true, std::ostream* log = nullptr);

}  // namespace medhop::normalize
