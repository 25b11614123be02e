#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace medhop::text {

// Whitespace below always means ASCII whitespace (space, tab, CR, LF, FF, VT).
// Token counting everywhere in this project is whitespace-delimited: a token
// is a maximal run of non-whitespace bytes.

std::string trim(std::string_view s);

// Runs of whitespace become a single space; leading/trailing runs are dropped.
std::string collapse_whitespace(std::string_view s);

std::vector<std::string> whitespace_tokens(std::string_view s);

int token_count(std::string_view s);

// Unicode NFC. Input that is not valid UTF-8 is returned unchanged.
std::string nfc(std::string_view s);

// Per-codepoint simple lowercase (Unicode), UTF-8 in and out.
std::string lowercase(std::string_view s);

bool is_valid_utf8(std::string_view s);

// Terms for TF-IDF style matching: maximal runs of alphanumeric codepoints
// (non-ASCII codepoints count as word characters), lowercased.
std::vector<std::string> term_tokens(std::string_view s);

// Sentence splitting rule (deliberately simple, replaceable):
//   - a paragraph break (one or more '\n') is a boundary;
//   - inside a paragraph, a run of [.?!] ends a sentence when it is followed
//     by whitespace and the next non-whitespace character is an ASCII
//     uppercase letter.
// Sentences are trimmed; empty pieces are dropped. "E. coli causes X. It
// spreads." therefore splits only after "X." because 'coli' is lowercase.
std::vector<std::string> split_sentences(std::string_view s);

// Canonical form used by answer matching: NFC, lowercase, surrounding
// quotes/punctuation stripped to a fixpoint, whitespace collapsed.
std::string canonical_answer(std::string_view s);

}  // namespace medhop::text
