#pragma once

#include <optional>
#include <string>
#include <vector>

namespace medhop {

// Core value objects shared by every stage of the pipeline. All of them are
// immutable in spirit: built once, then passed around by const reference or
// value. Invariants are checked by validate_* helpers; the trace codec calls
// them on every deserialized record.

enum class QuestionKind { Direct, Sequential };

const char* to_string(QuestionKind k);
std::optional<QuestionKind> question_kind_from_string(std::string_view s);

struct Question {
    std::string id;
    std::string text;  // original question, non-empty after trimming
    std::optional<std::string> simplified_text;  // < 50 whitespace tokens when present
    std::optional<QuestionKind> kind;

    // The text later stages should work with: simplified form when present.
    const std::string& working_text() const {
        return simplified_text.has_value() ? *simplified_text : text;
    }
};

// Returns an error description, or empty string when valid.
std::string validate_question(const Question& q);

struct DecompositionStep {
    int index = 0;             // 1-based, contiguous within a plan
    std::string sub_question;  // self-contained natural-language step
    std::string sub_query;     // keyword distillation, never longer than sub_question
};

struct DecompositionPlan {
    std::string question_id;
    std::vector<DecompositionStep> steps;
    std::string initial_anchor;  // key entities extracted from the question
};

std::string validate_plan_structure(const DecompositionPlan& p);

struct ContextBundle {
    std::vector<std::string> snippets;        // search-engine snippets, at most 10
    std::vector<std::string> wiki_sentences;  // ranked sentences under the token budget
    int wiki_token_count = 0;                 // whitespace tokens across wiki_sentences, <= 300

    bool empty() const { return snippets.empty() && wiki_sentences.empty(); }
};

std::string validate_context(const ContextBundle& c);

struct AnswerPair {
    std::string short_answer;  // serialized as "short"
    std::string long_answer;   // serialized as "long"
};

struct HopRecord {
    int index = 0;
    std::string sub_question;
    std::string sub_query;
    std::string anchor_in;  // anchor carried into this hop
    ContextBundle context;
    AnswerPair raw_answer;
    std::string normalized_short;  // anchor handed to the next hop
};

enum class ResultStatus { Answered, Failed };

const char* to_string(ResultStatus s);
std::optional<ResultStatus> result_status_from_string(std::string_view s);

struct QuestionResult {
    std::string question_id;
    QuestionKind kind = QuestionKind::Direct;
    std::vector<HopRecord> hops;
    std::string final_short;
    std::string final_long;
    ResultStatus status = ResultStatus::Failed;
    std::optional<std::string> failure_reason;
};

// Full invariant check: hop index contiguity, context bundle limits, and the
// final-answer provenance rule for Answered results.
std::string validate_result(const QuestionResult& r);

}  // namespace medhop
