#include "medhop/types.hpp"

#include "medhop/text.hpp"

namespace medhop {

const char* to_string(QuestionKind k) {
    return k == QuestionKind::Direct ? "direct" : "sequential";
}

std::optional<QuestionKind> question_kind_from_string(std::string_view s) {
    if (s == "direct") return QuestionKind::Direct;
    if (s == "sequential") return QuestionKind::Sequential;
    return std::nullopt;
}

const char* to_string(ResultStatus s) {
    return s == ResultStatus::Answered ? "answered" : "failed";
}

std::optional<ResultStatus> result_status_from_string(std::string_view s) {
    if (s == "answered") return ResultStatus::Answered;
    if (s == "failed") return ResultStatus::Failed;
    return std::nullopt;
}

std::string validate_question(const Question& q) {
    if (text::trim(q.text).empty()) return "text is empty after trimming";
    if (q.simplified_text && text::token_count(*q.simplified_text) >= 50) {
        return "simplified_text has 50 or more tokens";
    }
    return {};
}

std::string validate_plan_structure(const DecompositionPlan& p) {
    if (p.steps.empty()) return "steps is empty";
    for (std::size_t i = 0; i < p.steps.size(); ++i) {
        const auto& step = p.steps[i];
        if (step.index != static_cast<int>(i) + 1) return "non-contiguous indices";
        if (text::trim(step.sub_question).empty()) return "empty sub_question";
        if (text::trim(step.sub_query).empty()) return "empty sub_query";
        if (text::token_count(step.sub_query) > text::token_count(step.sub_question)) {
            return "sub_query longer than sub_question";
        }
    }
    return {};
}

std::string validate_context(const ContextBundle& c) {
    if (c.snippets.size() > 10) return "more than 10 snippets";
    if (c.wiki_token_count > 300) return "wiki_token_count over 300";
    int total = 0;
    for (const auto& s : c.wiki_sentences) total += text::token_count(s);
    if (total != c.wiki_token_count) return "wiki_token_count does not match wiki_sentences";
    return {};
}

std::string validate_result(const QuestionResult& r) {
    if (r.question_id.empty()) return "question_id is empty";
    for (std::size_t i = 0; i < r.hops.size(); ++i) {
        if (r.hops[i].index != static_cast<int>(i) + 1) return "hops: non-contiguous indices";
        std::string ctx_err = validate_context(r.hops[i].context);
        if (!ctx_err.empty()) return "hops[" + std::to_string(i) + "].context: " + ctx_err;
    }
    if (r.status == ResultStatus::Answered) {
        if (r.hops.empty()) return "answered result with no hops";
        const HopRecord& last = r.hops.back();
        if (r.final_short != last.normalized_short) {
            return "final_short does not equal the last hop's normalized_short";
        }
        if (r.final_long != last.raw_answer.long_answer) {
            return "final_long does not equal the last hop's long answer";
        }
    }
    return {};
}

}  // namespace medhop
