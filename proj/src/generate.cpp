#include "medhop/generate.hpp"

#include "medhop/decompose.hpp"
#include "medhop/errors.hpp"
#include "medhop/normalize.hpp"
#include "medhop/retrieve.hpp"
#include "medhop/text.hpp"

#include <nlohmann/json.hpp>

namespace medhop::generate {

using nlohmann::json;

std::string serialize_context(const ContextBundle& context) {
    if (context.empty()) return "(none)";
    std::string out;
    int item = 0;
    auto add = [&out, &item](const std::string& s) {
        if (item) out += '\n';
        out += std::to_string(++item);
        out += ". ";
        out += s;
    };
    for (const std::string& s : context.snippets) add(s);
    for (const std::string& s : context.wiki_sentences) add(s);
    return out;
}

prompt::RenderedPrompt render_answer_prompt(const AnswerRequest& request,
                                            const prompt::PromptTemplate& tpl) {
    const std::map<std::string, std::string> bindings{
        {"sub_question", request.sub_question},
        {"sub_query", request.sub_query},
        {"anchor", request.anchor},
        {"context", serialize_context(request.context)}};
    return prompt::render(tpl, bindings);
}

namespace {

AnswerPair parse_answer(const std::string& response) {
    json doc = json::parse(decompose::strip_code_fence(response), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw Error(ErrorKind::MalformedAnswer, "response is not a JSON object");
    }
    if (doc.size() != 2 || !doc.contains("long_answer") || !doc.contains("short_answer")) {
        throw Error(ErrorKind::MalformedAnswer,
                    "response must hold exactly long_answer and short_answer");
    }
    if (!doc["long_answer"].is_string() || !doc["short_answer"].is_string()) {
        throw Error(ErrorKind::MalformedAnswer, "answer fields must be strings");
    }
    AnswerPair pair;
    pair.long_answer = doc["long_answer"].get<std::string>();
    pair.short_answer = doc["short_answer"].get<std::string>();
    if (text::trim(pair.long_answer).empty() || text::trim(pair.short_answer).empty()) {
        throw Error(ErrorKind::MalformedAnswer, "answer fields must be non-empty");
    }
    return pair;
}

}  // namespace

AnswerPair generate_answer(backends::LlmBackend& llm, const prompt::RenderedPrompt& rendered,
                           const std::string& model_id, double temperature) {
    backends::LlmRequest req;
    req.model_id = model_id;
    req.system_text = rendered.system_text;
    req.user_text = rendered.user_text;
    req.temperature = temperature;
    req.response_hint = "json";

    try {
        return parse_answer(llm.complete(req));
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::MalformedAnswer) throw;
        req.user_text = rendered.user_text +
                        "\n\nYour previous response was rejected: " + e.what() +
                        ". Respond with only a JSON object holding exactly the string fields "
                        "\"long_answer\" and \"short_answer\".";
        return parse_answer(llm.complete(req));
    }
}

HopRecord run_hop(const HopDeps& deps, const DecompositionStep& step,
                  const std::string& anchor_in) {
    try {
        const std::string query = retrieve::build_search_query(step.sub_query, anchor_in);
        const std::vector<backends::SearchResult> results =
            retrieve::search(deps.search, query, deps.search_limit);

        std::vector<std::string> snippets;
        for (const auto& r : results) {
            if (!text::trim(r.snippet).empty()) snippets.push_back(r.snippet);
        }

        const std::vector<std::string> articles =
            retrieve::fetch_wikipedia(deps.wiki, results, query, deps.max_articles, deps.log);
        std::vector<std::string> sentences;
        for (const std::string& article : articles) {
            for (std::string& s : text::split_sentences(article)) {
                sentences.push_back(std::move(s));
            }
        }

        const std::vector<retrieve::RankedSentence> ranked =
            retrieve::rank_sentences_tfidf(sentences, query);
        const std::vector<std::string> selected = retrieve::select_top_sentences(
            ranked, deps.wiki_token_budget, deps.max_sentences);

        HopRecord hop;
        hop.index = step.index;
        hop.sub_question = step.sub_question;
        hop.sub_query = step.sub_query;
        hop.anchor_in = anchor_in;
        hop.context = retrieve::assemble_context(snippets, selected, deps.wiki_token_budget);

        AnswerRequest request{step.sub_question, step.sub_query, anchor_in, hop.context};
        prompt::RenderedPrompt rendered =
            render_answer_prompt(request, deps.prompts.answer());
        if (rendered.size() > deps.prompt_char_budget) {
            throw Error(ErrorKind::PromptBudgetExceeded,
                        "rendered prompt is " + std::to_string(rendered.size()) +
                            " chars, budget " + std::to_string(deps.prompt_char_budget));
        }

        hop.raw_answer =
            generate_answer(deps.llm, rendered, deps.answer_model_id, deps.temperature);
        hop.normalized_short = normalize::normalize(
            deps.wiki, hop.raw_answer.short_answer,
            normalize::derive_kind_hint(step.sub_question), deps.wiki_title_guard, deps.log);
        return hop;
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::QuotaExceeded) throw;  // batch-level deferral signal
        throw Error(ErrorKind::HopError,
                    std::string("hop ") + std::to_string(step.index) + " failed (" +
                        error_kind_name(e.kind()) + "): " + e.what(),
                    step.index);
    }
}

}  // namespace medhop::generate
