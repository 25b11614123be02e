#include "medhop/trace.hpp"

#include "medhop/errors.hpp"

#include <json.hpp>

namespace medhop::trace {

using nlohmann::json;

namespace {

json context_to_json(const ContextBundle& c) {
    return json{{"snippets", c.snippets},
                {"wiki_sentences", c.wiki_sentences},
                {"wiki_token_count", c.wiki_token_count}};
}

json hop_to_json(const HopRecord& h) {
    return json{{"index", h.index},
                {"sub_question", h.sub_question},
                {"sub_query", h.sub_query},
                {"anchor_in", h.anchor_in},
                {"context", context_to_json(h.context)},
                {"raw_answer", json{{"short", h.raw_answer.short_answer},
                                    {"long", h.raw_answer.long_answer}}},
                {"normalized_short", h.normalized_short}};
}

[[noreturn]] void schema_error(const std::string& field, const std::string& why) {
    throw Error(ErrorKind::SchemaViolation, "field '" + field + "': " + why);
}

const json& require(const json& obj, const std::string& field, const char* context) {
    auto it = obj.find(field);
    if (it == obj.end()) schema_error(std::string(context) + field, "missing");
    return *it;
}

std::string require_string(const json& obj, const std::string& field, const char* context) {
    const json& v = require(obj, field, context);
    if (!v.is_string()) schema_error(std::string(context) + field, "not a string");
    return v.get<std::string>();
}

int require_int(const json& obj, const std::string& field, const char* context) {
    const json& v = require(obj, field, context);
    if (!v.is_number_integer()) schema_error(std::string(context) + field, "not an integer");
    return v.get<int>();
}

std::vector<std::string> require_string_array(const json& obj, const std::string& field,
                                              const char* context) {
    const json& v = require(obj, field, context);
    if (!v.is_array()) schema_error(std::string(context) + field, "not an array");
    std::vector<std::string> out;
    out.reserve(v.size());
    for (const auto& item : v) {
        if (!item.is_string()) schema_error(std::string(context) + field, "array item not a string");
        out.push_back(item.get<std::string>());
    }
    return out;
}

ContextBundle context_from_json(const json& obj, const char* context) {
    if (!obj.is_object()) schema_error(std::string(context) + "context", "not an object");
    ContextBundle c;
    c.snippets = require_string_array(obj, "snippets", context);
    c.wiki_sentences = require_string_array(obj, "wiki_sentences", context);
    c.wiki_token_count = require_int(obj, "wiki_token_count", context);
    return c;
}

HopRecord hop_from_json(const json& obj, const char* context) {
    if (!obj.is_object()) schema_error(std::string(context), "hop is not an object");
    HopRecord h;
    h.index = require_int(obj, "index", context);
    h.sub_question = require_string(obj, "sub_question", context);
    h.sub_query = require_string(obj, "sub_query", context);
    h.anchor_in = require_string(obj, "anchor_in", context);
    h.context = context_from_json(require(obj, "context", context), context);
    const json& raw = require(obj, "raw_answer", context);
    if (!raw.is_object()) schema_error(std::string(context) + "raw_answer", "not an object");
    h.raw_answer.short_answer = require_string(raw, "short", context);
    h.raw_answer.long_answer = require_string(raw, "long", context);
    h.normalized_short = require_string(obj, "normalized_short", context);
    return h;
}

}  // namespace

std::string serialize_result(const QuestionResult& r) {
    json hops = json::array();
    for (const auto& h : r.hops) hops.push_back(hop_to_json(h));
    json obj{{"question_id", r.question_id},
             {"kind", to_string(r.kind)},
             {"hops", std::move(hops)},
             {"final_short", r.final_short},
             {"final_long", r.final_long},
             {"status", to_string(r.status)}};
    if (r.failure_reason) obj["failure_reason"] = *r.failure_reason;
    return obj.dump();
}

QuestionResult deserialize_result(const std::string& record) {
    json obj = json::parse(record, nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded() || !obj.is_object()) {
        throw Error(ErrorKind::MalformedRecord, "record is not a JSON object");
    }

    QuestionResult r;
    r.question_id = require_string(obj, "question_id", "");

    std::string kind = require_string(obj, "kind", "");
    auto k = question_kind_from_string(kind);
    if (!k) schema_error("kind", "unknown value '" + kind + "'");
    r.kind = *k;

    const json& hops = require(obj, "hops", "");
    if (!hops.is_array()) schema_error("hops", "not an array");
    for (const auto& h : hops) r.hops.push_back(hop_from_json(h, "hops."));

    r.final_short = require_string(obj, "final_short", "");
    r.final_long = require_string(obj, "final_long", "");

    std::string status = require_string(obj, "status", "");
    auto st = result_status_from_string(status);
    if (!st) schema_error("status", "unknown value '" + status + "'");
    r.status = *st;

    if (auto it = obj.find("failure_reason"); it != obj.end() && !it->is_null()) {
        if (!it->is_string()) schema_error("failure_reason", "not a string");
        r.failure_reason = it->get<std::string>();
    }

    std::string err = validate_result(r);
    if (!err.empty()) throw Error(ErrorKind::SchemaViolation, err);
    return r;
}

}  // namespace medhop::trace
