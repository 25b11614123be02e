#include "medhop/config.hpp"

#include "medhop/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace medhop {

using nlohmann::json;

namespace {

struct Reader {
    const json& doc;
    std::set<std::string> consumed;

    void string_field(const char* key, std::string& out) {
        if (!doc.contains(key)) return;
        consumed.insert(key);
        if (!doc[key].is_string()) {
            throw Error(ErrorKind::SchemaViolation,
                        std::string("config key ") + key + " must be a string");
        }
        out = doc[key].get<std::string>();
    }

    void int_field(const char* key, int& out, int lo, int hi) {
        if (!doc.contains(key)) return;
        consumed.insert(key);
        if (!doc[key].is_number_integer()) {
            throw Error(ErrorKind::SchemaViolation,
                        std::string("config key ") + key + " must be an integer");
        }
        const auto v = doc[key].get<std::int64_t>();
        if (v < lo || v > hi) {
            throw Error(ErrorKind::SchemaViolation,
                        std::string("config key ") + key + " must lie in [" +
                            std::to_string(lo) + ", " + std::to_string(hi) + "]");
        }
        out = static_cast<int>(v);
    }

    void int64_field(const char* key, std::int64_t& out, std::int64_t lo) {
        if (!doc.contains(key)) return;
        consumed.insert(key);
        if (!doc[key].is_number_integer()) {
            throw Error(ErrorKind::SchemaViolation,
                        std::string("config key ") + key + " must be an integer");
        }
        out = doc[key].get<std::int64_t>();
        if (out < lo) {
            throw Error(ErrorKind::SchemaViolation, std::string("config key ") + key +
                                                        " must be >= " + std::to_string(lo));
        }
    }

    void uint64_field(const char* key, std::uint64_t& out) {
        if (!doc.contains(key)) return;
        consumed.insert(key);
        if (!doc[key].is_number_unsigned() && !doc[key].is_number_integer()) {
            throw Error(ErrorKind::SchemaViolation,
                        std::string("config key ") + key + " must be a non-negative integer");
        }
        const auto v = doc[key].get<std::int64_t>();
        if (v < 0) {
            throw Error(ErrorKind::SchemaViolation,
                        std::string("config key ") + key + " must be non-negative");
        }
        out = static_cast<std::uint64_t>(v);
    }

    void double_field(const char* key, double& out, double lo, double hi) {
        if (!doc.contains(key)) return;
        consumed.insert(key);
        if (!doc[key].is_number()) {
            throw Error(ErrorKind::SchemaViolation,
                        std::string("config key ") + key + " must be a number");
        }
        out = doc[key].get<double>();
        if (out < lo || out > hi) {
            throw Error(ErrorKind::SchemaViolation,
                        std::string("config key ") + key + " is out of range");
        }
    }

    void bool_field(const char* key, bool& out) {
        if (!doc.contains(key)) return;
        consumed.insert(key);
        if (!doc[key].is_boolean()) {
            throw Error(ErrorKind::SchemaViolation,
                        std::string("config key ") + key + " must be a boolean");
        }
        out = doc[key].get<bool>();
    }
};

}  // namespace

Config config_from_json(const std::string& json_text, std::ostream* warnings) {
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw Error(ErrorKind::MalformedRecord, "config is not a JSON object");
    }

    Config cfg;
    Reader r{doc, {}};

    std::string mode_text = to_string(cfg.mode);
    r.string_field("mode", mode_text);
    auto mode = backends::mode_from_string(mode_text);
    if (!mode) {
        throw Error(ErrorKind::SchemaViolation,
                    "config mode must be live, record, or replay; got " + mode_text);
    }
    cfg.mode = *mode;

    r.string_field("decompose_model_id", cfg.decompose_model_id);
    r.string_field("answer_model_id", cfg.answer_model_id);
    r.double_field("temperature", cfg.temperature, 0.0, 2.0);

    r.int_field("search_limit", cfg.search_limit, 1, 10);
    r.int_field("wiki_token_budget", cfg.wiki_token_budget, 1, 1000000);
    r.int_field("max_hops", cfg.max_hops, 1, 64);
    r.int_field("max_articles", cfg.max_articles, 0, 64);
    r.int_field("max_sentences", cfg.max_sentences, 0, 1000000);
    r.double_field("classifier_threshold", cfg.classifier_threshold, 1e-9, 1.0 - 1e-9);
    r.int_field("reprocess_rounds", cfg.reprocess_rounds, 0, 16);
    r.int_field("workers", cfg.workers, 1, 256);
    r.int_field("prompt_char_budget", cfg.prompt_char_budget, 1, 10000000);
    r.int_field("embedding_dim", cfg.embedding_dim, 1, 65536);
    r.bool_field("wiki_title_guard", cfg.wiki_title_guard);
    r.int_field("rate_limit_ms", cfg.rate_limit_ms, 0, 600000);
    r.uint64_field("seed", cfg.seed);

    r.string_field("template_dir", cfg.template_dir);
    r.string_field("transcript_path", cfg.transcript_path);
    r.string_field("cache_dir", cfg.cache_dir);
    r.int64_field("cache_ttl_seconds", cfg.cache_ttl_seconds, 0);
    r.string_field("classifier_model_path", cfg.classifier_model_path);

    r.string_field("llm_base_url", cfg.llm_base_url);
    r.string_field("search_base_url", cfg.search_base_url);
    r.string_field("wiki_base_url", cfg.wiki_base_url);
    r.string_field("llm_api_key_env", cfg.llm_api_key_env);
    r.string_field("search_api_key_env", cfg.search_api_key_env);
    r.string_field("search_cx_env", cfg.search_cx_env);

    if (warnings) {
        for (const auto& [key, value] : doc.items()) {
            (void)value;
            if (!r.consumed.count(key)) {
                *warnings << "config key \"" << key << "\" is not recognized and was ignored\n";
            }
        }
    }
    return cfg;
}

Config load_config(const std::filesystem::path& path, std::ostream* warnings) {
    std::ifstream in(path);
    if (!in.is_open()) {
        throw Error(ErrorKind::IoFailure, "cannot read config file " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return config_from_json(buf.str(), warnings);
}

}  // namespace medhop
