#pragma once

#include "medhop/backends.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace medhop {

// One JSON document configures a run; every field has a usable default so an
// empty config is valid. Unknown keys warn rather than fail, keeping configs
// forward-compatible.
struct Config {
    backends::Mode mode = backends::Mode::Replay;  // offline by default

    std::string decompose_model_id = "gpt-4o-mini";
    std::string answer_model_id = "o3-mini";
    double temperature = 0.0;

    int search_limit = 10;
    int wiki_token_budget = 300;
    int max_hops = 4;
    int max_articles = 3;
    int max_sentences = 0;  // 0: budget-only selection
    double classifier_threshold = 0.5;
    int reprocess_rounds = 1;
    int workers = 4;
    int prompt_char_budget = 16000;
    int embedding_dim = 256;
    bool wiki_title_guard = true;
    int rate_limit_ms = 0;  // minimum spacing between live calls per provider
    std::uint64_t seed = 0;

    std::string template_dir = "prompts";
    std::string transcript_path = "transcript.jsonl";
    std::string cache_dir;  // empty: no response cache
    std::int64_t cache_ttl_seconds = 0;
    std::string classifier_model_path = "classifier_model.json";

    std::string llm_base_url = "https://api.openai.com";
    std::string search_base_url = "https://www.googleapis.com";
    std::string wiki_base_url = "https://en.wikipedia.org";
    std::string llm_api_key_env = "MEDHOP_LLM_API_KEY";
    std::string search_api_key_env = "MEDHOP_SEARCH_API_KEY";
    std::string search_cx_env = "MEDHOP_SEARCH_CX";
};

// Parses the JSON text over the defaults. Unknown keys are reported to
// `warnings` (one line each). Throws Error{MalformedRecord} on non-JSON
// input and Error{SchemaViolation} on wrong types or out-of-range values.
Config config_from_json(const std::string& json_text, std::ostream* warnings = nullptr);

// Loads and parses the file. Throws Error{IoFailure} when unreadable.
Config load_config(const std::filesystem::path& path, std::ostream* warnings = nullptr);

}  // namespace medhop
