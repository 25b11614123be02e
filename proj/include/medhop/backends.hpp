#pragma once

#include "medhop/types.hpp"

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace medhop::backends {

// ---------------------------------------------------------------------------
// Requests, digests, canonical JSON
// ---------------------------------------------------------------------------

enum class Endpoint { LlmComplete, WebSearch, WikiSearch, WikiPage };

const char* to_string(Endpoint e);
std::optional<Endpoint> endpoint_from_string(std::string_view s);

// Parses `text` and re-emits it with sorted keys and no insignificant
// whitespace, so logically equal payloads digest identically.
// Throws Error{MalformedRecord} when text is not JSON.
std::string canonicalize_json(const std::string& text);

std::string sha256_hex(std::string_view data);

// Payload is always canonical JSON. Credentials never appear in payloads;
// they live in transport-level headers only, so transcripts and cache files
// are safe to commit.
struct BackendRequest {
    Endpoint endpoint = Endpoint::LlmComplete;
    std::string payload;   // canonical JSON text
    std::string model_id;  // only meaningful for LlmComplete

    static BackendRequest make(Endpoint endpoint, const std::string& payload_json,
                               std::string model_id = {});

    // Pure function of endpoint, model_id, and canonical payload.
    std::string digest() const;
};

// ---------------------------------------------------------------------------
// Transcript: JSONL of {key, endpoint, payload, response} (or "error")
// ---------------------------------------------------------------------------

// Replay keeps one queue per digest, consumed in file order: the same request
// issued twice can observe two different recorded outcomes (a transient
// failure, then a success), which is how batch reprocess rounds are tested
// offline. An entry with an "error" field replays as a thrown failure.
class TranscriptStore {
public:
    // Loads existing entries if the file exists; `path` may not exist yet.
    explicit TranscriptStore(std::filesystem::path path);

    // Replay read: pops the next recorded outcome for this digest (the last
    // entry is sticky so re-runs of a single question stay serviceable).
    // Throws Error{TranscriptMiss} when the digest was never recorded, and
    // the recorded error when the entry holds one.
    std::string replay(const BackendRequest& req);

    bool has(const std::string& digest) const;

    // Record writes: append one entry and flush. Serialized by a mutex; one
    // entry is one line, written with a single stream insert.
    void record(const BackendRequest& req, const std::string& response);
    void record_error(const BackendRequest& req, const std::string& error_kind,
                      const std::string& message);

    std::size_t size() const;

private:
    struct Entry {
        std::string response;
        bool is_error = false;
        std::string error_kind;
    };

    void load();
    void append_line(const std::string& line);

    std::filesystem::path path_;
    std::map<std::string, std::deque<Entry>> entries_;
    std::map<std::string, std::size_t> cursor_;
    mutable std::mutex mu_;
};

// ---------------------------------------------------------------------------
// Response cache: content-addressed files, two-level fan-out, atomic writes
// ---------------------------------------------------------------------------

struct CacheEntry {
    std::string key;       // request digest
    std::string response;  // raw response text
    std::int64_t created_at = 0;  // unix seconds
};

class ResponseCache {
public:
    // ttl_seconds <= 0 means entries never expire.
    ResponseCache(std::filesystem::path dir, std::int64_t ttl_seconds = 0);

    std::optional<CacheEntry> get(const std::string& key) const;

    // Atomic: write to a temp file in the same directory, then rename.
    void put(const CacheEntry& entry);

private:
    std::filesystem::path file_for(const std::string& key) const;

    std::filesystem::path dir_;
    std::int64_t ttl_seconds_;
};

// ---------------------------------------------------------------------------
// Transport + dispatcher
// ---------------------------------------------------------------------------

// A transport resolves one abstract request against a concrete provider and
// returns the abstract response JSON:
//   LlmComplete -> {"text": ...}
//   WebSearch   -> {"results": [{"title","link","snippet"}...]}
//   WikiSearch  -> {"titles": [...]}
//   WikiPage    -> {"text": ...}
// Implementations throw Error{BackendFailure} or Error{QuotaExceeded}.
class Transport {
public:
    virtual ~Transport() = default;
    virtual std::string send(const BackendRequest& req) = 0;
};

// Fails loudly on any call. Installed as the transport in replay mode so the
// zero-network guarantee is structural, not behavioral.
class SentinelTransport : public Transport {
public:
    std::string send(const BackendRequest& req) override;
};

enum class Mode { Live, Record, Replay };

const char* to_string(Mode m);
std::optional<Mode> mode_from_string(std::string_view s);

struct RetryPolicy {
    int retries = 1;             // attempts = retries + 1
    double base_seconds = 1.0;   // sleep before retry n is base * factor^(n-1)
    double factor = 4.0;
};

// Routes requests according to mode:
//   Live:   cache (for cacheable endpoints) -> transport with retry
//   Record: like Live, and every fresh response is appended to the transcript
//   Replay: transcript only; the transport is never touched
// LLM completions are not disk-cached: transcripts already pin them, and the
// cache is meant for idempotent lookups (search and wiki endpoints).
class Dispatcher {
public:
    Dispatcher(Mode mode, std::shared_ptr<Transport> transport,
               std::shared_ptr<TranscriptStore> transcript,
               std::shared_ptr<ResponseCache> cache, RetryPolicy retry = {});

    std::string dispatch(const BackendRequest& req);

    Mode mode() const { return mode_; }

    // Test seam: replaces the real sleep between retry attempts.
    void set_sleeper(std::function<void(double)> sleeper);

private:
    bool cacheable(Endpoint e) const;
    std::string call_with_retry(const BackendRequest& req);

    Mode mode_;
    std::shared_ptr<Transport> transport_;
    std::shared_ptr<TranscriptStore> transcript_;
    std::shared_ptr<ResponseCache> cache_;
    RetryPolicy retry_;
    std::function<void(double)> sleeper_;
};

// ---------------------------------------------------------------------------
// Typed backend interfaces used by the pipeline stages
// ---------------------------------------------------------------------------

struct LlmRequest {
    std::string model_id;
    std::string system_text;
    std::string user_text;
    double temperature = 0.0;
    std::string response_hint;  // e.g. "json"; empty for free text
};

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual std::string complete(const LlmRequest& req) = 0;
};

struct SearchResult {
    std::string title;
    std::string link;     // absolute URL
    std::string snippet;  // may be empty
};

// True when the URL has a scheme, "://", and a non-empty host.
bool is_absolute_url(const std::string& url);

class SearchBackend {
public:
    virtual ~SearchBackend() = default;
    virtual std::vector<SearchResult> search(const std::string& query, int limit) = 0;
};

class WikiClient {
public:
    virtual ~WikiClient() = default;
    // Ranked page titles for a search term; empty when nothing matches.
    virtual std::vector<std::string> search_titles(const std::string& term) = 0;
    // Plain text of a page.
    virtual std::string page_text(const std::string& title) = 0;
};

// Dispatcher-backed implementations of the three interfaces. These build the
// canonical payloads, so live, record, and replay runs all share digests.
std::shared_ptr<LlmBackend> make_llm_backend(std::shared_ptr<Dispatcher> d);
std::shared_ptr<SearchBackend> make_search_backend(std::shared_ptr<Dispatcher> d);
std::shared_ptr<WikiClient> make_wiki_client(std::shared_ptr<Dispatcher> d);

// Canonical payload builders (exposed for tests and fixture tooling).
std::string llm_payload(const LlmRequest& req);
std::string web_search_payload(const std::string& query, int limit);
std::string wiki_search_payload(const std::string& term);
std::string wiki_page_payload(const std::string& title);

}  // namespace medhop::backends
