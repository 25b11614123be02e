#include "medhop/backends.hpp"

#include "medhop/errors.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <atomic>
#include <cctype>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

namespace medhop::backends {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Endpoints, canonical JSON, digests
// ---------------------------------------------------------------------------

const char* to_string(Endpoint e) {
    switch (e) {
        case Endpoint::LlmComplete: return "llm_complete";
        case Endpoint::WebSearch: return "web_search";
        case Endpoint::WikiSearch: return "wiki_search";
        case Endpoint::WikiPage: return "wiki_page";
    }
    return "unknown";
}

std::optional<Endpoint> endpoint_from_string(std::string_view s) {
    if (s == "llm_complete") return Endpoint::LlmComplete;
    if (s == "web_search") return Endpoint::WebSearch;
    if (s == "wiki_search") return Endpoint::WikiSearch;
    if (s == "wiki_page") return Endpoint::WikiPage;
    return std::nullopt;
}

std::string canonicalize_json(const std::string& text) {
    json parsed = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded()) {
        throw Error(ErrorKind::MalformedRecord, "payload is not valid JSON");
    }
    // json objects keep keys in sorted order, so dump() is canonical.
    return parsed.dump();
}

std::string sha256_hex(std::string_view data) {
    unsigned char out[EVP_MAX_MD_SIZE];
    unsigned int out_len = 0;
    if (EVP_Digest(data.data(), data.size(), out, &out_len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorKind::IoFailure, "sha256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string s;
    s.reserve(out_len * 2);
    for (unsigned int i = 0; i < out_len; ++i) {
        s.push_back(hex[out[i] >> 4]);
        s.push_back(hex[out[i] & 0xf]);
    }
    return s;
}

BackendRequest BackendRequest::make(Endpoint endpoint, const std::string& payload_json,
                                    std::string model_id) {
    BackendRequest r;
    r.endpoint = endpoint;
    r.payload = canonicalize_json(payload_json);
    r.model_id = std::move(model_id);
    return r;
}

std::string BackendRequest::digest() const {
    std::string material;
    material.reserve(payload.size() + model_id.size() + 24);
    material += to_string(endpoint);
    material += '|';
    material += model_id;
    material += '|';
    material += payload;
    return sha256_hex(material);
}

// ---------------------------------------------------------------------------
// TranscriptStore
// ---------------------------------------------------------------------------

TranscriptStore::TranscriptStore(std::filesystem::path path) : path_(std::move(path)) {
    load();
}

void TranscriptStore::load() {
    std::ifstream in(path_);
    if (!in.is_open()) return;  // nothing recorded yet
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object() || !rec.contains("key") ||
            !rec["key"].is_string()) {
            throw Error(ErrorKind::MalformedRecord,
                        "transcript line " + std::to_string(line_no) + " is not usable");
        }
        Entry e;
        if (rec.contains("error") && rec["error"].is_object()) {
            e.is_error = true;
            e.error_kind = rec["error"].value("kind", "BackendFailure");
            e.response = rec["error"].value("message", "recorded failure");
        } else if (rec.contains("response") && rec["response"].is_string()) {
            e.response = rec["response"].get<std::string>();
        } else {
            throw Error(ErrorKind::MalformedRecord,
                        "transcript line " + std::to_string(line_no) +
                            " has neither response nor error");
        }
        entries_[rec["key"].get<std::string>()].push_back(std::move(e));
    }
}

std::string TranscriptStore::replay(const BackendRequest& req) {
    const std::string key = req.digest();
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end() || it->second.empty()) {
        throw Error(ErrorKind::TranscriptMiss,
                    "no recorded response for request digest " + key);
    }
    std::size_t& pos = cursor_[key];
    // Entries replay in recorded order; the final one stays live so a request
    // repeated more often than it was recorded keeps resolving.
    const Entry& e = it->second[std::min(pos, it->second.size() - 1)];
    if (pos + 1 < it->second.size()) ++pos;
    if (e.is_error) {
        auto kind = error_kind_from_name(e.error_kind);
        throw Error(kind.value_or(ErrorKind::BackendFailure), e.response);
    }
    return e.response;
}

bool TranscriptStore::has(const std::string& digest) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(digest);
    return it != entries_.end() && !it->second.empty();
}

void TranscriptStore::record(const BackendRequest& req, const std::string& response) {
    const std::string key = req.digest();
    json rec;
    rec["key"] = key;
    rec["endpoint"] = to_string(req.endpoint);
    if (!req.model_id.empty()) rec["model_id"] = req.model_id;
    rec["payload"] = req.payload;
    rec["response"] = response;
    std::lock_guard<std::mutex> lock(mu_);
    Entry e;
    e.response = response;
    entries_[key].push_back(std::move(e));
    append_line(rec.dump());
}

void TranscriptStore::record_error(const BackendRequest& req, const std::string& error_kind,
                                   const std::string& message) {
    const std::string key = req.digest();
    json rec;
    rec["key"] = key;
    rec["endpoint"] = to_string(req.endpoint);
    if (!req.model_id.empty()) rec["model_id"] = req.model_id;
    rec["payload"] = req.payload;
    rec["error"] = {{"kind", error_kind}, {"message", message}};
    std::lock_guard<std::mutex> lock(mu_);
    Entry e;
    e.is_error = true;
    e.error_kind = error_kind;
    e.response = message;
    entries_[key].push_back(std::move(e));
    append_line(rec.dump());
}

void TranscriptStore::append_line(const std::string& line) {
    if (path_.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path_.parent_path(), ec);
    }
    std::ofstream out(path_, std::ios::app);
    if (!out.is_open()) {
        throw Error(ErrorKind::IoFailure, "cannot append to transcript " + path_.string());
    }
    out << line << '\n';
    out.flush();
    if (!out.good()) {
        throw Error(ErrorKind::IoFailure, "short write to transcript " + path_.string());
    }
}

std::size_t TranscriptStore::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::size_t n = 0;
    for (const auto& [k, q] : entries_) n += q.size();
    return n;
}

// ---------------------------------------------------------------------------
// ResponseCache
// ---------------------------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path dir, std::int64_t ttl_seconds)
    : dir_(std::move(dir)), ttl_seconds_(ttl_seconds) {}

std::filesystem::path ResponseCache::file_for(const std::string& key) const {
    // Two-level fan-out keeps directory listings small with many entries.
    return dir_ / key.substr(0, 2) / key.substr(2, 2) / (key + ".json");
}

std::optional<CacheEntry> ResponseCache::get(const std::string& key) const {
    if (key.size() < 4) return std::nullopt;
    std::ifstream in(file_for(key));
    if (!in.is_open()) return std::nullopt;
    std::stringstream buf;
    buf << in.rdbuf();
    json rec = json::parse(buf.str(), nullptr, false);
    if (rec.is_discarded() || !rec.is_object() || !rec.contains("response") ||
        !rec["response"].is_string()) {
        return std::nullopt;  // a corrupt entry is just a miss
    }
    CacheEntry e;
    e.key = rec.value("key", key);
    e.response = rec["response"].get<std::string>();
    e.created_at = rec.value("created_at", std::int64_t{0});
    if (ttl_seconds_ > 0) {
        auto now = std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
        if (now - e.created_at > ttl_seconds_) return std::nullopt;
    }
    return e;
}

void ResponseCache::put(const CacheEntry& entry) {
    if (entry.key.size() < 4) {
        throw Error(ErrorKind::IoFailure, "cache key too short: " + entry.key);
    }
    const auto target = file_for(entry.key);
    std::error_code ec;
    std::filesystem::create_directories(target.parent_path(), ec);
    if (ec) {
        throw Error(ErrorKind::IoFailure, "cannot create cache directory " +
                                              target.parent_path().string());
    }
    json rec;
    rec["key"] = entry.key;
    rec["response"] = entry.response;
    rec["created_at"] = entry.created_at;

    static std::atomic<std::uint64_t> counter{0};
    std::ostringstream tmp_name;
    tmp_name << "." << entry.key.substr(0, 8) << "." << std::this_thread::get_id() << "."
             << counter.fetch_add(1) << ".tmp";
    const auto tmp = target.parent_path() / tmp_name.str();
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out.is_open()) {
            throw Error(ErrorKind::IoFailure, "cannot write cache temp file " + tmp.string());
        }
        out << rec.dump() << '\n';
        out.flush();
        if (!out.good()) {
            throw Error(ErrorKind::IoFailure, "short write to cache temp " + tmp.string());
        }
    }
    // Rename within one directory is atomic, so readers see old or new bytes,
    // never a torn file; last writer wins on races.
    std::filesystem::rename(tmp, target, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorKind::IoFailure, "cannot publish cache entry " + target.string());
    }
}

// ---------------------------------------------------------------------------
// Transports and dispatcher
// ---------------------------------------------------------------------------

std::string SentinelTransport::send(const BackendRequest& req) {
    throw Error(ErrorKind::BackendFailure,
                std::string("network call attempted in replay mode: ") + to_string(req.endpoint) +
                    " digest " + req.digest());
}

const char* to_string(Mode m) {
    switch (m) {
        case Mode::Live: return "live";
        case Mode::Record: return "record";
        case Mode::Replay: return "replay";
    }
    return "unknown";
}

std::optional<Mode> mode_from_string(std::string_view s) {
    if (s == "live") return Mode::Live;
    if (s == "record") return Mode::Record;
    if (s == "replay") return Mode::Replay;
    return std::nullopt;
}

Dispatcher::Dispatcher(Mode mode, std::shared_ptr<Transport> transport,
                       std::shared_ptr<TranscriptStore> transcript,
                       std::shared_ptr<ResponseCache> cache, RetryPolicy retry)
    : mode_(mode),
      transport_(std::move(transport)),
      transcript_(std::move(transcript)),
      cache_(std::move(cache)),
      retry_(retry) {
    sleeper_ = [](double seconds) {
        std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
    };
}

void Dispatcher::set_sleeper(std::function<void(double)> sleeper) {
    sleeper_ = std::move(sleeper);
}

bool Dispatcher::cacheable(Endpoint e) const {
    // Completions are pinned by transcripts instead; the cache is for
    // idempotent lookups only.
    return e != Endpoint::LlmComplete;
}

std::string Dispatcher::call_with_retry(const BackendRequest& req) {
    int attempts = retry_.retries + 1;
    double sleep_s = retry_.base_seconds;
    for (int attempt = 1;; ++attempt) {
        try {
            return transport_->send(req);
        } catch (const Error& e) {
            bool retryable = e.kind() == ErrorKind::BackendFailure ||
                             e.kind() == ErrorKind::QuotaExceeded;
            if (!retryable || attempt >= attempts) throw;
            sleeper_(sleep_s);
            sleep_s *= retry_.factor;
        }
    }
}

std::string Dispatcher::dispatch(const BackendRequest& req) {
    if (mode_ == Mode::Replay) {
        if (!transcript_) {
            throw Error(ErrorKind::TranscriptMiss, "replay mode without a transcript");
        }
        // No cache, no retries: replay surfaces exactly what was recorded.
        return transcript_->replay(req);
    }

    const std::string key = req.digest();
    if (cache_ && cacheable(req.endpoint)) {
        if (auto hit = cache_->get(key)) {
            // A cache hit still lands in the transcript so a recorded session
            // replays complete.
            if (mode_ == Mode::Record && transcript_) transcript_->record(req, hit->response);
            return hit->response;
        }
    }

    std::string response;
    try {
        response = call_with_retry(req);
    } catch (const Error& e) {
        if (mode_ == Mode::Record && transcript_) {
            transcript_->record_error(req, error_kind_name(e.kind()), e.what());
        }
        throw;
    }

    if (cache_ && cacheable(req.endpoint)) {
        CacheEntry entry;
        entry.key = key;
        entry.response = response;
        entry.created_at = std::chrono::duration_cast<std::chrono::seconds>(
                               std::chrono::system_clock::now().time_since_epoch())
                               .count();
        cache_->put(entry);
    }
    if (mode_ == Mode::Record && transcript_) transcript_->record(req, response);
    return response;
}

// ---------------------------------------------------------------------------
// Typed clients over the dispatcher
// ---------------------------------------------------------------------------

std::string llm_payload(const LlmRequest& req) {
    json p;
    p["response_hint"] = req.response_hint;
    p["system_text"] = req.system_text;
    p["temperature"] = req.temperature;
    p["user_text"] = req.user_text;
    return p.dump();
}

std::string web_search_payload(const std::string& query, int limit) {
    json p;
    p["limit"] = limit;
    p["query"] = query;
    return p.dump();
}

std::string wiki_search_payload(const std::string& term) {
    json p;
    p["term"] = term;
    return p.dump();
}

std::string wiki_page_payload(const std::string& title) {
    json p;
    p["title"] = title;
    return p.dump();
}

bool is_absolute_url(const std::string& url) {
    auto pos = url.find("://");
    if (pos == std::string::npos || pos == 0) return false;
    if (!std::isalpha(static_cast<unsigned char>(url[0]))) return false;
    return pos + 3 < url.size();
}

namespace {

json parse_abstract_response(const std::string& text, Endpoint endpoint) {
    json rec = json::parse(text, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) {
        throw Error(ErrorKind::BackendFailure,
                    std::string("malformed ") + to_string(endpoint) + " response");
    }
    return rec;
}

class LlmBackendImpl : public LlmBackend {
public:
    explicit LlmBackendImpl(std::shared_ptr<Dispatcher> d) : d_(std::move(d)) {}

    std::string complete(const LlmRequest& req) override {
        auto r = BackendRequest::make(Endpoint::LlmComplete, llm_payload(req), req.model_id);
        json rec = parse_abstract_response(d_->dispatch(r), Endpoint::LlmComplete);
        if (!rec.contains("text") || !rec["text"].is_string()) {
            throw Error(ErrorKind::BackendFailure, "completion response missing text field");
        }
        return rec["text"].get<std::string>();
    }

private:
    std::shared_ptr<Dispatcher> d_;
};

class SearchBackendImpl : public SearchBackend {
public:
    explicit SearchBackendImpl(std::shared_ptr<Dispatcher> d) : d_(std::move(d)) {}

    std::vector<SearchResult> search(const std::string& query, int limit) override {
        auto r = BackendRequest::make(Endpoint::WebSearch, web_search_payload(query, limit));
        json rec = parse_abstract_response(d_->dispatch(r), Endpoint::WebSearch);
        if (!rec.contains("results") || !rec["results"].is_array()) {
            throw Error(ErrorKind::BackendFailure, "search response missing results array");
        }
        std::vector<SearchResult> out;
        for (const auto& item : rec["results"]) {
            if (!item.is_object()) continue;
            SearchResult sr;
            sr.title = item.value("title", "");
            sr.link = item.value("link", "");
            sr.snippet = item.value("snippet", "");
            out.push_back(std::move(sr));
            if (static_cast<int>(out.size()) >= limit) break;
        }
        return out;
    }

private:
    std::shared_ptr<Dispatcher> d_;
};

class WikiClientImpl : public WikiClient {
public:
    explicit WikiClientImpl(std::shared_ptr<Dispatcher> d) : d_(std::move(d)) {}

    std::vector<std::string> search_titles(const std::string& term) override {
        auto r = BackendRequest::make(Endpoint::WikiSearch, wiki_search_payload(term));
        json rec = parse_abstract_response(d_->dispatch(r), Endpoint::WikiSearch);
        if (!rec.contains("titles") || !rec["titles"].is_array()) {
            throw Error(ErrorKind::BackendFailure, "wiki search response missing titles array");
        }
        std::vector<std::string> out;
        for (const auto& t : rec["titles"]) {
            if (t.is_string()) out.push_back(t.get<std::string>());
        }
        return out;
    }

    std::string page_text(const std::string& title) override {
        auto r = BackendRequest::make(Endpoint::WikiPage, wiki_page_payload(title));
        json rec = parse_abstract_response(d_->dispatch(r), Endpoint::WikiPage);
        if (!rec.contains("text") || !rec["text"].is_string()) {
            throw Error(ErrorKind::BackendFailure, "wiki page response missing text field");
        }
        return rec["text"].get<std::string>();
    }

private:
    std::shared_ptr<Dispatcher> d_;
};

}  // namespace

std::shared_ptr<LlmBackend> make_llm_backend(std::shared_ptr<Dispatcher> d) {
    return std::make_shared<LlmBackendImpl>(std::move(d));
}

std::shared_ptr<SearchBackend> make_search_backend(std::shared_ptr<Dispatcher> d) {
    return std::make_shared<SearchBackendImpl>(std::move(d));
}

std::shared_ptr<WikiClient> make_wiki_client(std::shared_ptr<Dispatcher> d) {
    return std::make_shared<WikiClientImpl>(std::move(d));
}

}  // namespace medhop::backends
