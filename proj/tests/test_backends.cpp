#include "medhop/backends.hpp"

#include "medhop/errors.hpp"
#include "support/checks.hpp"
#include "support/scripted_transport.hpp"
#include "support/temp_dir.hpp"

#include <doctest.h>

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <fstream>
#include <memory>
#include <thread>
#include <vector>

using namespace medhop;
using namespace medhop::backends;
using medhop::testing::contains;
using medhop::testing::expect_error;
using medhop::testing::ScriptedTransport;
using medhop::testing::TempDir;

namespace {

BackendRequest llm_req(const std::string& user_text, const std::string& model = "m1") {
    LlmRequest r;
    r.model_id = model;
    r.system_text = "sys";
    r.user_text = user_text;
    return BackendRequest::make(Endpoint::LlmComplete, llm_payload(r), model);
}

BackendRequest search_req(const std::string& query, int limit = 5) {
    return BackendRequest::make(Endpoint::WebSearch, web_search_payload(query, limit));
}

}  // namespace

TEST_CASE("canonical JSON ignores key order and whitespace") {
    const std::string a = R"({"b": 1, "a": {"y": [1, 2], "x": "s"}})";
    const std::string b = "{\"a\":{\"x\":\"s\",\n  \"y\":[1,2]},\"b\":1}";
    CHECK(canonicalize_json(a) == canonicalize_json(b));
    CHECK(canonicalize_json("[3, 2, 1]") == "[3,2,1]");  // arrays keep order

    std::string msg = expect_error([] { canonicalize_json("{nope"); },
                                   ErrorKind::MalformedRecord);
    CHECK(contains(msg, "not valid JSON"));
}

TEST_CASE("request digests hash endpoint, model, and canonical payload") {
    // SHA-256 of the empty string, a fixed reference point.
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

    auto r1 = BackendRequest::make(Endpoint::WebSearch, R"({"query":"q","limit":3})");
    auto r2 = BackendRequest::make(Endpoint::WebSearch, R"({"limit": 3, "query": "q"})");
    CHECK(r1.digest() == r2.digest());  // logically equal payloads share a digest
    CHECK(r1.digest().size() == 64);

    auto other_payload = BackendRequest::make(Endpoint::WebSearch, R"({"query":"q","limit":4})");
    CHECK(other_payload.digest() != r1.digest());

    auto other_endpoint = BackendRequest::make(Endpoint::WikiSearch, R"({"query":"q","limit":3})");
    CHECK(other_endpoint.digest() != r1.digest());

    CHECK(llm_req("hello", "model-a").digest() != llm_req("hello", "model-b").digest());
}

TEST_CASE("transcripts record and replay per-digest queues in order") {
    TempDir dir;
    const auto path = dir.file("transcript.jsonl");
    const auto req = llm_req("what is HFE?");

    {
        TranscriptStore store(path);
        CHECK_FALSE(store.has(req.digest()));
        store.record_error(req, "BackendFailure", "socket reset");
        store.record(req, R"({"text":"round two answer"})");
        store.record(llm_req("other question"), R"({"text":"other"})");
        CHECK(store.size() == 3);
    }

    TranscriptStore reloaded(path);
    CHECK(reloaded.size() == 3);
    CHECK(reloaded.has(req.digest()));

    // first recorded outcome is the failure, second the success
    std::string msg = expect_error([&] { reloaded.replay(req); }, ErrorKind::BackendFailure);
    CHECK(msg == "socket reset");
    CHECK(reloaded.replay(req) == R"({"text":"round two answer"})");
    // the last entry is sticky for over-replayed digests
    CHECK(reloaded.replay(req) == R"({"text":"round two answer"})");
    CHECK(reloaded.replay(llm_req("other question")) == R"({"text":"other"})");

    expect_error([&] { reloaded.replay(llm_req("never recorded")); },
                 ErrorKind::TranscriptMiss);
}

TEST_CASE("recorded errors replay with their original kind") {
    TempDir dir;
    TranscriptStore store(dir.file("t.jsonl"));
    const auto req = search_req("quota test");
    store.record_error(req, "QuotaExceeded", "429 slow down");
    std::string msg = expect_error([&] { store.replay(req); }, ErrorKind::QuotaExceeded);
    CHECK(msg == "429 slow down");

    // a kind name nothing maps to degrades to a backend failure
    const auto req2 = search_req("unknown kind");
    store.record_error(req2, "SomethingNew", "mystery");
    expect_error([&] { store.replay(req2); }, ErrorKind::BackendFailure);
}

TEST_CASE("a broken transcript line is named by number") {
    TempDir dir;
    const auto good =
        R"({"key":"k1","endpoint":"llm_complete","payload":"{}","response":"ok"})";

    auto path1 = dir.write("bad_json.jsonl", good + std::string("\nnot json at all\n"));
    std::string msg = expect_error([&] { TranscriptStore s(path1); },
                                   ErrorKind::MalformedRecord);
    CHECK(contains(msg, "line 2"));

    auto path2 = dir.write("no_outcome.jsonl",
                           std::string("\n") + R"({"key":"k2","payload":"{}"})" + "\n");
    msg = expect_error([&] { TranscriptStore s(path2); }, ErrorKind::MalformedRecord);
    CHECK(contains(msg, "line 2"));  // the leading blank line still counts
    CHECK(contains(msg, "neither response nor error"));

    // blank lines alone are fine
    auto path3 = dir.write("blanks.jsonl", std::string("  \n\t\n") + good + "\n");
    TranscriptStore ok(path3);
    CHECK(ok.size() == 1);
}

TEST_CASE("the response cache round-trips through fan-out files") {
    TempDir dir;
    ResponseCache cache(dir.path() / "cache");
    const std::string key = sha256_hex("some request");

    CHECK_FALSE(cache.get(key).has_value());

    CacheEntry e;
    e.key = key;
    e.response = R"({"titles":["HFE"]})";
    e.created_at = 1700000000;
    cache.put(e);

    auto hit = cache.get(key);
    REQUIRE(hit.has_value());
    CHECK(hit->response == e.response);
    CHECK(hit->created_at == 1700000000);

    // two-level fan-out: dir/ab/cd/<key>.json
    const auto expected = dir.path() / "cache" / key.substr(0, 2) / key.substr(2, 2) /
                          (key + ".json");
    CHECK(std::filesystem::exists(expected));

    CHECK_FALSE(cache.get("abc").has_value());  // too short to fan out
    expect_error([&] { cache.put(CacheEntry{"abc", "x", 0}); }, ErrorKind::IoFailure);
}

TEST_CASE("cache entries expire by ttl and corrupt files read as misses") {
    TempDir dir;
    const std::string key = sha256_hex("expiring");
    const auto now = std::chrono::duration_cast<std::chrono::seconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();

    ResponseCache strict(dir.path() / "cache", 50);
    strict.put(CacheEntry{key, "fresh", now});
    CHECK(strict.get(key).has_value());
    strict.put(CacheEntry{key, "stale", now - 100});
    CHECK_FALSE(strict.get(key).has_value());

    ResponseCache forever(dir.path() / "cache", 0);
    CHECK(forever.get(key).has_value());  // ttl <= 0 never expires

    const auto file = dir.path() / "cache" / key.substr(0, 2) / key.substr(2, 2) /
                      (key + ".json");
    std::ofstream(file, std::ios::trunc) << "corrupt{{{";
    CHECK_FALSE(forever.get(key).has_value());
}

TEST_CASE("concurrent cache writers never publish a torn entry") {
    TempDir dir;
    ResponseCache cache(dir.path() / "cache");
    std::vector<std::string> keys;
    for (int i = 0; i < 8; ++i) keys.push_back(sha256_hex("key-" + std::to_string(i)));

    std::atomic<bool> failed{false};
    std::vector<std::thread> writers;
    for (int t = 0; t < 4; ++t) {
        writers.emplace_back([&, t] {
            try {
                for (int round = 0; round < 25; ++round) {
                    for (const auto& k : keys) {
                        cache.put(CacheEntry{k, "writer " + std::to_string(t), 1});
                    }
                }
            } catch (...) {
                failed = true;
            }
        });
    }
    for (auto& w : writers) w.join();
    CHECK_FALSE(failed.load());

    for (const auto& k : keys) {
        auto hit = cache.get(k);
        REQUIRE(hit.has_value());
        CHECK(contains(hit->response, "writer "));  // some complete write won
    }
}

TEST_CASE("the sentinel transport rejects every request loudly") {
    SentinelTransport sentinel;
    const auto req = search_req("anything");
    std::string msg = expect_error([&] { sentinel.send(req); }, ErrorKind::BackendFailure);
    CHECK(contains(msg, "replay mode"));
    CHECK(contains(msg, req.digest()));
}

TEST_CASE("live dispatch retries transient failures once with backoff") {
    auto transport = std::make_shared<ScriptedTransport>();
    auto& rule = transport->add(Endpoint::WebSearch, "", medhop::testing::search_response({}));
    rule.fail_times = 1;
    rule.fail_message = "flaky socket";

    Dispatcher d(Mode::Live, transport, nullptr, nullptr);
    std::vector<double> sleeps;
    d.set_sleeper([&](double s) { sleeps.push_back(s); });

    CHECK(d.dispatch(search_req("q")) == medhop::testing::search_response({}));
    CHECK(transport->total_calls() == 2);
    REQUIRE(sleeps.size() == 1);
    CHECK(sleeps[0] == doctest::Approx(1.0));
}

TEST_CASE("persistent failures exhaust the retry budget and surface") {
    auto transport = std::make_shared<ScriptedTransport>();
    auto& rule = transport->add(Endpoint::WebSearch, "", "never reached");
    rule.fail_times = 5;
    rule.fail_message = "still down";

    Dispatcher d(Mode::Live, transport, nullptr, nullptr);
    int sleep_count = 0;
    d.set_sleeper([&](double) { ++sleep_count; });

    std::string msg = expect_error([&] { d.dispatch(search_req("q")); },
                                   ErrorKind::BackendFailure);
    CHECK(msg == "still down");
    CHECK(transport->total_calls() == 2);  // retries = 1, so two attempts
    CHECK(sleep_count == 1);
}

TEST_CASE("quota errors retry; everything else fails fast") {
    auto transport = std::make_shared<ScriptedTransport>();
    auto& quota = transport->add(Endpoint::WikiSearch, "", medhop::testing::titles_response({"A"}));
    quota.fail_times = 1;
    quota.fail_kind = ErrorKind::QuotaExceeded;

    Dispatcher d(Mode::Live, transport, nullptr, nullptr);
    d.set_sleeper([](double) {});
    const auto req = BackendRequest::make(Endpoint::WikiSearch, wiki_search_payload("A"));
    CHECK(d.dispatch(req) == medhop::testing::titles_response({"A"}));
    CHECK(transport->total_calls() == 2);

    auto transport2 = std::make_shared<ScriptedTransport>();
    auto& fatal = transport2->add(Endpoint::WikiSearch, "", "unused");
    fatal.fail_times = 1;
    fatal.fail_kind = ErrorKind::MalformedRecord;
    fatal.fail_message = "not retryable";
    Dispatcher d2(Mode::Live, transport2, nullptr, nullptr);
    d2.set_sleeper([](double) { FAIL("no sleep expected for a non-retryable failure"); });
    expect_error([&] { d2.dispatch(req); }, ErrorKind::MalformedRecord);
    CHECK(transport2->total_calls() == 1);
}

TEST_CASE("record mode transcribes responses, failures, and cache hits") {
    TempDir dir;
    auto transport = std::make_shared<ScriptedTransport>();
    transport->add(Endpoint::WikiPage, "HFE", medhop::testing::page_response("HFE text"));
    auto& flaky = transport->add(Endpoint::LlmComplete, "",
                                 medhop::testing::llm_text_response("done"));
    flaky.fail_times = 2;  // outlives the single retry: round one records a failure
    flaky.fail_message = "provider down";

    auto transcript = std::make_shared<TranscriptStore>(dir.file("t.jsonl"));
    auto cache = std::make_shared<ResponseCache>(dir.path() / "cache");
    Dispatcher d(Mode::Record, transport, transcript, cache);
    d.set_sleeper([](double) {});

    const auto page = BackendRequest::make(Endpoint::WikiPage, wiki_page_payload("HFE"));
    CHECK(d.dispatch(page) == medhop::testing::page_response("HFE text"));
    CHECK(transcript->size() == 1);

    // second dispatch of the same page is served by the cache, not the
    // transport, yet still lands in the transcript
    CHECK(d.dispatch(page) == medhop::testing::page_response("HFE text"));
    CHECK(transport->calls_to(Endpoint::WikiPage) == 1);
    CHECK(transcript->size() == 2);

    // the llm call fails both attempts: the error is recorded, then a rerun
    // succeeds and records the recovery
    const auto ask = llm_req("flaky question");
    expect_error([&] { d.dispatch(ask); }, ErrorKind::BackendFailure);
    CHECK(d.dispatch(ask) == medhop::testing::llm_text_response("done"));
    CHECK(transcript->size() == 4);

    // a fresh replay-mode dispatcher reproduces the exact sequence offline
    auto replay_store = std::make_shared<TranscriptStore>(dir.file("t.jsonl"));
    auto sentinel = std::make_shared<ScriptedTransport>();
    Dispatcher r(Mode::Replay, sentinel, replay_store, nullptr);
    CHECK(r.dispatch(page) == medhop::testing::page_response("HFE text"));
    std::string msg = expect_error([&] { r.dispatch(ask); }, ErrorKind::BackendFailure);
    CHECK(msg == "provider down");
    CHECK(r.dispatch(ask) == medhop::testing::llm_text_response("done"));
    CHECK(sentinel->total_calls() == 0);  // replay never touches the transport
}

TEST_CASE("llm completions are never disk-cached") {
    TempDir dir;
    auto transport = std::make_shared<ScriptedTransport>();
    transport->add(Endpoint::LlmComplete, "", medhop::testing::llm_text_response("hi"));

    auto cache = std::make_shared<ResponseCache>(dir.path() / "cache");
    Dispatcher d(Mode::Live, transport, nullptr, cache);
    d.set_sleeper([](double) {});

    const auto ask = llm_req("hello");
    CHECK(d.dispatch(ask) == medhop::testing::llm_text_response("hi"));
    CHECK(d.dispatch(ask) == medhop::testing::llm_text_response("hi"));
    CHECK(transport->total_calls() == 2);  // no cache short-circuit
    CHECK_FALSE(cache->get(ask.digest()).has_value());
    CHECK_FALSE(std::filesystem::exists(dir.path() / "cache"));
}

TEST_CASE("replay mode without a transcript is a hard error") {
    Dispatcher d(Mode::Replay, std::make_shared<SentinelTransport>(), nullptr, nullptr);
    std::string msg = expect_error([&] { d.dispatch(search_req("q")); },
                                   ErrorKind::TranscriptMiss);
    CHECK(contains(msg, "without a transcript"));
}

TEST_CASE("typed clients parse the abstract response shapes") {
    auto transport = std::make_shared<ScriptedTransport>();
    transport->add(Endpoint::LlmComplete, "say hi", medhop::testing::llm_text_response("hi"));
    transport->add(Endpoint::WebSearch, "genes",
                   medhop::testing::search_response({{"HFE", "https://en.wikipedia.org/wiki/HFE", "iron"},
                                                     {"CFTR", "https://en.wikipedia.org/wiki/CFTR", "cl"},
                                                     {"TP53", "https://en.wikipedia.org/wiki/TP53", "p53"}}));
    transport->add(Endpoint::WikiSearch, "iron", R"({"titles":["Iron", 7, "Iron overload"]})");
    transport->add(Endpoint::WikiPage, "Iron", medhop::testing::page_response("Iron is Fe."));

    auto d = std::make_shared<Dispatcher>(Mode::Live, transport, nullptr, nullptr);
    d->set_sleeper([](double) {});

    LlmRequest ask;
    ask.model_id = "m";
    ask.user_text = "say hi";
    CHECK(make_llm_backend(d)->complete(ask) == "hi");

    auto results = make_search_backend(d)->search("genes", 2);
    REQUIRE(results.size() == 2);  // limit truncates the provider's list
    CHECK(results[0].title == "HFE");
    CHECK(results[1].snippet == "cl");

    auto titles = make_wiki_client(d)->search_titles("iron");
    REQUIRE(titles.size() == 2);  // the non-string entry is dropped
    CHECK(titles[0] == "Iron");
    CHECK(titles[1] == "Iron overload");

    CHECK(make_wiki_client(d)->page_text("Iron") == "Iron is Fe.");
}

TEST_CASE("typed clients reject malformed abstract responses") {
    auto transport = std::make_shared<ScriptedTransport>();
    transport->add(Endpoint::LlmComplete, "", R"({"wrong":"shape"})");
    transport->add(Endpoint::WebSearch, "notjson", "plain text");
    transport->add(Endpoint::WebSearch, "", R"({"results":"not an array"})");
    transport->add(Endpoint::WikiSearch, "", R"({})");
    transport->add(Endpoint::WikiPage, "", R"({"text":17})");

    auto d = std::make_shared<Dispatcher>(Mode::Live, transport, nullptr, nullptr);
    d->set_sleeper([](double) {});

    LlmRequest ask;
    ask.model_id = "m";
    std::string msg = expect_error([&] { make_llm_backend(d)->complete(ask); },
                                   ErrorKind::BackendFailure);
    CHECK(contains(msg, "missing text"));

    msg = expect_error([&] { make_search_backend(d)->search("notjson", 3); },
                       ErrorKind::BackendFailure);
    CHECK(contains(msg, "malformed web_search response"));

    expect_error([&] { make_search_backend(d)->search("other", 3); },
                 ErrorKind::BackendFailure);
    expect_error([&] { make_wiki_client(d)->search_titles("x"); }, ErrorKind::BackendFailure);
    expect_error([&] { make_wiki_client(d)->page_text("x"); }, ErrorKind::BackendFailure);
}

TEST_CASE("absolute URLs need a scheme, separator, and host") {
    CHECK(is_absolute_url("https://en.wikipedia.org/wiki/HFE"));
    CHECK(is_absolute_url("http://a.b"));
    CHECK(is_absolute_url("ftp://files.example.org"));
    CHECK_FALSE(is_absolute_url(""));
    CHECK_FALSE(is_absolute_url("wiki/HFE"));
    CHECK_FALSE(is_absolute_url("://missing-scheme.org"));
    CHECK_FALSE(is_absolute_url("https://"));
    CHECK_FALSE(is_absolute_url("1ttp://digit-scheme.org"));
}
