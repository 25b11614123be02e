#include "medhop/pipeline.hpp"

#include "medhop/decompose.hpp"
#include "medhop/errors.hpp"
#include "medhop/generate.hpp"
#include "medhop/http_transport.hpp"
#include "medhop/text.hpp"
#include "medhop/trace.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

namespace medhop::pipeline {

using nlohmann::json;

namespace {

std::string env_or_empty(const std::string& name) {
    const char* v = name.empty() ? nullptr : std::getenv(name.c_str());
    return v ? v : "";
}

// Spaces out live calls per endpoint so batch parallelism cannot trample
// provider rate limits. Replay never sees this wrapper.
class RateLimitedTransport : public backends::Transport {
public:
    RateLimitedTransport(std::shared_ptr<backends::Transport> inner, int min_interval_ms)
        : inner_(std::move(inner)), interval_(std::chrono::milliseconds(min_interval_ms)) {}

    std::string send(const backends::BackendRequest& req) override {
        wait_turn(static_cast<std::size_t>(req.endpoint));
        return inner_->send(req);
    }

private:
    void wait_turn(std::size_t lane) {
        std::unique_lock<std::mutex> lock(mu_);
        auto& next_ok = next_ok_[lane % kLanes];
        const auto now = std::chrono::steady_clock::now();
        auto my_slot = std::max(next_ok, now);
        next_ok = my_slot + interval_;
        lock.unlock();
        if (my_slot > now) std::this_thread::sleep_until(my_slot);
    }

    static constexpr std::size_t kLanes = 4;
    std::shared_ptr<backends::Transport> inner_;
    std::chrono::steady_clock::duration interval_;
    std::mutex mu_;
    std::chrono::steady_clock::time_point next_ok_[kLanes];
};

}  // namespace

Backends make_backends(const Config& config,
                       std::shared_ptr<backends::Transport> transport_override) {
    Backends b;
    b.transcript = std::make_shared<backends::TranscriptStore>(config.transcript_path);

    std::shared_ptr<backends::Transport> transport;
    if (config.mode == backends::Mode::Replay) {
        // The sentinel guarantees zero network structurally; an override
        // would reintroduce a live path, so it is ignored here.
        transport = std::make_shared<backends::SentinelTransport>();
    } else if (transport_override) {
        transport = std::move(transport_override);
    } else {
        backends::HttpEndpoints ep;
        ep.llm_base_url = config.llm_base_url;
        ep.search_base_url = config.search_base_url;
        ep.wiki_base_url = config.wiki_base_url;
        ep.llm_api_key = env_or_empty(config.llm_api_key_env);
        ep.search_api_key = env_or_empty(config.search_api_key_env);
        ep.search_cx = env_or_empty(config.search_cx_env);
        transport = std::make_shared<backends::HttpTransport>(ep);
    }
    if (config.mode != backends::Mode::Replay && config.rate_limit_ms > 0) {
        transport = std::make_shared<RateLimitedTransport>(transport, config.rate_limit_ms);
    }

    std::shared_ptr<backends::ResponseCache> cache;
    if (!config.cache_dir.empty()) {
        cache = std::make_shared<backends::ResponseCache>(config.cache_dir,
                                                          config.cache_ttl_seconds);
    }

    b.dispatcher = std::make_shared<backends::Dispatcher>(config.mode, transport, b.transcript,
                                                          cache);
    b.llm = backends::make_llm_backend(b.dispatcher);
    b.search = backends::make_search_backend(b.dispatcher);
    b.wiki = backends::make_wiki_client(b.dispatcher);
    return b;
}

std::string adhoc_question_id(const std::string& question_text) {
    return "q-" + backends::sha256_hex(question_text).substr(0, 12);
}

QuestionResult answer_question(const Config& config, const Backends& backends,
                               const prompt::PromptLibrary& prompts,
                               const classify::ClassifierModel& classifier, Question question,
                               std::ostream* log) {
    QuestionResult result;
    result.question_id = question.id;

    auto fail = [&result](const std::string& reason) -> QuestionResult& {
        result.status = ResultStatus::Failed;
        result.failure_reason = reason;
        result.final_short.clear();
        result.final_long.clear();
        return result;
    };

    const std::string invalid = validate_question(question);
    if (!invalid.empty()) return fail("invalid question: " + invalid);

    try {
        if (decompose::needs_simplification(question)) {
            try {
                decompose::SimplifyOutcome simplified = decompose::simplify(
                    *backends.llm, prompts, question, config.decompose_model_id,
                    config.temperature);
                if (!text::trim(simplified.text).empty()) {
                    question.simplified_text = simplified.text;
                }
                if (simplified.truncated && log) {
                    *log << "question " << question.id
                         << ": simplification over-ran twice; truncated mechanically\n";
                }
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::QuotaExceeded) throw;
                // Simplification is an aid, not a gate.
                if (log) {
                    *log << "question " << question.id
                         << ": simplification failed, continuing with original text: "
                         << e.what() << '\n';
                }
            }
        }

        if (question.kind) {
            result.kind = *question.kind;
        } else {
            result.kind = classify::classify(classifier, question.working_text());
            question.kind = result.kind;
        }

        DecompositionPlan plan;
        try {
            plan = result.kind == QuestionKind::Sequential
                       ? decompose::decompose_sequential(*backends.llm, prompts, question,
                                                         config.decompose_model_id,
                                                         config.temperature, config.max_hops)
                       : decompose::extract_direct(*backends.llm, prompts, question,
                                                   config.decompose_model_id,
                                                   config.temperature, config.max_hops);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::QuotaExceeded) throw;
            return fail(std::string("decomposition failed (") + error_kind_name(e.kind()) +
                        "): " + e.what());
        }

        generate::HopDeps deps{*backends.llm,
                               *backends.search,
                               *backends.wiki,
                               prompts,
                               config.answer_model_id,
                               config.temperature,
                               config.search_limit,
                               config.max_articles,
                               config.wiki_token_budget,
                               config.max_sentences,
                               static_cast<std::size_t>(config.prompt_char_budget),
                               config.wiki_title_guard,
                               log};

        std::string anchor = plan.initial_anchor;
        for (const DecompositionStep& step : plan.steps) {
            HopRecord hop = generate::run_hop(deps, step, anchor);
            anchor = hop.normalized_short;
            result.hops.push_back(std::move(hop));
        }

        result.status = ResultStatus::Answered;
        result.final_short = result.hops.back().normalized_short;
        result.final_long = result.hops.back().raw_answer.long_answer;
        return result;
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::QuotaExceeded) {
            return fail(std::string("deferred on provider quota: ") + e.what());
        }
        return fail(e.what());  // HopError messages already name the hop
    }
}

namespace {

std::vector<Question> load_questions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.is_open()) {
        throw Error(ErrorKind::MalformedInput, "cannot read questions file " + path.string());
    }
    std::vector<Question> out;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) {
            throw Error(ErrorKind::MalformedInput,
                        "questions line " + std::to_string(line_no) + " is not a JSON object");
        }
        if (!rec.contains("id") || !rec["id"].is_string() || !rec.contains("question") ||
            !rec["question"].is_string()) {
            throw Error(ErrorKind::MalformedInput,
                        "questions line " + std::to_string(line_no) +
                            " needs string fields id and question");
        }
        Question q;
        q.id = rec["id"].get<std::string>();
        q.text = rec["question"].get<std::string>();
        if (q.id.empty() || !seen.insert(q.id).second) {
            throw Error(ErrorKind::MalformedInput,
                        "questions line " + std::to_string(line_no) +
                            " has an empty or repeated id");
        }
        out.push_back(std::move(q));
    }
    return out;
}

// Last recorded status per id from a previous (possibly interrupted) run.
std::set<std::string> answered_ids_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::set<std::string> answered;
    if (!in.is_open()) return answered;
    std::map<std::string, ResultStatus> last;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            QuestionResult r = trace::deserialize_result(line);
            last[r.question_id] = r.status;
        } catch (const Error& e) {
            throw Error(ErrorKind::IoFailure,
                        "existing output line " + std::to_string(line_no) +
                            " is not a usable result (" + e.what() +
                            "); refusing to resume over corrupt output");
        }
    }
    for (const auto& [id, status] : last) {
        if (status == ResultStatus::Answered) answered.insert(id);
    }
    return answered;
}

// Runs one round over `round_questions` with a bounded pool, appending
// serialized results to `out` in input order as a growing prefix completes.
RoundStats run_round(const Config& config, const Backends& backends,
                     const prompt::PromptLibrary& prompts,
                     const classify::ClassifierModel& classifier,
                     const std::vector<Question>& round_questions, std::ofstream& out,
                     std::vector<QuestionResult>& results_out, std::ostream* log) {
    const std::size_t n = round_questions.size();
    results_out.assign(n, QuestionResult{});

    std::vector<char> done(n, 0);
    std::mutex mu;
    std::condition_variable cv;
    std::atomic<std::size_t> next{0};
    std::mutex log_mu;

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            QuestionResult r;
            try {
                std::ostringstream local_log;
                r = answer_question(config, backends, prompts, classifier,
                                    round_questions[i], log ? &local_log : nullptr);
                if (log) {
                    const std::string text = local_log.str();
                    if (!text.empty()) {
                        std::lock_guard<std::mutex> lk(log_mu);
                        *log << text;
                    }
                }
            } catch (const std::exception& e) {
                // answer_question converts expected failures itself; this is
                // the belt-and-braces layer that keeps the batch alive.
                r.question_id = round_questions[i].id;
                r.status = ResultStatus::Failed;
                r.failure_reason = std::string("unexpected error: ") + e.what();
            }
            {
                std::lock_guard<std::mutex> lk(mu);
                results_out[i] = std::move(r);
                done[i] = 1;
            }
            cv.notify_all();
        }
    };

    const std::size_t pool =
        std::min<std::size_t>(static_cast<std::size_t>(config.workers), std::max<std::size_t>(n, 1));
    std::vector<std::thread> threads;
    threads.reserve(pool);
    for (std::size_t t = 0; t < pool; ++t) threads.emplace_back(worker);

    // Ordered incremental emission: write slot i as soon as every slot
    // before it is written, so output bytes never depend on worker timing.
    RoundStats stats;
    {
        std::unique_lock<std::mutex> lk(mu);
        for (std::size_t i = 0; i < n; ++i) {
            cv.wait(lk, [&] { return done[i] != 0; });
            out << trace::serialize_result(results_out[i]) << '\n';
            out.flush();
            ++stats.processed;
            if (results_out[i].status == ResultStatus::Answered) {
                ++stats.answered;
            } else {
                ++stats.failed;
            }
        }
    }
    for (std::thread& t : threads) t.join();
    if (!out.good()) {
        throw Error(ErrorKind::IoFailure, "short write to batch output");
    }
    return stats;
}

}  // namespace

BatchSummary run_batch(const Config& config, const Backends& backends,
                       const prompt::PromptLibrary& prompts,
                       const classify::ClassifierModel& classifier,
                       const std::filesystem::path& input_path,
                       const std::filesystem::path& output_path, std::ostream* log) {
    const std::vector<Question> all = load_questions(input_path);
    const std::set<std::string> already = answered_ids_in(output_path);

    BatchSummary summary;
    std::vector<Question> pending;
    for (const Question& q : all) {
        if (already.count(q.id)) {
            ++summary.skipped_resume;
        } else {
            pending.push_back(q);
        }
    }

    if (output_path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(output_path.parent_path(), ec);
    }
    std::ofstream out(output_path, std::ios::app);
    if (!out.is_open()) {
        throw Error(ErrorKind::IoFailure, "cannot open batch output " + output_path.string());
    }

    const int total_rounds = 1 + std::max(config.reprocess_rounds, 0);
    for (int round = 0; round < total_rounds && !pending.empty(); ++round) {
        std::vector<QuestionResult> results;
        RoundStats stats = run_round(config, backends, prompts, classifier, pending, out,
                                     results, log);
        summary.rounds.push_back(stats);
        if (round > 0) summary.recovered += stats.answered;

        std::vector<Question> still_failed;
        for (std::size_t i = 0; i < results.size(); ++i) {
            if (results[i].status == ResultStatus::Failed) {
                still_failed.push_back(pending[i]);
            }
        }
        pending = std::move(still_failed);
    }
    return summary;
}

}  // namespace medhop::pipeline
