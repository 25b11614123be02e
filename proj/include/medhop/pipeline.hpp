#pragma once

#include "medhop/backends.hpp"
#include "medhop/classifier.hpp"
#include "medhop/config.hpp"
#include "medhop/prompt.hpp"
#include "medhop/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace medhop::pipeline {

// The wired backend stack for one run. Dispatcher and transcript are exposed
// so tests and tooling can inspect or pre-seed them.
struct Backends {
    std::shared_ptr<backends::TranscriptStore> transcript;
    std::shared_ptr<backends::Dispatcher> dispatcher;
    std::shared_ptr<backends::LlmBackend> llm;
    std::shared_ptr<backends::SearchBackend> search;
    std::shared_ptr<backends::WikiClient> wiki;
};

// Builds the stack for the configured mode. Replay installs a transport that
// throws on any network attempt; live and record read provider credentials
// from the environment variables the config names. `transport_override`
// replaces the transport (fixture recording, tests) in live/record modes.
Backends make_backends(const Config& config,
                       std::shared_ptr<backends::Transport> transport_override = nullptr);

// Stable id for ad-hoc CLI questions: "q-" + first 12 hex chars of the
// question text's digest.
std::string adhoc_question_id(const std::string& question_text);

// Fig-style loop for one question: simplify when needed (best-effort),
// classify, decompose (by kind), then run hops chaining each normalized
// short answer into the next hop's anchor. A hop failure yields a Failed
// result whose reason names the hop; no partial answer is promoted to final.
QuestionResult answer_question(const Config& config, const Backends& backends,
                               const prompt::PromptLibrary& prompts,
                               const classify::ClassifierModel& classifier, Question question,
                               std::ostream* log = nullptr);

struct RoundStats {
    int processed = 0;
    int answered = 0;
    int failed = 0;
};

struct BatchSummary {
    std::vector<RoundStats> rounds;
    int recovered = 0;             // failed in an earlier round, answered later
    std::size_t skipped_resume = 0;  // input ids already answered in the output file
};

// Processes the input questions ({id, question} JSONL) with a worker pool,
// appending one QuestionResult line per question to the output file in input
// order regardless of completion order (byte-deterministic across worker
// counts). Questions that fail get up to `reprocess_rounds` extra passes.
// An existing output file acts as a checkpoint: already-answered ids are
// skipped. Throws Error{MalformedInput} / Error{IoFailure} for file-level
// problems; per-question failures never abort the batch.
BatchSummary run_batch(const Config& config, const Backends& backends,
                       const prompt::PromptLibrary& prompts,
                       const classify::ClassifierModel& classifier,
                       const std::filesystem::path& input_path,
                       const std::filesystem::path& output_path, std::ostream* log = nullptr);

}  // namespace medhop::pipeline
