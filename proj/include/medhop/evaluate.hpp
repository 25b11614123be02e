#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace medhop::evaluate {

struct GoldRecord {
    std::string id;
    std::string question;
    std::string answer;
};

struct QuestionScore {
    std::string id;
    int em = 0;
    int cl = 0;
};

struct EvalReport {
    std::size_t n = 0;
    double exact_match = 0.0;    // mean of em
    double concept_level = 0.0;  // mean of cl
    std::vector<QuestionScore> per_question;
};

// 1 iff the two strings agree after canonicalization (NFC, lowercase,
// surrounding quote/punctuation strip, whitespace collapse).
int exact_match(const std::string& pred, const std::string& gold);

// Synonym lookup: canonical surface form -> set of concept ids. A surface
// form missing from the table denotes itself (a singleton synthetic id), so
// the score degrades to exact match. This is an explicit approximation of a
// concept-level scorer, not a reimplementation of any official one.
class ConceptTable {
public:
    ConceptTable() = default;

    // JSONL of {"concept_id": ..., "surface_forms": [...]}.
    // Throws Error{MalformedTable}.
    static ConceptTable load(const std::filesystem::path& path);

    void add(const std::string& concept_id, const std::vector<std::string>& surface_forms);

    std::set<std::string> concepts_for(const std::string& answer) const;

private:
    std::map<std::string, std::set<std::string>> by_canonical_;
};

// 1 iff exact_match is 1 or the concept-id sets intersect; never smaller
// than exact_match.
int concept_score(const std::string& pred, const std::string& gold,
                  const ConceptTable& table);

// Predictions may be plain {id, short_answer, long_answer} lines or full
// pipeline trace records (auto-detected per line); for duplicate ids the
// last record wins, mirroring append-style reprocessing output. Gold ids
// missing from the predictions score 0 with a warning on `warnings`.
// Throws Error{MalformedInput}.
EvalReport evaluate_run(const std::filesystem::path& predictions_path,
                        const std::filesystem::path& gold_path,
                        const ConceptTable& table, std::ostream* warnings = nullptr);

// Table-style report: header, one row of three-decimal scores, and the
// approximation note for the concept column.
std::string format_report_table(const EvalReport& report);

// Single-line JSON form of the aggregates plus per-question scores.
std::string format_report_json(const EvalReport& report);

}  // namespace medhop::evaluate
