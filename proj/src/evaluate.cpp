#include "medhop/evaluate.hpp"

#include "medhop/errors.hpp"
#include "medhop/text.hpp"
#include "medhop/trace.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace medhop::evaluate {

using nlohmann::json;

int exact_match(const std::string& pred, const std::string& gold) {
    return text::canonical_answer(pred) == text::canonical_answer(gold) ? 1 : 0;
}

ConceptTable ConceptTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.is_open()) {
        throw Error(ErrorKind::MalformedTable, "cannot read concept table " + path.string());
    }
    ConceptTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) {
            throw Error(ErrorKind::MalformedTable,
                        "concept table line " + std::to_string(line_no) +
                            " is not a JSON object");
        }
        if (!rec.contains("concept_id") || !rec["concept_id"].is_string() ||
            !rec.contains("surface_forms") || !rec["surface_forms"].is_array()) {
            throw Error(ErrorKind::MalformedTable,
                        "concept table line " + std::to_string(line_no) +
                            " needs concept_id and surface_forms");
        }
        std::vector<std::string> forms;
        for (const json& f : rec["surface_forms"]) {
            if (!f.is_string()) {
                throw Error(ErrorKind::MalformedTable,
                            "concept table line " + std::to_string(line_no) +
                                " has a non-string surface form");
            }
            forms.push_back(f.get<std::string>());
        }
        table.add(rec["concept_id"].get<std::string>(), forms);
    }
    return table;
}

void ConceptTable::add(const std::string& concept_id,
                       const std::vector<std::string>& surface_forms) {
    for (const std::string& form : surface_forms) {
        by_canonical_[text::canonical_answer(form)].insert(concept_id);
    }
}

std::set<std::string> ConceptTable::concepts_for(const std::string& answer) const {
    const std::string canonical = text::canonical_answer(answer);
    auto it = by_canonical_.find(canonical);
    if (it != by_canonical_.end()) return it->second;
    return {canonical};  // an unmapped surface form denotes itself
}

int concept_score(const std::string& pred, const std::string& gold,
                  const ConceptTable& table) {
    if (exact_match(pred, gold)) return 1;
    const std::set<std::string> p = table.concepts_for(pred);
    for (const std::string& c : table.concepts_for(gold)) {
        if (p.count(c)) return 1;
    }
    return 0;
}

namespace {

std::vector<GoldRecord> load_gold(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.is_open()) {
        throw Error(ErrorKind::MalformedInput, "cannot read gold file " + path.string());
    }
    std::vector<GoldRecord> out;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) {
            throw Error(ErrorKind::MalformedInput,
                        "gold line " + std::to_string(line_no) + " is not a JSON object");
        }
        for (const char* field : {"id", "question", "answer"}) {
            if (!rec.contains(field) || !rec[field].is_string()) {
                throw Error(ErrorKind::MalformedInput,
                            "gold line " + std::to_string(line_no) +
                                " needs string field " + field);
            }
        }
        GoldRecord g;
        g.id = rec["id"].get<std::string>();
        g.question = rec["question"].get<std::string>();
        g.answer = rec["answer"].get<std::string>();
        if (!seen.insert(g.id).second) {
            throw Error(ErrorKind::MalformedInput,
                        "gold file repeats id " + g.id + " at line " + std::to_string(line_no));
        }
        out.push_back(std::move(g));
    }
    return out;
}

// id -> short answer. Accepts plain prediction lines and pipeline trace
// lines; later lines replace earlier ones (append-style reprocess output).
std::map<std::string, std::string> load_predictions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.is_open()) {
        throw Error(ErrorKind::MalformedInput, "cannot read predictions " + path.string());
    }
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) {
            throw Error(ErrorKind::MalformedInput,
                        "prediction line " + std::to_string(line_no) +
                            " is not a JSON object");
        }
        if (rec.contains("question_id")) {
            // Full trace record; its own deserializer enforces the schema.
            try {
                QuestionResult result = trace::deserialize_result(line);
                out[result.question_id] = result.final_short;
            } catch (const Error& e) {
                throw Error(ErrorKind::MalformedInput,
                            "prediction line " + std::to_string(line_no) +
                                " looks like a trace record but fails to parse: " + e.what());
            }
            continue;
        }
        if (!rec.contains("id") || !rec["id"].is_string() || !rec.contains("short_answer") ||
            !rec["short_answer"].is_string()) {
            throw Error(ErrorKind::MalformedInput,
                        "prediction line " + std::to_string(line_no) +
                            " needs string fields id and short_answer");
        }
        out[rec["id"].get<std::string>()] = rec["short_answer"].get<std::string>();
    }
    return out;
}

}  // namespace

EvalReport evaluate_run(const std::filesystem::path& predictions_path,
                        const std::filesystem::path& gold_path, const ConceptTable& table,
                        std::ostream* warnings) {
    const std::vector<GoldRecord> golds = load_gold(gold_path);
    const std::map<std::string, std::string> preds = load_predictions(predictions_path);

    EvalReport report;
    report.n = golds.size();
    double em_sum = 0, cl_sum = 0;
    for (const GoldRecord& gold : golds) {
        QuestionScore score;
        score.id = gold.id;
        auto it = preds.find(gold.id);
        if (it == preds.end()) {
            if (warnings) {
                *warnings << "no prediction for id " << gold.id << "; scored 0\n";
            }
        } else {
            score.em = exact_match(it->second, gold.answer);
            score.cl = concept_score(it->second, gold.answer, table);
        }
        em_sum += score.em;
        cl_sum += score.cl;
        report.per_question.push_back(std::move(score));
    }
    if (report.n > 0) {
        report.exact_match = em_sum / static_cast<double>(report.n);
        report.concept_level = cl_sum / static_cast<double>(report.n);
    }
    return report;
}

std::string format_report_table(const EvalReport& report) {
    std::ostringstream out;
    out << std::left << std::setw(10) << "Run" << std::right << std::setw(8) << "N"
        << std::setw(8) << "EM" << std::setw(8) << "CL" << '\n';
    out << std::left << std::setw(10) << "this run" << std::right << std::setw(8) << report.n
        << std::fixed << std::setprecision(3) << std::setw(8) << report.exact_match
        << std::setw(8) << report.concept_level << '\n';
    out << "\nCL approximates concept equivalence with a synonym table; "
           "it is not an official scorer.\n";
    return out.str();
}

std::string format_report_json(const EvalReport& report) {
    json doc;
    doc["n"] = report.n;
    doc["exact_match"] = report.exact_match;
    doc["concept_level"] = report.concept_level;
    json per = json::array();
    for (const QuestionScore& s : report.per_question) {
        per.push_back({{"id", s.id}, {"em", s.em}, {"cl", s.cl}});
    }
    doc["per_question"] = per;
    return doc.dump();
}

}  // namespace medhop::evaluate
