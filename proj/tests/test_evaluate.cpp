#include "medhop/evaluate.hpp"

#include "medhop/errors.hpp"
#include "medhop/trace.hpp"
#include "medhop/types.hpp"
#include "support/checks.hpp"
#include "support/temp_dir.hpp"

#include <doctest.h>

#include <json.hpp>

#include <sstream>

using namespace medhop;
using namespace medhop::evaluate;
using medhop::testing::contains;
using medhop::testing::expect_error;
using medhop::testing::TempDir;

namespace {

std::string pred_line(const std::string& id, const std::string& short_answer) {
    nlohmann::json j;
    j["id"] = id;
    j["short_answer"] = short_answer;
    return j.dump();
}

std::string gold_line(const std::string& id, const std::string& answer) {
    nlohmann::json j;
    j["id"] = id;
    j["question"] = "question for " + id;
    j["answer"] = answer;
    return j.dump();
}

std::string trace_line(const std::string& id, const std::string& short_answer) {
    QuestionResult r;
    r.question_id = id;
    r.kind = QuestionKind::Direct;
    r.status = ResultStatus::Answered;
    HopRecord hop;
    hop.index = 1;
    hop.sub_question = "What is it?";
    hop.sub_query = "it";
    hop.raw_answer = {short_answer, short_answer + " is the long form."};
    hop.normalized_short = short_answer;
    r.hops.push_back(hop);
    r.final_short = short_answer;
    r.final_long = short_answer + " is the long form.";
    return trace::serialize_result(r);
}

}  // namespace

TEST_CASE("exact match compares canonical forms") {
    CHECK(exact_match("Chromosome 6", "Chromosome 6") == 1);
    CHECK(exact_match("chromosome 6", "Chromosome 6") == 1);
    CHECK(exact_match("\"Chromosome 6.\"", "chromosome 6") == 1);
    CHECK(exact_match("  chromosome   6 ", "chromosome 6") == 1);
    CHECK(exact_match("café", "café") == 1);  // composed vs decomposed
    CHECK(exact_match("Chromosome 6", "Chromosome 16") == 0);
    CHECK(exact_match("", "") == 1);
    CHECK(exact_match("", "x") == 0);
}

TEST_CASE("a concept table maps surface forms to shared ids") {
    ConceptTable table;
    table.add("C001", {"hereditary hemochromatosis", "HH", "haemochromatosis type 1"});
    table.add("C002", {"Wilson's disease", "hepatolenticular degeneration"});
    table.add("C003", {"HH"});  // one form can denote several concepts

    CHECK(table.concepts_for("hereditary hemochromatosis") ==
          std::set<std::string>{"C001"});
    CHECK(table.concepts_for("hh") == std::set<std::string>{"C001", "C003"});
    // unmapped forms denote themselves
    CHECK(table.concepts_for("Marfan syndrome") ==
          std::set<std::string>{"marfan syndrome"});
}

TEST_CASE("concept score is exact match widened by synonymy") {
    ConceptTable table;
    table.add("C001", {"hereditary hemochromatosis", "HH"});

    CHECK(concept_score("HH", "hereditary hemochromatosis", table) == 1);
    CHECK(concept_score("hereditary hemochromatosis", "HH", table) == 1);
    CHECK(concept_score("Wilson's disease", "hereditary hemochromatosis", table) == 0);
    // exact match wins even with an empty table
    ConceptTable empty;
    CHECK(concept_score("chromosome 6", "Chromosome 6.", empty) == 1);
    // and the score never drops below exact match
    const std::vector<std::pair<std::string, std::string>> pairs = {
        {"HH", "HH"}, {"a", "b"}, {"hh", "hereditary hemochromatosis"}, {"x", "x"}};
    for (const auto& [p, g] : pairs) {
        CHECK(concept_score(p, g, table) >= exact_match(p, g));
    }
}

TEST_CASE("concept tables load from JSONL and reject broken lines") {
    TempDir dir;
    auto good = dir.write(
        "concepts.jsonl",
        R"({"concept_id":"C001","surface_forms":["hereditary hemochromatosis","HH"]})"
        "\n\n"
        R"({"concept_id":"C002","surface_forms":["Wilson's disease"]})"
        "\n");
    ConceptTable table = ConceptTable::load(good);
    CHECK(table.concepts_for("HH") == std::set<std::string>{"C001"});
    CHECK(table.concepts_for("wilson's disease") == std::set<std::string>{"C002"});

    std::string msg = expect_error([&] { ConceptTable::load(dir.file("absent.jsonl")); },
                                   ErrorKind::MalformedTable);
    CHECK(contains(msg, "cannot read"));

    auto bad_json = dir.write("bad1.jsonl", "{\"concept_id\":\"C\",\"surface_forms\":[]}\n[1]\n");
    msg = expect_error([&] { ConceptTable::load(bad_json); }, ErrorKind::MalformedTable);
    CHECK(contains(msg, "line 2"));

    auto missing_field = dir.write("bad2.jsonl", R"({"concept_id":"C1"})" "\n");
    msg = expect_error([&] { ConceptTable::load(missing_field); }, ErrorKind::MalformedTable);
    CHECK(contains(msg, "needs concept_id and surface_forms"));

    auto bad_form = dir.write("bad3.jsonl",
                              R"({"concept_id":"C1","surface_forms":["ok",5]})" "\n");
    msg = expect_error([&] { ConceptTable::load(bad_form); }, ErrorKind::MalformedTable);
    CHECK(contains(msg, "non-string surface form"));
}

TEST_CASE("a run is scored against gold order with trace lines accepted") {
    TempDir dir;
    auto gold = dir.write("gold.jsonl", gold_line("q1", "Chromosome 6") + "\n" +
                                            gold_line("q2", "Yes") + "\n" +
                                            gold_line("q3", "49") + "\n");
    // q1 plain and answered twice: the reprocessed (last) line wins
    auto pred = dir.write("pred.jsonl", pred_line("q1", "chromosome 16") + "\n" +
                                            trace_line("q2", "Yes") + "\n" +
                                            pred_line("q1", "chromosome 6") + "\n");

    std::ostringstream warnings;
    EvalReport report = evaluate_run(pred, gold, ConceptTable{}, &warnings);
    CHECK(report.n == 3);
    REQUIRE(report.per_question.size() == 3);
    CHECK(report.per_question[0].id == "q1");
    CHECK(report.per_question[0].em == 1);
    CHECK(report.per_question[1].id == "q2");
    CHECK(report.per_question[1].em == 1);
    CHECK(report.per_question[2].id == "q3");
    CHECK(report.per_question[2].em == 0);  // no prediction at all
    CHECK(contains(warnings.str(), "no prediction for id q3; scored 0"));
    CHECK(report.exact_match == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("broken prediction and gold files are named by line") {
    TempDir dir;
    auto gold = dir.write("gold.jsonl", gold_line("q1", "a") + "\n");

    auto bad_pred = dir.write("pred1.jsonl", pred_line("q1", "a") + "\nnot json\n");
    std::string msg = expect_error(
        [&] { evaluate_run(bad_pred, gold, ConceptTable{}, nullptr); },
        ErrorKind::MalformedInput);
    CHECK(contains(msg, "prediction line 2"));

    auto half_trace = dir.write("pred2.jsonl",
                                R"({"question_id":"q1","status":"answered"})" "\n");
    msg = expect_error([&] { evaluate_run(half_trace, gold, ConceptTable{}, nullptr); },
                       ErrorKind::MalformedInput);
    CHECK(contains(msg, "looks like a trace record"));

    auto no_fields = dir.write("pred3.jsonl", R"({"id":"q1"})" "\n");
    msg = expect_error([&] { evaluate_run(no_fields, gold, ConceptTable{}, nullptr); },
                       ErrorKind::MalformedInput);
    CHECK(contains(msg, "needs string fields id and short_answer"));

    auto dup_gold = dir.write("gold2.jsonl", gold_line("q1", "a") + "\n" +
                                                 gold_line("q1", "b") + "\n");
    auto ok_pred = dir.write("pred4.jsonl", pred_line("q1", "a") + "\n");
    msg = expect_error([&] { evaluate_run(ok_pred, dup_gold, ConceptTable{}, nullptr); },
                       ErrorKind::MalformedInput);
    CHECK(contains(msg, "repeats id q1"));

    auto thin_gold = dir.write("gold3.jsonl", R"({"id":"q1","question":"q"})" "\n");
    msg = expect_error([&] { evaluate_run(ok_pred, thin_gold, ConceptTable{}, nullptr); },
                       ErrorKind::MalformedInput);
    CHECK(contains(msg, "needs string field answer"));
}

TEST_CASE("84 exact hits over 100 questions score 0.840 exactly") {
    TempDir dir;
    std::string gold_text, pred_text;
    for (int i = 0; i < 100; ++i) {
        const std::string id = "q" + std::to_string(i);
        gold_text += gold_line(id, "answer " + std::to_string(i)) + "\n";
        const bool hit = i < 84;
        pred_text += pred_line(id, hit ? "answer " + std::to_string(i) : "wrong") + "\n";
    }
    auto gold = dir.write("gold.jsonl", gold_text);
    auto pred = dir.write("pred.jsonl", pred_text);

    EvalReport report = evaluate_run(pred, gold, ConceptTable{}, nullptr);
    CHECK(report.n == 100);
    CHECK(report.exact_match == 0.84);  // exactly 84/100, no tolerance
    CHECK(report.concept_level == 0.84);

    const std::string table = format_report_table(report);
    CHECK(contains(table, "Run"));
    CHECK(contains(table, "EM"));
    CHECK(contains(table, "CL"));
    CHECK(contains(table, "this run"));
    CHECK(contains(table, "0.840"));
    CHECK(contains(table, "not an official scorer"));
}

TEST_CASE("the JSON report is one line and round-trips its fields") {
    EvalReport report;
    report.n = 2;
    report.exact_match = 0.5;
    report.concept_level = 1.0;
    report.per_question = {{"q1", 1, 1}, {"q2", 0, 1}};

    const std::string line = format_report_json(report);
    CHECK(line.find('\n') == std::string::npos);
    auto doc = nlohmann::json::parse(line);
    CHECK(doc["n"] == 2);
    CHECK(doc["exact_match"] == doctest::Approx(0.5));
    CHECK(doc["concept_level"] == doctest::Approx(1.0));
    REQUIRE(doc["per_question"].size() == 2);
    CHECK(doc["per_question"][0]["id"] == "q1");
    CHECK(doc["per_question"][1]["em"] == 0);
    CHECK(doc["per_question"][1]["cl"] == 1);
}
