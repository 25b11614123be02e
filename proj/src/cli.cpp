#include "medhop/cli.hpp"

#include "medhop/classifier.hpp"
#include "medhop/config.hpp"
#include "medhop/errors.hpp"
#include "medhop/evaluate.hpp"
#include "medhop/pipeline.hpp"
#include "medhop/text.hpp"
#include "medhop/trace.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <ostream>

namespace medhop {

namespace {

Config resolve_config(const std::string& config_path, const std::string& mode_flag,
                      std::ostream& err) {
    Config cfg = config_path.empty() ? Config{} : load_config(config_path, &err);
    if (!mode_flag.empty()) {
        auto mode = backends::mode_from_string(mode_flag);
        if (!mode) {
            throw Error(ErrorKind::UsageError,
                        "mode must be live, record, or replay; got " + mode_flag);
        }
        cfg.mode = *mode;
    }
    return cfg;
}

}  // namespace

int cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-hop biomedical question answering pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string mode_flag;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--mode", mode_flag,
                   "Backend mode override: live, record, or replay");

    auto* answer_cmd = app.add_subcommand("answer", "Answer one question");
    std::string question_text, question_id;
    answer_cmd->add_option("--question", question_text, "Question text")->required();
    answer_cmd->add_option("--id", question_id, "Question id (defaults to a text digest)");

    auto* batch_cmd = app.add_subcommand("batch", "Answer a JSONL file of questions");
    std::string batch_in, batch_out;
    batch_cmd->add_option("--in", batch_in, "Input questions JSONL ({id, question})")
        ->required();
    batch_cmd->add_option("--out", batch_out, "Output results JSONL (appended)")->required();

    auto* train_cmd = app.add_subcommand("train-classifier", "Train the question router");
    std::string train_data, train_model;
    bool include_raw = false;
    train_cmd->add_option("--data", train_data, "Training JSONL ({text, label})")->required();
    train_cmd->add_option("--model", train_model, "Output model JSON path")->required();
    train_cmd->add_flag("--include-raw-features", include_raw,
                        "Feed z-scored raw features to the meta-learner too");

    auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions against gold answers");
    std::string pred_path, gold_path, concepts_path;
    eval_cmd->add_option("--pred", pred_path, "Predictions JSONL")->required();
    eval_cmd->add_option("--gold", gold_path, "Gold JSONL ({id, question, answer})")
        ->required();
    eval_cmd->add_option("--concepts", concepts_path,
                         "Concept synonym table JSONL ({concept_id, surface_forms})");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (answer_cmd->parsed()) {
            const Config cfg = resolve_config(config_path, mode_flag, err);
            const prompt::PromptLibrary prompts(cfg.template_dir);
            const classify::ClassifierModel model =
                classify::load_model(cfg.classifier_model_path);
            pipeline::Backends backends = pipeline::make_backends(cfg);

            Question q;
            q.text = question_text;
            q.id = question_id.empty() ? pipeline::adhoc_question_id(question_text)
                                       : question_id;
            QuestionResult result =
                pipeline::answer_question(cfg, backends, prompts, model, q, &err);
            out << trace::serialize_result(result) << '\n';
            return 0;
        }

        if (batch_cmd->parsed()) {
            const Config cfg = resolve_config(config_path, mode_flag, err);
            const prompt::PromptLibrary prompts(cfg.template_dir);
            const classify::ClassifierModel model =
                classify::load_model(cfg.classifier_model_path);
            pipeline::Backends backends = pipeline::make_backends(cfg);

            pipeline::BatchSummary summary = pipeline::run_batch(
                cfg, backends, prompts, model, batch_in, batch_out, &err);
            for (std::size_t i = 0; i < summary.rounds.size(); ++i) {
                const pipeline::RoundStats& r = summary.rounds[i];
                out << "round " << (i + 1) << ": processed " << r.processed << ", answered "
                    << r.answered << ", failed " << r.failed << '\n';
            }
            out << "recovered " << summary.recovered << ", skipped (already answered) "
                << summary.skipped_resume << '\n';
            return 0;
        }

        if (train_cmd->parsed()) {
            const Config cfg = resolve_config(config_path, mode_flag, err);
            classify::TrainingConfig tc;
            tc.seed = cfg.seed;
            tc.embedding_dim = cfg.embedding_dim;
            tc.include_raw_features = include_raw;
            const std::vector<classify::TrainingExample> data =
                classify::load_training_data(train_data);
            classify::TrainOutcome outcome = classify::train(data, tc);
            for (const std::string& w : outcome.report.warnings) err << w << '\n';
            classify::save_model(outcome.model, train_model);
            out << "trained on " << data.size() << " examples (k=" << outcome.report.k_used
                << "); model written to " << train_model << '\n';
            return 0;
        }

        if (eval_cmd->parsed()) {
            evaluate::ConceptTable table;
            if (!concepts_path.empty()) {
                table = evaluate::ConceptTable::load(concepts_path);
            }
            evaluate::EvalReport report =
                evaluate::evaluate_run(pred_path, gold_path, table, &err);
            out << evaluate::format_report_table(report);
            out << evaluate::format_report_json(report) << '\n';
            return 0;
        }

        err << "no subcommand selected\n" << app.help();
        return 1;
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::UsageError) {
            err << e.what() << '\n';
            return 1;
        }
        err << "error (" << error_kind_name(e.kind()) << "): " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace medhop
