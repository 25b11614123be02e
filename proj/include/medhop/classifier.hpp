#pragma once

#include "medhop/features.hpp"
#include "medhop/trees.hpp"
#include "medhop/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace medhop::classify {

struct TrainingExample {
    std::string text;
    QuestionKind label = QuestionKind::Direct;
};

struct TrainingConfig {
    std::uint64_t seed = 0;
    int k_folds = 5;
    int tree_count = 100;
    int max_depth = 6;
    int min_leaf = 2;
    double learning_rate = 0.1;
    int embedding_dim = 256;
    // The meta-learner sees only the two base probabilities by default; this
    // flag appends the z-scored raw feature vector for experimentation.
    bool include_raw_features = false;
};

// Two base learners plus a logistic meta layer. Immutable once trained, so
// concurrent prediction needs no locking.
struct ClassifierModel {
    int format_version = 1;
    features::FeatureConfig feature_config;
    trees::ForestModel forest;
    trees::BoostedModel boosted;
    std::vector<double> meta_weights;  // [w_forest, w_boosted, raw...]
    double meta_bias = 0.0;
    double threshold = 0.5;
    bool meta_includes_raw = false;
    std::vector<double> raw_mean;  // z-scoring stats, only when raw included
    std::vector<double> raw_std;
};

// Which rows each fold trained on and scored, kept so tests can prove the
// meta-learner never saw in-fold base predictions.
struct FoldRecord {
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> eval_rows;
};

struct TrainReport {
    int k_used = 0;
    std::vector<FoldRecord> folds;
    std::vector<std::string> warnings;
};

struct TrainOutcome {
    ClassifierModel model;
    TrainReport report;
};

// Out-of-fold stacking: per fold, bases train on the complement and emit
// probabilities on the held-out rows; the meta-learner fits on those
// out-of-fold probabilities only; bases then retrain on the full set.
// Throws Error{InsufficientData} when a class has fewer than 2 examples
// (k falls back to 2 with a warning when a class has fewer than k).
TrainOutcome train(const std::vector<TrainingExample>& examples, const TrainingConfig& config);

// sigma(W . meta_input + b). meta_input length must match meta_weights.
// Throws Error{DimensionMismatch}.
double meta_probability(const ClassifierModel& model, const std::vector<double>& meta_input);

// P(sequential) strictly inside (0,1). Throws Error{DimensionMismatch} when
// the embedding dimension disagrees with the model.
double predict_proba(const ClassifierModel& model, const features::FeatureVector& fv);

double predict_proba_text(const ClassifierModel& model, const std::string& question_text);

// Sequential iff probability >= threshold: ties route to the decomposing
// path, which degrades gracefully, while under-decomposition does not.
QuestionKind classify(const ClassifierModel& model, const std::string& question_text);

// Self-describing single-file JSON serialization.
std::string model_to_json(const ClassifierModel& model);
ClassifierModel model_from_json(const std::string& json_text);
void save_model(const ClassifierModel& model, const std::filesystem::path& path);
ClassifierModel load_model(const std::filesystem::path& path);

// JSONL of {"text": ..., "label": "direct"|"sequential"}.
std::vector<TrainingExample> load_training_data(const std::filesystem::path& path);

}  // namespace medhop::classify
