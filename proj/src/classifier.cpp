#include "medhop/classifier.hpp"

#include "medhop/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace medhop::classify {

using nlohmann::json;

namespace {

std::vector<double> zscore_raw(const ClassifierModel& model, const std::vector<double>& raw) {
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out[i] = (raw[i] - model.raw_mean[i]) / model.raw_std[i];
    }
    return out;
}

std::vector<double> meta_input_for(const ClassifierModel& model,
                                   const std::vector<double>& flat) {
    std::vector<double> meta_in{model.forest.predict_proba(flat),
                                model.boosted.predict_proba(flat)};
    if (model.meta_includes_raw) {
        std::vector<double> z = zscore_raw(model, flat);
        meta_in.insert(meta_in.end(), z.begin(), z.end());
    }
    return meta_in;
}

// Deterministic full-batch gradient descent for the logistic meta layer.
// Inputs are two probabilities (optionally plus z-scored raw features), so a
// fixed schedule converges without per-run tuning.
void fit_logistic(const trees::Matrix& rows, const std::vector<double>& y,
                  std::vector<double>& weights, double& bias) {
    const std::size_t n = rows.size();
    const std::size_t d = rows[0].size();
    weights.assign(d, 0.0);
    bias = 0.0;
    const double lr = 0.5;
    const double l2 = 1e-4;
    const int iterations = 3000;
    std::vector<double> grad(d);
    for (int it = 0; it < iterations; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_b = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double z = bias;
            for (std::size_t j = 0; j < d; ++j) z += weights[j] * rows[i][j];
            const double err = trees::sigmoid(z) - y[i];
            for (std::size_t j = 0; j < d; ++j) grad[j] += err * rows[i][j];
            grad_b += err;
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t j = 0; j < d; ++j) {
            weights[j] -= lr * (grad[j] * inv_n + l2 * weights[j]);
        }
        bias -= lr * grad_b * inv_n;
    }
}

}  // namespace

TrainOutcome train(const std::vector<TrainingExample>& examples, const TrainingConfig& config) {
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < examples.size(); ++i) {
        by_class[examples[i].label == QuestionKind::Sequential ? 1 : 0].push_back(i);
    }
    if (by_class[0].size() < 2 || by_class[1].size() < 2) {
        throw Error(ErrorKind::InsufficientData,
                    "need at least 2 examples per class, got " +
                        std::to_string(by_class[0].size()) + " direct / " +
                        std::to_string(by_class[1].size()) + " sequential");
    }

    TrainOutcome out;
    int k = config.k_folds;
    const std::size_t min_class = std::min(by_class[0].size(), by_class[1].size());
    if (min_class < static_cast<std::size_t>(k)) {
        k = 2;
        out.report.warnings.push_back(
            "smallest class has " + std::to_string(min_class) +
            " examples; folding with k=2 instead of k=" + std::to_string(config.k_folds));
    }
    out.report.k_used = k;

    // Embedding idf is fitted on training text before any feature extraction
    // so folds and the final model share one feature space.
    std::vector<std::string> texts;
    texts.reserve(examples.size());
    for (const auto& e : examples) texts.push_back(e.text);
    out.model.feature_config.embedding_dim = config.embedding_dim;
    out.model.feature_config.slot_idf = features::fit_slot_idf(texts, config.embedding_dim);

    trees::Matrix flat(examples.size());
    std::vector<double> y(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
        flat[i] = features::extract_features(examples[i].text, out.model.feature_config)
                      .flattened();
        y[i] = examples[i].label == QuestionKind::Sequential ? 1.0 : 0.0;
    }

    // Stratified fold assignment: each class is shuffled once with the run
    // seed, then dealt round-robin, so every row is evaluated exactly once.
    std::vector<int> fold_of(examples.size(), -1);
    trees::Rng fold_rng(config.seed);
    for (auto& cls : by_class) {
        for (std::size_t i = cls.size(); i > 1; --i) {
            std::swap(cls[i - 1], cls[fold_rng.uniform_index(i)]);
        }
        for (std::size_t i = 0; i < cls.size(); ++i) {
            fold_of[cls[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
        }
    }

    trees::ForestParams forest_params{config.tree_count, config.max_depth, config.min_leaf,
                                      config.seed + 1};
    trees::BoostedParams boosted_params{config.tree_count, config.max_depth, config.min_leaf,
                                        config.learning_rate, 1.0, config.seed + 2};

    trees::Matrix meta_rows(examples.size());
    out.report.folds.resize(static_cast<std::size_t>(k));
    for (int f = 0; f < k; ++f) {
        FoldRecord& record = out.report.folds[static_cast<std::size_t>(f)];
        trees::Matrix train_x;
        std::vector<double> train_y;
        for (std::size_t i = 0; i < examples.size(); ++i) {
            if (fold_of[i] == f) {
                record.eval_rows.push_back(i);
            } else {
                record.train_rows.push_back(i);
                train_x.push_back(flat[i]);
                train_y.push_back(y[i]);
            }
        }

        trees::ForestParams fp = forest_params;
        fp.seed = config.seed + 10000 + static_cast<std::uint64_t>(f);
        trees::BoostedParams bp = boosted_params;
        bp.seed = config.seed + 20000 + static_cast<std::uint64_t>(f);
        trees::ForestModel fold_forest = trees::train_forest(train_x, train_y, fp);
        trees::BoostedModel fold_boosted = trees::train_boosted(train_x, train_y, bp);

        for (std::size_t i : record.eval_rows) {
            meta_rows[i] = {fold_forest.predict_proba(flat[i]),
                            fold_boosted.predict_proba(flat[i])};
        }
    }

    out.model.meta_includes_raw = config.include_raw_features;
    if (config.include_raw_features) {
        const std::size_t d = flat[0].size();
        out.model.raw_mean.assign(d, 0.0);
        out.model.raw_std.assign(d, 0.0);
        for (const auto& row : flat) {
            for (std::size_t j = 0; j < d; ++j) out.model.raw_mean[j] += row[j];
        }
        for (std::size_t j = 0; j < d; ++j) {
            out.model.raw_mean[j] /= static_cast<double>(flat.size());
        }
        for (const auto& row : flat) {
            for (std::size_t j = 0; j < d; ++j) {
                const double dev = row[j] - out.model.raw_mean[j];
                out.model.raw_std[j] += dev * dev;
            }
        }
        for (std::size_t j = 0; j < d; ++j) {
            out.model.raw_std[j] = std::sqrt(out.model.raw_std[j] /
                                             static_cast<double>(flat.size()));
            if (out.model.raw_std[j] <= 0.0) out.model.raw_std[j] = 1.0;
        }
        for (std::size_t i = 0; i < flat.size(); ++i) {
            std::vector<double> z = zscore_raw(out.model, flat[i]);
            meta_rows[i].insert(meta_rows[i].end(), z.begin(), z.end());
        }
    }

    fit_logistic(meta_rows, y, out.model.meta_weights, out.model.meta_bias);

    // Bases now retrain on everything: the fold models existed only to give
    // the meta layer leak-free inputs.
    out.model.forest = trees::train_forest(flat, y, forest_params);
    out.model.boosted = trees::train_boosted(flat, y, boosted_params);
    out.model.threshold = 0.5;
    return out;
}

double meta_probability(const ClassifierModel& model, const std::vector<double>& meta_input) {
    if (meta_input.size() != model.meta_weights.size()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "meta input has " + std::to_string(meta_input.size()) +
                        " values, model expects " + std::to_string(model.meta_weights.size()));
    }
    double z = model.meta_bias;
    for (std::size_t i = 0; i < meta_input.size(); ++i) {
        z += model.meta_weights[i] * meta_input[i];
    }
    return trees::sigmoid(z);
}

double predict_proba(const ClassifierModel& model, const features::FeatureVector& fv) {
    if (fv.embedding.size() !=
        static_cast<std::size_t>(model.feature_config.embedding_dim)) {
        throw Error(ErrorKind::DimensionMismatch,
                    "feature embedding dimension " + std::to_string(fv.embedding.size()) +
                        " does not match model dimension " +
                        std::to_string(model.feature_config.embedding_dim));
    }
    return meta_probability(model, meta_input_for(model, fv.flattened()));
}

double predict_proba_text(const ClassifierModel& model, const std::string& question_text) {
    return predict_proba(model, features::extract_features(question_text, model.feature_config));
}

QuestionKind classify(const ClassifierModel& model, const std::string& question_text) {
    return predict_proba_text(model, question_text) >= model.threshold
               ? QuestionKind::Sequential
               : QuestionKind::Direct;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

json tree_to_json(const trees::Tree& tree) {
    json nodes = json::array();
    for (const trees::TreeNode& n : tree.nodes) {
        nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.value}));
    }
    return nodes;
}

trees::Tree tree_from_json(const json& nodes, const std::string& where) {
    if (!nodes.is_array() || nodes.empty()) {
        throw Error(ErrorKind::SchemaViolation, where + " is not a non-empty node array");
    }
    trees::Tree tree;
    for (const json& n : nodes) {
        if (!n.is_array() || n.size() != 5 || !n[0].is_number_integer() ||
            !n[1].is_number() || !n[2].is_number_integer() || !n[3].is_number_integer() ||
            !n[4].is_number()) {
            throw Error(ErrorKind::SchemaViolation, where + " holds a malformed node");
        }
        trees::TreeNode node;
        node.feature = n[0].get<int>();
        node.threshold = n[1].get<double>();
        node.left = n[2].get<int>();
        node.right = n[3].get<int>();
        node.value = n[4].get<double>();
        const int limit = static_cast<int>(nodes.size());
        if (node.feature >= 0 &&
            (node.left < 0 || node.left >= limit || node.right < 0 || node.right >= limit)) {
            throw Error(ErrorKind::SchemaViolation, where + " has a child index out of range");
        }
        tree.nodes.push_back(node);
    }
    return tree;
}

std::vector<double> doubles_from_json(const json& arr, const std::string& where) {
    if (!arr.is_array()) {
        throw Error(ErrorKind::SchemaViolation, where + " is not an array");
    }
    std::vector<double> out;
    out.reserve(arr.size());
    for (const json& v : arr) {
        if (!v.is_number()) {
            throw Error(ErrorKind::SchemaViolation, where + " holds a non-numeric value");
        }
        out.push_back(v.get<double>());
    }
    return out;
}

}  // namespace

std::string model_to_json(const ClassifierModel& model) {
    json doc;
    doc["format_version"] = model.format_version;
    doc["feature_config"] = {{"embedding_dim", model.feature_config.embedding_dim},
                             {"slot_idf", model.feature_config.slot_idf}};
    json forest_trees = json::array();
    for (const trees::Tree& t : model.forest.trees) forest_trees.push_back(tree_to_json(t));
    doc["forest"] = {{"trees", forest_trees}};
    json boosted_trees = json::array();
    for (const trees::Tree& t : model.boosted.trees) boosted_trees.push_back(tree_to_json(t));
    doc["boosted"] = {{"base_margin", model.boosted.base_margin},
                      {"learning_rate", model.boosted.learning_rate},
                      {"trees", boosted_trees}};
    doc["meta"] = {{"weights", model.meta_weights},
                   {"bias", model.meta_bias},
                   {"threshold", model.threshold},
                   {"includes_raw", model.meta_includes_raw},
                   {"raw_mean", model.raw_mean},
                   {"raw_std", model.raw_std}};
    return doc.dump();
}

ClassifierModel model_from_json(const std::string& json_text) {
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw Error(ErrorKind::MalformedRecord, "classifier model file is not a JSON object");
    }
    auto need = [&doc](const char* key) -> const json& {
        if (!doc.contains(key)) {
            throw Error(ErrorKind::SchemaViolation,
                        std::string("model is missing field ") + key);
        }
        return doc[key];
    };

    ClassifierModel model;
    const json& version = need("format_version");
    if (!version.is_number_integer() || version.get<int>() != 1) {
        throw Error(ErrorKind::SchemaViolation, "unsupported model format_version");
    }

    const json& fc = need("feature_config");
    if (!fc.is_object() || !fc.contains("embedding_dim") ||
        !fc["embedding_dim"].is_number_integer()) {
        throw Error(ErrorKind::SchemaViolation, "feature_config.embedding_dim is missing");
    }
    model.feature_config.embedding_dim = fc["embedding_dim"].get<int>();
    if (model.feature_config.embedding_dim <= 0) {
        throw Error(ErrorKind::SchemaViolation, "feature_config.embedding_dim must be > 0");
    }
    model.feature_config.slot_idf =
        doubles_from_json(fc.value("slot_idf", json::array()), "feature_config.slot_idf");

    const json& forest = need("forest");
    if (!forest.is_object() || !forest.contains("trees") || !forest["trees"].is_array()) {
        throw Error(ErrorKind::SchemaViolation, "forest.trees is missing");
    }
    for (const json& t : forest["trees"]) {
        model.forest.trees.push_back(tree_from_json(t, "forest tree"));
    }

    const json& boosted = need("boosted");
    if (!boosted.is_object() || !boosted.contains("trees") || !boosted["trees"].is_array() ||
        !boosted.contains("base_margin") || !boosted["base_margin"].is_number() ||
        !boosted.contains("learning_rate") || !boosted["learning_rate"].is_number()) {
        throw Error(ErrorKind::SchemaViolation, "boosted block is malformed");
    }
    model.boosted.base_margin = boosted["base_margin"].get<double>();
    model.boosted.learning_rate = boosted["learning_rate"].get<double>();
    for (const json& t : boosted["trees"]) {
        model.boosted.trees.push_back(tree_from_json(t, "boosted tree"));
    }

    const json& meta = need("meta");
    if (!meta.is_object() || !meta.contains("weights") || !meta.contains("bias") ||
        !meta["bias"].is_number() || !meta.contains("threshold") ||
        !meta["threshold"].is_number()) {
        throw Error(ErrorKind::SchemaViolation, "meta block is malformed");
    }
    model.meta_weights = doubles_from_json(meta["weights"], "meta.weights");
    model.meta_bias = meta["bias"].get<double>();
    model.threshold = meta["threshold"].get<double>();
    if (!(model.threshold > 0.0 && model.threshold < 1.0)) {
        throw Error(ErrorKind::SchemaViolation, "meta.threshold must lie in (0,1)");
    }
    model.meta_includes_raw = meta.value("includes_raw", false);
    model.raw_mean = doubles_from_json(meta.value("raw_mean", json::array()), "meta.raw_mean");
    model.raw_std = doubles_from_json(meta.value("raw_std", json::array()), "meta.raw_std");

    const std::size_t expected = 2 + (model.meta_includes_raw ? model.raw_mean.size() : 0);
    if (model.meta_weights.size() != expected) {
        throw Error(ErrorKind::SchemaViolation,
                    "meta.weights length " + std::to_string(model.meta_weights.size()) +
                        " does not match expected " + std::to_string(expected));
    }
    return model;
}

void save_model(const ClassifierModel& model, const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out.is_open()) {
        throw Error(ErrorKind::IoFailure, "cannot write model file " + path.string());
    }
    out << model_to_json(model) << '\n';
    out.flush();
    if (!out.good()) {
        throw Error(ErrorKind::IoFailure, "short write to model file " + path.string());
    }
}

ClassifierModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.is_open()) {
        throw Error(ErrorKind::IoFailure, "cannot read model file " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

std::vector<TrainingExample> load_training_data(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.is_open()) {
        throw Error(ErrorKind::IoFailure, "cannot read training data " + path.string());
    }
    std::vector<TrainingExample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) {
            throw Error(ErrorKind::MalformedRecord,
                        "training line " + std::to_string(line_no) + " is not a JSON object");
        }
        if (!rec.contains("text") || !rec["text"].is_string() || !rec.contains("label") ||
            !rec["label"].is_string()) {
            throw Error(ErrorKind::SchemaViolation,
                        "training line " + std::to_string(line_no) +
                            " needs string fields text and label");
        }
        TrainingExample ex;
        ex.text = rec["text"].get<std::string>();
        auto kind = question_kind_from_string(rec["label"].get<std::string>());
        if (!kind) {
            throw Error(ErrorKind::SchemaViolation,
                        "training line " + std::to_string(line_no) +
                            " label must be direct or sequential");
        }
        ex.label = *kind;
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace medhop::classify
