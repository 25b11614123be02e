#include "medhop/trees.hpp"

#include "medhop/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace medhop::trees {

double sigmoid(double z) {
    // Split on the sign so neither branch exponentiates a large positive
    // value, then clamp away the saturated endpoints: beyond |z| ~ 37 the
    // quotient rounds to exactly 0 or 1, and downstream log-loss as well as
    // probability consumers rely on the open interval.
    double p;
    if (z >= 0.0) {
        p = 1.0 / (1.0 + std::exp(-z));
    } else {
        const double e = std::exp(z);
        p = e / (1.0 + e);
    }
    if (p <= 0.0) return std::numeric_limits<double>::denorm_min();
    if (p >= 1.0) return std::nextafter(1.0, 0.0);
    return p;
}

double Tree::predict(const std::vector<double>& x) const {
    int node = 0;
    while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const TreeNode& n = nodes[static_cast<std::size_t>(node)];
        node = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(node)].value;
}

namespace {

enum class SplitObjective { Gini, GradHess };

struct Builder {
    const Matrix& x;
    const std::vector<double>& y;  // Gini targets (0/1)
    const std::vector<double>& g;  // GradHess gradients
    const std::vector<double>& h;  // GradHess hessians
    SplitObjective objective;
    int max_depth;
    int min_leaf;
    int mtry;  // features examined per node; 0 means all
    double l2_lambda;
    Rng& rng;
    std::vector<int> feature_pool;  // scratch for per-node feature sampling

    double leaf_value(const std::vector<std::size_t>& rows) const {
        if (objective == SplitObjective::Gini) {
            double pos = 0;
            for (std::size_t r : rows) pos += y[r];
            return rows.empty() ? 0.0 : pos / static_cast<double>(rows.size());
        }
        double gs = 0, hs = 0;
        for (std::size_t r : rows) {
            gs += g[r];
            hs += h[r];
        }
        return -gs / (hs + l2_lambda);
    }

    bool pure(const std::vector<std::size_t>& rows) const {
        if (objective != SplitObjective::Gini) return false;
        for (std::size_t r : rows) {
            if (y[r] != y[rows.front()]) return false;
        }
        return true;
    }

    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double score = 0.0;  // impurity decrease / gain; higher is better
    };

    // Candidate features for this node, in a deterministic sampled order.
    std::vector<int> sample_features() {
        const int f_count = static_cast<int>(x[0].size());
        if (mtry <= 0 || mtry >= f_count) {
            std::vector<int> all(static_cast<std::size_t>(f_count));
            std::iota(all.begin(), all.end(), 0);
            return all;
        }
        feature_pool.resize(static_cast<std::size_t>(f_count));
        std::iota(feature_pool.begin(), feature_pool.end(), 0);
        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(mtry));
        for (int i = 0; i < mtry; ++i) {
            std::size_t j = static_cast<std::size_t>(i) +
                            rng.uniform_index(static_cast<std::size_t>(f_count - i));
            std::swap(feature_pool[static_cast<std::size_t>(i)], feature_pool[j]);
            out.push_back(feature_pool[static_cast<std::size_t>(i)]);
        }
        return out;
    }

    Split best_split(const std::vector<std::size_t>& rows) {
        Split best;
        const double n = static_cast<double>(rows.size());

        double parent_gini = 0, total_g = 0, total_h = 0, total_pos = 0;
        if (objective == SplitObjective::Gini) {
            for (std::size_t r : rows) total_pos += y[r];
            const double p = total_pos / n;
            parent_gini = 1.0 - p * p - (1.0 - p) * (1.0 - p);
        } else {
            for (std::size_t r : rows) {
                total_g += g[r];
                total_h += h[r];
            }
        }

        std::vector<std::pair<double, std::size_t>> ordered;
        ordered.reserve(rows.size());
        for (int f : sample_features()) {
            ordered.clear();
            for (std::size_t r : rows) ordered.emplace_back(x[r][static_cast<std::size_t>(f)], r);
            std::sort(ordered.begin(), ordered.end());
            if (ordered.front().first == ordered.back().first) continue;

            double left_pos = 0, left_g = 0, left_h = 0;
            for (std::size_t k = 0; k + 1 < ordered.size(); ++k) {
                const std::size_t r = ordered[k].second;
                if (objective == SplitObjective::Gini) {
                    left_pos += y[r];
                } else {
                    left_g += g[r];
                    left_h += h[r];
                }
                if (ordered[k].first == ordered[k + 1].first) continue;
                const double nl = static_cast<double>(k + 1);
                const double nr = n - nl;
                if (nl < min_leaf || nr < min_leaf) continue;

                double score;
                if (objective == SplitObjective::Gini) {
                    const double pl = left_pos / nl;
                    const double pr = (total_pos - left_pos) / nr;
                    const double gini_l = 1.0 - pl * pl - (1.0 - pl) * (1.0 - pl);
                    const double gini_r = 1.0 - pr * pr - (1.0 - pr) * (1.0 - pr);
                    score = parent_gini - (nl / n) * gini_l - (nr / n) * gini_r;
                } else {
                    const double rg = total_g - left_g;
                    const double rh = total_h - left_h;
                    score = 0.5 * (left_g * left_g / (left_h + l2_lambda) +
                                   rg * rg / (rh + l2_lambda) -
                                   total_g * total_g / (total_h + l2_lambda));
                }
                if (score > best.score + 1e-12) {
                    best.feature = f;
                    best.threshold = (ordered[k].first + ordered[k + 1].first) / 2.0;
                    best.score = score;
                }
            }
        }
        return best;
    }

    int build(Tree& tree, const std::vector<std::size_t>& rows, int depth) {
        const int me = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        const bool must_leaf = depth >= max_depth ||
                               rows.size() < 2 * static_cast<std::size_t>(min_leaf) ||
                               pure(rows);
        Split split;
        if (!must_leaf) split = best_split(rows);
        if (must_leaf || split.feature < 0) {
            tree.nodes[static_cast<std::size_t>(me)].value = leaf_value(rows);
            return me;
        }

        // Partition with the exact predicate predict() uses, so a threshold
        // that rounds onto a sample value cannot desynchronize the two.
        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : rows) {
            if (x[r][static_cast<std::size_t>(split.feature)] < split.threshold) {
                left_rows.push_back(r);
            } else {
                right_rows.push_back(r);
            }
        }
        if (left_rows.empty() || right_rows.empty()) {
            tree.nodes[static_cast<std::size_t>(me)].value = leaf_value(rows);
            return me;
        }

        tree.nodes[static_cast<std::size_t>(me)].feature = split.feature;
        tree.nodes[static_cast<std::size_t>(me)].threshold = split.threshold;
        const int left = build(tree, left_rows, depth + 1);
        const int right = build(tree, right_rows, depth + 1);
        tree.nodes[static_cast<std::size_t>(me)].left = left;
        tree.nodes[static_cast<std::size_t>(me)].right = right;
        return me;
    }
};

void check_training_input(const Matrix& x, const std::vector<double>& y) {
    if (x.empty() || x.size() != y.size()) {
        throw Error(ErrorKind::InsufficientData, "training matrix and labels disagree");
    }
    for (const auto& row : x) {
        if (row.size() != x[0].size()) {
            throw Error(ErrorKind::DimensionMismatch, "ragged training matrix");
        }
    }
    if (x[0].empty()) {
        throw Error(ErrorKind::DimensionMismatch, "training rows have zero features");
    }
}

}  // namespace

double ForestModel::predict_proba(const std::vector<double>& x) const {
    if (trees.empty()) return 0.5;
    double sum = 0;
    for (const Tree& t : trees) sum += t.predict(x);
    return sum / static_cast<double>(trees.size());
}

ForestModel train_forest(const Matrix& x, const std::vector<double>& y,
                         const ForestParams& params) {
    check_training_input(x, y);
    const std::size_t n = x.size();
    const int f_count = static_cast<int>(x[0].size());
    const int mtry = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(f_count))));

    ForestModel model;
    model.trees.reserve(static_cast<std::size_t>(params.tree_count));
    static const std::vector<double> kNone;
    for (int t = 0; t < params.tree_count; ++t) {
        Rng rng(params.seed + static_cast<std::uint64_t>(t));
        std::vector<std::size_t> bootstrap(n);
        for (std::size_t i = 0; i < n; ++i) bootstrap[i] = rng.uniform_index(n);

        Builder b{x, y, kNone, kNone, SplitObjective::Gini,
                  params.max_depth, params.min_leaf, mtry, 0.0, rng, {}};
        Tree tree;
        b.build(tree, bootstrap, 0);
        model.trees.push_back(std::move(tree));
    }
    return model;
}

double BoostedModel::predict_margin(const std::vector<double>& x) const {
    double margin = base_margin;
    for (const Tree& t : trees) margin += learning_rate * t.predict(x);
    return margin;
}

double BoostedModel::predict_proba(const std::vector<double>& x) const {
    return sigmoid(predict_margin(x));
}

BoostedModel train_boosted(const Matrix& x, const std::vector<double>& y,
                           const BoostedParams& params) {
    check_training_input(x, y);
    const std::size_t n = x.size();

    double prior = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    prior = std::clamp(prior, 1e-6, 1.0 - 1e-6);

    BoostedModel model;
    model.base_margin = std::log(prior / (1.0 - prior));
    model.learning_rate = params.learning_rate;
    model.trees.reserve(static_cast<std::size_t>(params.tree_count));

    std::vector<double> margin(n, model.base_margin);
    std::vector<double> grad(n), hess(n);
    std::vector<std::size_t> all_rows(n);
    std::iota(all_rows.begin(), all_rows.end(), 0);
    static const std::vector<double> kNone;

    for (int t = 0; t < params.tree_count; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(margin[i]);
            grad[i] = p - y[i];
            hess[i] = std::max(p * (1.0 - p), 1e-12);
        }
        Rng rng(params.seed + static_cast<std::uint64_t>(t));
        Builder b{x, kNone, grad, hess, SplitObjective::GradHess,
                  params.max_depth, params.min_leaf, 0, params.l2_lambda, rng, {}};
        Tree tree;
        b.build(tree, all_rows, 0);
        for (std::size_t i = 0; i < n; ++i) {
            margin[i] += params.learning_rate * tree.predict(x[i]);
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

}  // namespace medhop::trees
