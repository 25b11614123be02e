#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace medhop::trees {

// Thin deterministic layer over mt19937_64. std::*_distribution is avoided on
// purpose: its output is implementation-defined, and model training must
// reproduce bit-for-bit from a seed across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Index in [0, n). n must be > 0.
    std::size_t uniform_index(std::size_t n) { return next_u64() % n; }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform_unit() {
        return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
    }

private:
    std::mt19937_64 engine_;
};

double sigmoid(double z);

// Flat node pool; node 0 is the root. feature == -1 marks a leaf, whose
// payload sits in `value` (a class probability for forest trees, an additive
// margin contribution for boosted trees).
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict(const std::vector<double>& x) const;
};

using Matrix = std::vector<std::vector<double>>;

struct ForestParams {
    int tree_count = 100;
    int max_depth = 6;
    int min_leaf = 2;
    std::uint64_t seed = 0;
};

// Bagged gini-split trees over bootstrap samples, sqrt(F) features per node.
// Each tree draws from its own Rng seeded seed + tree index, so per-tree
// training is order-independent and reproducible.
struct ForestModel {
    std::vector<Tree> trees;

    // Mean of per-tree leaf probabilities: P(label == 1).
    double predict_proba(const std::vector<double>& x) const;
};

ForestModel train_forest(const Matrix& x, const std::vector<double>& y,
                         const ForestParams& params);

struct BoostedParams {
    int tree_count = 100;
    int max_depth = 6;
    int min_leaf = 2;
    double learning_rate = 0.1;
    double l2_lambda = 1.0;
    std::uint64_t seed = 0;
};

// Gradient-boosted trees on logistic loss: per round, g = p - y and
// h = p(1-p) drive second-order gain splits, leaves carry -G/(H+lambda).
struct BoostedModel {
    double base_margin = 0.0;
    double learning_rate = 0.1;
    std::vector<Tree> trees;

    double predict_margin(const std::vector<double>& x) const;
    double predict_proba(const std::vector<double>& x) const;
};

BoostedModel train_boosted(const Matrix& x, const std::vector<double>& y,
                           const BoostedParams& params);

}  // namespace medhop::trees
