#include "medhop/trees.hpp"

#include "medhop/errors.hpp"
#include "support/checks.hpp"

#include <doctest.h>

#include <cmath>

using namespace medhop;
using medhop::testing::expect_error;

namespace {

// Two well-separated clusters in 2D: label 1 sits near (1,1), label 0 near
// (0,0), with a little deterministic jitter.
void make_clusters(int n, trees::Matrix& x, std::vector<double>& y) {
    trees::Rng rng(7);
    for (int i = 0; i < n; ++i) {
        double label = (i % 2 == 0) ? 1.0 : 0.0;
        double cx = label == 1.0 ? 1.0 : 0.0;
        x.push_back({cx + 0.2 * (rng.uniform_unit() - 0.5),
                     cx + 0.2 * (rng.uniform_unit() - 0.5)});
        y.push_back(label);
    }
}

}  // namespace

TEST_CASE("sigmoid hits its frozen reference values") {
    CHECK(trees::sigmoid(0.0) == 0.5);
    CHECK(trees::sigmoid(1.0) == doctest::Approx(0.7310585786300049).epsilon(1e-12));
    CHECK(trees::sigmoid(-1.0) == doctest::Approx(1.0 - 0.7310585786300049).epsilon(1e-12));
    CHECK(trees::sigmoid(2.0) == doctest::Approx(0.8807970779778823).epsilon(1e-12));
}

TEST_CASE("sigmoid stays strictly inside (0,1) at extremes") {
    for (double z : {-1000.0, -50.0, 0.0, 50.0, 1000.0}) {
        double p = trees::sigmoid(z);
        CHECK(p > 0.0);
        CHECK(p < 1.0);
    }
}

TEST_CASE("rng is deterministic per seed and uniform_unit stays in range") {
    trees::Rng a(42), b(42), c(43);
    bool all_equal = true;
    for (int i = 0; i < 100; ++i) {
        all_equal = all_equal && a.next_u64() == b.next_u64();
    }
    CHECK(all_equal);
    CHECK(trees::Rng(42).next_u64() != c.next_u64());

    trees::Rng r(1);
    for (int i = 0; i < 1000; ++i) {
        double u = r.uniform_unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    trees::Rng idx(2);
    for (int i = 0; i < 100; ++i) CHECK(idx.uniform_index(7) < 7);
}

TEST_CASE("a hand-built tree routes on x[feature] < threshold") {
    trees::Tree tree;
    tree.nodes = {
        {0, 0.5, 1, 2, 0.0},   // root: x[0] < 0.5 ? node1 : node2
        {-1, 0.0, -1, -1, 0.1},
        {1, 2.0, 3, 4, 0.0},   // x[1] < 2.0 ? node3 : node4
        {-1, 0.0, -1, -1, 0.7},
        {-1, 0.0, -1, -1, 0.9},
    };
    CHECK(tree.predict({0.4, 99.0}) == 0.1);
    CHECK(tree.predict({0.5, 1.0}) == 0.7);   // boundary goes right
    CHECK(tree.predict({0.6, 2.0}) == 0.9);
    CHECK(tree.predict({0.6, 1.99}) == 0.7);
}

TEST_CASE("forest separates two clusters and is seed-deterministic") {
    trees::Matrix x;
    std::vector<double> y;
    make_clusters(60, x, y);

    trees::ForestParams params;
    params.tree_count = 30;
    params.seed = 5;
    auto model = trees::train_forest(x, y, params);
    CHECK(model.trees.size() == 30);

    CHECK(model.predict_proba({1.0, 1.0}) > 0.8);
    CHECK(model.predict_proba({0.0, 0.0}) < 0.2);

    auto again = trees::train_forest(x, y, params);
    for (const auto& point : x) {
        CHECK(model.predict_proba(point) == again.predict_proba(point));
    }
}

TEST_CASE("boosted model separates the clusters and emits calibrated-side probabilities") {
    trees::Matrix x;
    std::vector<double> y;
    make_clusters(60, x, y);

    trees::BoostedParams params;
    params.tree_count = 40;
    params.seed = 5;
    auto model = trees::train_boosted(x, y, params);
    CHECK(model.trees.size() == 40);

    CHECK(model.predict_proba({1.0, 1.0}) > 0.8);
    CHECK(model.predict_proba({0.0, 0.0}) < 0.2);
    for (const auto& point : x) {
        double p = model.predict_proba(point);
        CHECK(p > 0.0);
        CHECK(p < 1.0);
        CHECK(trees::sigmoid(model.predict_margin(point)) == p);
    }

    auto again = trees::train_boosted(x, y, params);
    for (const auto& point : x) {
        CHECK(model.predict_proba(point) == again.predict_proba(point));
    }
}

TEST_CASE("boosted base margin is the logit of the clamped class prior") {
    trees::Matrix x = {{0.0}, {1.0}, {0.1}, {0.9}};
    std::vector<double> y = {0.0, 1.0, 0.0, 1.0};
    trees::BoostedParams params;
    params.tree_count = 1;
    auto model = trees::train_boosted(x, y, params);
    CHECK(model.base_margin == doctest::Approx(std::log(0.5 / 0.5)).epsilon(1e-12));

    std::vector<double> skewed_y = {1.0, 1.0, 1.0, 0.0};
    auto skewed = trees::train_boosted(x, skewed_y, params);
    CHECK(skewed.base_margin == doctest::Approx(std::log(0.75 / 0.25)).epsilon(1e-12));
}

TEST_CASE("degenerate training input is rejected") {
    expect_error([] { trees::train_forest({}, {}, {}); }, ErrorKind::InsufficientData);
    expect_error([] { trees::train_forest({{1.0}}, {1.0, 0.0}, {}); },
                 ErrorKind::InsufficientData);
    expect_error([] { trees::train_forest({{1.0}, {1.0, 2.0}}, {1.0, 0.0}, {}); },
                 ErrorKind::DimensionMismatch);
    expect_error([] { trees::train_boosted({{}, {}}, {1.0, 0.0}, {}); },
                 ErrorKind::DimensionMismatch);
}

TEST_CASE("constant labels yield constant predictions, not crashes") {
    trees::Matrix x = {{0.0}, {0.5}, {1.0}, {0.2}};
    std::vector<double> y = {1.0, 1.0, 1.0, 1.0};
    auto forest = trees::train_forest(x, y, {});
    CHECK(forest.predict_proba({0.3}) == 1.0);

    auto boosted = trees::train_boosted(x, y, {});
    CHECK(boosted.predict_proba({0.3}) > 0.9);
}
