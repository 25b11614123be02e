#include "medhop/features.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace medhop;

namespace {

features::FeatureConfig dim_only(int dim) {
    features::FeatureConfig cfg;
    cfg.embedding_dim = dim;
    return cfg;
}

}  // namespace

TEST_CASE("hand-counted features for a short yes/no question") {
    auto fv = features::extract_features("Is aspirin an NSAID?", dim_only(16));
    CHECK(fv.structural.at("token_count") == 4.0);
    CHECK(fv.structural.at("char_count") == 20.0);
    CHECK(fv.structural.at("clause_marker_count") == 0.0);
    CHECK(fv.structural.at("capitalized_span_count") == 2.0);  // "Is", "NSAID?"
    CHECK(fv.linguistic.at("wh_word_count") == 0.0);
    CHECK(fv.linguistic.at("subordinator_count") == 0.0);
    CHECK(fv.linguistic.at("comparative_marker_count") == 0.0);
    CHECK(fv.linguistic.at("verb_like_count") == 1.0);  // "is"
    // no question word at all: ratio takes its maximum
    CHECK(fv.structural.at("question_word_position_ratio") == 1.0);
}

TEST_CASE("question-initial wh word scores ratio zero") {
    auto fv = features::extract_features("Why?", dim_only(16));
    CHECK(fv.structural.at("token_count") == 1.0);
    CHECK(fv.linguistic.at("wh_word_count") == 1.0);
    CHECK(fv.structural.at("question_word_position_ratio") == 0.0);
}

TEST_CASE("subordinators, comparatives, and clause markers are counted") {
    auto fv = features::extract_features(
        "Which gene, mutated in the disorder that causes iron overload, is largest?",
        dim_only(16));
    CHECK(fv.linguistic.at("wh_word_count") == 1.0);       // which
    CHECK(fv.linguistic.at("subordinator_count") == 2.0);  // which, that
    CHECK(fv.linguistic.at("comparative_marker_count") == 1.0);  // largest
    CHECK(fv.structural.at("clause_marker_count") == 2.0);       // two commas
    CHECK(fv.linguistic.at("verb_like_count") == 2.0);           // mutated, is
}

TEST_CASE("char count is codepoints, not bytes") {
    auto fv = features::extract_features("caf\xc3\xa9?", dim_only(4));
    CHECK(fv.structural.at("char_count") == 5.0);
}

TEST_CASE("degenerate text yields zero counts and a zero embedding") {
    auto fv = features::extract_features("", dim_only(8));
    CHECK(fv.structural.at("token_count") == 0.0);
    CHECK(fv.structural.at("question_word_position_ratio") == 1.0);
    for (double v : fv.embedding) CHECK(v == 0.0);
}

TEST_CASE("fnv1a64 matches its published constants") {
    CHECK(features::fnv1a64("") == 14695981039346656037ull);
    // one iteration by hand: (offset ^ 'a') * prime
    CHECK(features::fnv1a64("a") == (14695981039346656037ull ^ 'a') * 1099511628211ull);
    CHECK(features::fnv1a64("gene") == features::fnv1a64("gene"));
    CHECK(features::fnv1a64("gene") != features::fnv1a64("genf"));
}

TEST_CASE("unfitted embedding is an L2-normalized term histogram") {
    const int dim = 64;
    auto fv = features::extract_features("gene gene protein", dim_only(dim));
    auto gene_slot = static_cast<std::size_t>(features::fnv1a64("gene") % dim);
    auto protein_slot = static_cast<std::size_t>(features::fnv1a64("protein") % dim);
    REQUIRE(gene_slot != protein_slot);

    const double norm = std::sqrt(2.0 * 2.0 + 1.0 * 1.0);
    CHECK(fv.embedding[gene_slot] == doctest::Approx(2.0 / norm).epsilon(1e-12));
    CHECK(fv.embedding[protein_slot] == doctest::Approx(1.0 / norm).epsilon(1e-12));

    double total = 0;
    for (double v : fv.embedding) total += v * v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("identical text always produces an identical vector") {
    auto a = features::extract_features("Which chromosome carries HFE?", dim_only(256));
    auto b = features::extract_features("Which chromosome carries HFE?", dim_only(256));
    CHECK(a.flattened() == b.flattened());
}

TEST_CASE("flattened layout is linguistic, structural, then embedding") {
    auto fv = features::extract_features("Is aspirin an NSAID?", dim_only(8));
    auto flat = fv.flattened();
    REQUIRE(flat.size() == 4 + 5 + 8);
    // linguistic keys in map order
    CHECK(flat[0] == fv.linguistic.at("comparative_marker_count"));
    CHECK(flat[1] == fv.linguistic.at("subordinator_count"));
    CHECK(flat[2] == fv.linguistic.at("verb_like_count"));
    CHECK(flat[3] == fv.linguistic.at("wh_word_count"));
    // structural keys in map order
    CHECK(flat[4] == fv.structural.at("capitalized_span_count"));
    CHECK(flat[5] == fv.structural.at("char_count"));
    CHECK(flat[6] == fv.structural.at("clause_marker_count"));
    CHECK(flat[7] == fv.structural.at("question_word_position_ratio"));
    CHECK(flat[8] == fv.structural.at("token_count"));
    CHECK(flat[9] == fv.embedding[0]);
}

TEST_CASE("slot idf follows the smoothed formula per hash slot") {
    const int dim = 64;
    std::vector<std::string> texts = {"gene", "gene protein"};
    auto idf = features::fit_slot_idf(texts, dim);
    REQUIRE(idf.size() == static_cast<std::size_t>(dim));

    // reconstruct expected document frequencies from the same hash
    std::vector<double> df(dim, 0.0);
    auto slot_of = [&](const char* t) {
        return static_cast<std::size_t>(features::fnv1a64(t) % dim);
    };
    df[slot_of("gene")] += 1.0;  // text 1
    std::set<std::size_t> second = {slot_of("gene"), slot_of("protein")};
    for (auto s : second) df[s] += 1.0;

    for (int s = 0; s < dim; ++s) {
        double expect = std::log((1.0 + 2.0) / (1.0 + df[s])) + 1.0;
        CHECK(idf[s] == doctest::Approx(expect).epsilon(1e-12));
    }

    // a fitted config reweights the embedding
    features::FeatureConfig cfg;
    cfg.embedding_dim = dim;
    cfg.slot_idf = idf;
    auto weighted = features::extract_features("protein", cfg);
    auto unweighted = features::extract_features("protein", dim_only(dim));
    // single-term vectors stay unit length either way
    CHECK(weighted.embedding[slot_of("protein")] ==
          doctest::Approx(unweighted.embedding[slot_of("protein")]).epsilon(1e-12));
}
