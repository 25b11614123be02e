#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace medhop::features {

// Hashed-embedding settings plus the per-slot idf weights fitted on training
// text. An empty slot_idf means "unfitted": every slot weighs 1.0.
struct FeatureConfig {
    int embedding_dim = 256;
    std::vector<double> slot_idf;
};

// Named count maps plus the hashed embedding. The maps are ordered, so
// flattened() emits a stable layout: linguistic counts (sorted by name),
// structural counts (sorted by name), then the embedding.
struct FeatureVector {
    std::map<std::string, double> linguistic;
    std::map<std::string, double> structural;
    std::vector<double> embedding;

    std::vector<double> flattened() const;
};

std::uint64_t fnv1a64(std::string_view data);

// Deterministic, pure: identical text yields an identical vector. Degenerate
// text yields zero counts and a zero embedding.
FeatureVector extract_features(const std::string& text, const FeatureConfig& config);

// Smoothed inverse document frequency per hash slot over the training texts:
// idf = ln((1+N)/(1+df)) + 1, df counting texts with at least one token in
// the slot.
std::vector<double> fit_slot_idf(const std::vector<std::string>& texts, int embedding_dim);

}  // namespace medhop::features
