#include "medhop/features.hpp"

#include "medhop/text.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <set>

namespace medhop::features {

namespace {

const std::set<std::string>& wh_lexicon() {
    static const std::set<std::string> kWords = {"what", "which", "who",  "whom", "whose",
                                                 "where", "when",  "why", "how"};
    return kWords;
}

const std::set<std::string>& subordinator_lexicon() {
    static const std::set<std::string> kWords = {"that",  "which",  "whose",  "where",
                                                 "when",  "after",  "before", "caused",
                                                 "associated", "related"};
    return kWords;
}

const std::set<std::string>& comparative_lexicon() {
    static const std::set<std::string> kWords = {"most",     "least",    "first",   "largest",
                                                 "smallest", "earliest", "latest"};
    return kWords;
}

const std::set<std::string>& auxiliary_lexicon() {
    static const std::set<std::string> kWords = {
        "is",  "are",  "was",  "were",  "be",   "been",   "being", "do",  "does", "did",
        "has", "have", "had",  "can",   "could", "will",  "would", "shall", "should",
        "may", "might", "must"};
    return kWords;
}

// The comparable core of a whitespace token: lowercase, outer punctuation
// stripped ("NSAID?" -> "nsaid"). Interior punctuation stays.
std::string token_core(const std::string& token) {
    std::string lowered = text::lowercase(token);
    std::size_t begin = 0, end = lowered.size();
    while (begin < end && !std::isalnum(static_cast<unsigned char>(lowered[begin]))) ++begin;
    while (end > begin && !std::isalnum(static_cast<unsigned char>(lowered[end - 1]))) --end;
    return lowered.substr(begin, end - begin);
}

bool verb_like(const std::string& core) {
    if (auxiliary_lexicon().count(core)) return true;
    static const std::array<const char*, 6> kSuffixes = {"ing", "ed", "ate", "ify", "ise", "ize"};
    for (const char* sfx : kSuffixes) {
        std::size_t n = std::char_traits<char>::length(sfx);
        if (core.size() > n && core.compare(core.size() - n, n, sfx) == 0) return true;
    }
    return false;
}

std::size_t codepoint_count(const std::string& text) {
    std::size_t n = 0;
    for (unsigned char c : text) {
        if ((c & 0xc0) != 0x80) ++n;  // count non-continuation bytes
    }
    return n;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::vector<double> FeatureVector::flattened() const {
    std::vector<double> out;
    out.reserve(linguistic.size() + structural.size() + embedding.size());
    for (const auto& [k, v] : linguistic) out.push_back(v);
    for (const auto& [k, v] : structural) out.push_back(v);
    out.insert(out.end(), embedding.begin(), embedding.end());
    return out;
}

FeatureVector extract_features(const std::string& raw_text, const FeatureConfig& config) {
    FeatureVector fv;
    const std::vector<std::string> tokens = text::whitespace_tokens(raw_text);

    double wh = 0, subordinators = 0, comparatives = 0, verbs = 0;
    long first_wh = -1;
    std::size_t cap_spans = 0;
    bool in_cap_span = false;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::string core = token_core(tokens[i]);
        if (wh_lexicon().count(core)) {
            wh += 1;
            if (first_wh < 0) first_wh = static_cast<long>(i);
        }
        if (subordinator_lexicon().count(core)) subordinators += 1;
        if (comparative_lexicon().count(core)) comparatives += 1;
        if (!core.empty() && verb_like(core)) verbs += 1;

        bool capitalized = !tokens[i].empty() && tokens[i][0] >= 'A' && tokens[i][0] <= 'Z';
        if (capitalized && !in_cap_span) ++cap_spans;
        in_cap_span = capitalized;
    }

    fv.linguistic["wh_word_count"] = wh;
    fv.linguistic["subordinator_count"] = subordinators;
    fv.linguistic["comparative_marker_count"] = comparatives;
    fv.linguistic["verb_like_count"] = verbs;

    double clause_markers = 0;
    for (char c : raw_text) {
        if (c == ',' || c == ';' || c == ':') clause_markers += 1;
    }
    const double token_count = static_cast<double>(tokens.size());
    fv.structural["token_count"] = token_count;
    fv.structural["char_count"] = static_cast<double>(codepoint_count(raw_text));
    fv.structural["clause_marker_count"] = clause_markers;
    fv.structural["capitalized_span_count"] = static_cast<double>(cap_spans);
    // A question-initial WH token scores 0; text without any WH token scores
    // the maximal 1.0 (there is no early question word at all).
    double ratio = 1.0;
    if (first_wh >= 0) {
        ratio = static_cast<double>(first_wh) / std::max(1.0, token_count - 1.0);
    }
    fv.structural["question_word_position_ratio"] = ratio;

    const int dim = config.embedding_dim;
    fv.embedding.assign(static_cast<std::size_t>(dim), 0.0);
    if (dim > 0) {
        for (const std::string& term : text::term_tokens(raw_text)) {
            auto slot = static_cast<std::size_t>(fnv1a64(term) % static_cast<std::uint64_t>(dim));
            fv.embedding[slot] += 1.0;
        }
        const bool fitted = config.slot_idf.size() == static_cast<std::size_t>(dim);
        double norm_sq = 0.0;
        for (std::size_t s = 0; s < fv.embedding.size(); ++s) {
            if (fitted) fv.embedding[s] *= config.slot_idf[s];
            norm_sq += fv.embedding[s] * fv.embedding[s];
        }
        if (norm_sq > 0.0) {
            const double inv = 1.0 / std::sqrt(norm_sq);
            for (double& v : fv.embedding) v *= inv;
        }
    }
    return fv;
}

std::vector<double> fit_slot_idf(const std::vector<std::string>& texts, int embedding_dim) {
    std::vector<double> df(static_cast<std::size_t>(std::max(embedding_dim, 0)), 0.0);
    if (embedding_dim <= 0) return df;
    for (const std::string& t : texts) {
        std::set<std::size_t> seen;
        for (const std::string& term : text::term_tokens(t)) {
            seen.insert(static_cast<std::size_t>(fnv1a64(term) %
                                                 static_cast<std::uint64_t>(embedding_dim)));
        }
        for (std::size_t slot : seen) df[slot] += 1.0;
    }
    const double n = static_cast<double>(texts.size());
    std::vector<double> idf(df.size(), 1.0);
    for (std::size_t s = 0; s < df.size(); ++s) {
        idf[s] = std::log((1.0 + n) / (1.0 + df[s])) + 1.0;
    }
    return idf;
}

}  // namespace medhop::features
