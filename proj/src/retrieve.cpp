#include "medhop/retrieve.hpp"

#include "medhop/errors.hpp"
#include "medhop/text.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

namespace medhop::retrieve {

std::string build_search_query(const std::string& sub_query, const std::string& anchor) {
    const std::string q = text::collapse_whitespace(text::trim(sub_query));
    const std::string a = text::collapse_whitespace(text::trim(anchor));
    if (q.empty()) return a;
    if (a.empty()) return q;
    return q + " " + a;
}

std::vector<backends::SearchResult> search(backends::SearchBackend& backend,
                                           const std::string& query, int limit) {
    if (text::trim(query).empty()) return {};
    limit = std::clamp(limit, 1, 10);
    std::vector<backends::SearchResult> results = backend.search(query, limit);
    if (static_cast<int>(results.size()) > limit) {
        results.resize(static_cast<std::size_t>(limit));
    }
    return results;
}

namespace {

std::string percent_decode(const std::string& s) {
    auto hex_value = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size()) {
            const int hi = hex_value(s[i + 1]), lo = hex_value(s[i + 2]);
            if (hi >= 0 && lo >= 0) {
                out.push_back(static_cast<char>(hi * 16 + lo));
                i += 2;
                continue;
            }
        }
        out.push_back(s[i]);
    }
    return out;
}

}  // namespace

std::optional<std::string> wikipedia_title_from_link(const std::string& link) {
    auto scheme_end = link.find("://");
    if (scheme_end == std::string::npos) return std::nullopt;
    auto host_end = link.find('/', scheme_end + 3);
    if (host_end == std::string::npos) return std::nullopt;
    const std::string host = link.substr(scheme_end + 3, host_end - scheme_end - 3);
    if (host.find("wikipedia.org") == std::string::npos) return std::nullopt;

    static const std::string kPrefix = "/wiki/";
    if (link.compare(host_end, kPrefix.size(), kPrefix) != 0) return std::nullopt;
    std::string rest = link.substr(host_end + kPrefix.size());
    if (auto cut = rest.find_first_of("?#"); cut != std::string::npos) rest.resize(cut);
    if (rest.empty()) return std::nullopt;

    std::string title = percent_decode(rest);
    std::replace(title.begin(), title.end(), '_', ' ');
    return title;
}

std::vector<std::string> fetch_wikipedia(backends::WikiClient& client,
                                         const std::vector<backends::SearchResult>& results,
                                         const std::string& query, int max_articles,
                                         std::ostream* log) {
    std::vector<std::string> titles;
    std::set<std::string> seen;
    for (const auto& r : results) {
        if (auto title = wikipedia_title_from_link(r.link)) {
            if (seen.insert(*title).second) titles.push_back(*title);
        }
    }
    if (titles.empty()) {
        try {
            std::vector<std::string> hits = client.search_titles(query);
            if (!hits.empty()) titles.push_back(hits.front());
        } catch (const Error& e) {
            if (log) *log << "wiki search failed for \"" << query << "\": " << e.what() << '\n';
        }
    }

    std::vector<std::string> texts;
    for (const std::string& title : titles) {
        if (static_cast<int>(texts.size()) >= max_articles) break;
        try {
            std::string body = client.page_text(title);
            if (!text::trim(body).empty()) texts.push_back(std::move(body));
        } catch (const Error& e) {
            if (log) *log << "wiki fetch failed for \"" << title << "\": " << e.what() << '\n';
        }
    }
    return texts;
}

std::vector<RankedSentence> rank_sentences_tfidf(const std::vector<std::string>& sentences,
                                                 const std::string& query) {
    if (sentences.empty()) return {};
    const double n = static_cast<double>(sentences.size());

    // Document frequency over the sentence corpus; the vocabulary is the
    // corpus's, so query-only terms play no part.
    std::vector<std::map<std::string, double>> tf(sentences.size());
    std::map<std::string, double> df;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        for (const std::string& term : text::term_tokens(sentences[i])) {
            tf[i][term] += 1.0;
        }
        for (const auto& [term, count] : tf[i]) {
            (void)count;
            df[term] += 1.0;
        }
    }
    std::map<std::string, double> idf;
    for (const auto& [term, d] : df) {
        idf[term] = std::log((1.0 + n) / (1.0 + d)) + 1.0;
    }

    auto weigh = [&idf](std::map<std::string, double>& vec) {
        double norm_sq = 0.0;
        for (auto& [term, w] : vec) {
            w *= idf.at(term);
            norm_sq += w * w;
        }
        if (norm_sq > 0.0) {
            const double inv = 1.0 / std::sqrt(norm_sq);
            for (auto& [term, w] : vec) w *= inv;
        }
    };

    std::map<std::string, double> query_vec;
    for (const std::string& term : text::term_tokens(query)) {
        if (df.count(term)) query_vec[term] += 1.0;
    }
    weigh(query_vec);

    std::vector<RankedSentence> ranked;
    ranked.reserve(sentences.size());
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        weigh(tf[i]);
        double dot = 0.0;
        for (const auto& [term, w] : query_vec) {
            auto it = tf[i].find(term);
            if (it != tf[i].end()) dot += w * it->second;
        }
        RankedSentence rs;
        rs.sentence = sentences[i];
        rs.score = std::min(dot, 1.0);  // clamp accumulated rounding above 1
        rs.source_order = static_cast<int>(i);
        ranked.push_back(std::move(rs));
    }
    // Stable sort on descending score: equal scores keep ascending
    // source_order because the input is already in source order.
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const RankedSentence& a, const RankedSentence& b) {
                         return a.score > b.score;
                     });
    return ranked;
}

std::vector<std::string> select_top_sentences(const std::vector<RankedSentence>& ranked,
                                              int token_budget, int max_sentences) {
    std::vector<std::string> out;
    if (token_budget <= 0) return out;
    int used = 0;
    for (const RankedSentence& rs : ranked) {
        if (max_sentences > 0 && static_cast<int>(out.size()) >= max_sentences) break;
        const int t = static_cast<int>(text::token_count(rs.sentence));
        if (used + t > token_budget) break;  // first skip ends selection
        out.push_back(rs.sentence);
        used += t;
    }
    return out;
}

ContextBundle assemble_context(const std::vector<std::string>& snippets,
                               const std::vector<std::string>& wiki_sentences,
                               int token_budget) {
    ContextBundle bundle;
    std::set<std::string> snippet_keys;
    for (const std::string& s : snippets) {
        if (bundle.snippets.size() >= 10) break;
        bundle.snippets.push_back(s);
        snippet_keys.insert(text::nfc(s));
    }

    int used = 0;
    for (const std::string& s : wiki_sentences) {
        if (snippet_keys.count(text::nfc(s))) continue;  // exact duplicate of a snippet
        const int t = static_cast<int>(text::token_count(s));
        if (used + t > token_budget) break;  // budget safety net, same greedy rule
        bundle.wiki_sentences.push_back(s);
        used += t;
    }
    bundle.wiki_token_count = used;
    return bundle;
}

}  // namespace medhop::retrieve
