#include "medhop/normalize.hpp"

#include "medhop/errors.hpp"
#include "medhop/text.hpp"

#include <cctype>
#include <ostream>
#include <set>

namespace medhop::normalize {

namespace {

std::string first_token_core(const std::string& s) {
    const std::vector<std::string> tokens = text::whitespace_tokens(s);
    if (tokens.empty()) return {};
    std::string core = text::lowercase(tokens.front());
    std::size_t begin = 0, end = core.size();
    while (begin < end && !std::isalnum(static_cast<unsigned char>(core[begin]))) ++begin;
    while (end > begin && !std::isalnum(static_cast<unsigned char>(core[end - 1]))) --end;
    return core.substr(begin, end - begin);
}

bool is_auxiliary(const std::string& core) {
    static const std::set<std::string> kAux = {
        "is",  "are",  "was",  "were", "be",   "do",    "does", "did",   "has", "have",
        "had", "can",  "could", "will", "would", "shall", "should", "may", "might", "must"};
    return kAux.count(core) > 0;
}

bool is_wh(const std::string& core) {
    static const std::set<std::string> kWh = {"what", "which", "who",  "whom", "whose",
                                              "where", "when",  "why", "how"};
    return kWh.count(core) > 0;
}

// Trim + strip surrounding quotes and trailing sentence punctuation until
// stable: one pass is not idempotent ('"answer."' needs two rounds).
std::string strip_to_fixpoint(const std::string& input) {
    std::string s = text::trim(input);
    bool changed = true;
    while (changed && !s.empty()) {
        changed = false;
        static const std::string kQuotes = "\"'`";
        if (kQuotes.find(s.front()) != std::string::npos &&
            kQuotes.find(s.back()) != std::string::npos && s.size() >= 2) {
            s = text::trim(s.substr(1, s.size() - 2));
            changed = true;
            continue;
        }
        // Curly quotes arrive as 3-byte UTF-8 sequences (U+2018..U+201D).
        auto is_curly_at = [&s](std::size_t i) {
            return i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xe2 &&
                   static_cast<unsigned char>(s[i + 1]) == 0x80 &&
                   static_cast<unsigned char>(s[i + 2]) >= 0x98 &&
                   static_cast<unsigned char>(s[i + 2]) <= 0x9d;
        };
        if (s.size() >= 6 && is_curly_at(0) && is_curly_at(s.size() - 3)) {
            s = text::trim(s.substr(3, s.size() - 6));
            changed = true;
            continue;
        }
        static const std::string kTrailing = ".?!,;:";
        if (kTrailing.find(s.back()) != std::string::npos) {
            s.pop_back();
            s = text::trim(s);
            changed = true;
        }
    }
    return s;
}

const std::set<std::string>& stopwords() {
    static const std::set<std::string> kWords = {"a",  "an",  "the", "of",  "in",  "on",
                                                 "at", "by",  "for", "to",  "and", "or",
                                                 "with", "from", "as", "is", "are", "was",
                                                 "were"};
    return kWords;
}

std::set<std::string> content_tokens(const std::string& s) {
    std::set<std::string> out;
    for (const std::string& term : text::term_tokens(s)) {
        if (!stopwords().count(term)) out.insert(term);
    }
    return out;
}

}  // namespace

const char* to_string(KindHint k) {
    switch (k) {
        case KindHint::YesNo: return "yes_no";
        case KindHint::Entity: return "entity";
        case KindHint::Numeric: return "numeric";
        case KindHint::Unknown: return "unknown";
    }
    return "unknown";
}

KindHint derive_kind_hint(const std::string& sub_question) {
    const std::vector<std::string> tokens = text::whitespace_tokens(sub_question);
    if (tokens.empty()) return KindHint::Unknown;
    const std::string first = first_token_core(sub_question);
    if (first == "how" && tokens.size() >= 2) {
        const std::string second = text::lowercase(tokens[1]);
        if (second.rfind("many", 0) == 0 || second.rfind("much", 0) == 0) {
            return KindHint::Numeric;
        }
    }
    if (is_auxiliary(first)) return KindHint::YesNo;
    if (is_wh(first)) return KindHint::Entity;
    return KindHint::Unknown;
}

std::string apply_format_rules(const std::string& short_answer, KindHint hint) {
    std::string s = text::collapse_whitespace(strip_to_fixpoint(short_answer));

    if (hint == KindHint::YesNo) {
        const std::string lead = first_token_core(s);
        if (lead == "yes") return "Yes";
        if (lead == "no") return "No";
        throw Error(ErrorKind::UnverifiableAnswer,
                    "yes/no answer starts with \"" + lead + "\" instead of yes or no");
    }

    if (hint == KindHint::Entity) {
        // Leading articles drop to a fixpoint; an answer that IS an article
        // stays as-is rather than vanishing.
        bool stripped = true;
        while (stripped) {
            stripped = false;
            for (const char* article : {"a ", "an ", "the "}) {
                const std::size_t n = std::char_traits<char>::length(article);
                if (s.size() > n && text::lowercase(s.substr(0, n)) == article) {
                    s = text::trim(s.substr(n));
                    stripped = true;
                    break;
                }
            }
        }
    }
    return s;
}

std::string wikipedia_normalize(backends::WikiClient& client, const std::string& short_answer,
                                bool title_guard, std::ostream* log) {
    if (text::trim(short_answer).empty()) return short_answer;
    try {
        const std::vector<std::string> titles = client.search_titles(short_answer);
        if (titles.empty()) return short_answer;
        const std::string& title = titles.front();
        if (title_guard) {
            const std::set<std::string> answer_tokens = content_tokens(short_answer);
            bool shared = false;
            for (const std::string& t : content_tokens(title)) {
                if (answer_tokens.count(t)) {
                    shared = true;
                    break;
                }
            }
            if (!shared) return short_answer;
        }
        return title;
    } catch (const Error& e) {
        if (log) {
            *log << "title normalization skipped for \"" << short_answer
                 << "\": " << e.what() << '\n';
        }
        return short_answer;
    }
}

std::string normalize(backends::WikiClient& client, const std::string& short_answer,
                      KindHint hint, bool title_guard, std::ostream* log) {
    std::string s = apply_format_rules(short_answer, hint);
    if (hint == KindHint::Entity || hint == KindHint::Unknown) {
        s = wikipedia_normalize(client, s, title_guard, log);
        s = apply_format_rules(s, hint);
    }
    return s;
}

}  // namespace medhop::normalize
