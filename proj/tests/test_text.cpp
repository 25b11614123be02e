#include "medhop/text.hpp"

#include <doctest.h>

using namespace medhop;

TEST_CASE("token counting is whitespace-delimited") {
    CHECK(text::token_count("Is aspirin an NSAID?") == 4);
    CHECK(text::token_count("Why?") == 1);
    CHECK(text::token_count("") == 0);
    CHECK(text::token_count("   ") == 0);
    CHECK(text::token_count("  a\tb\nc  ") == 3);
    CHECK(text::token_count("hyphen-stays one-token") == 2);
}

TEST_CASE("trim and collapse") {
    CHECK(text::trim("  q  ") == "q");
    CHECK(text::trim("\t\n") == "");
    CHECK(text::collapse_whitespace("  a \t b\n\nc ") == "a b c");
    CHECK(text::collapse_whitespace("") == "");
    CHECK(text::collapse_whitespace("one") == "one");
}

TEST_CASE("whitespace tokens") {
    auto toks = text::whitespace_tokens(" alpha  beta\tgamma ");
    REQUIRE(toks.size() == 3);
    CHECK(toks[0] == "alpha");
    CHECK(toks[2] == "gamma");
}

TEST_CASE("term tokens split on non-alphanumerics and lowercase") {
    auto t = text::term_tokens("HFE gene");
    REQUIRE(t.size() == 2);
    CHECK(t[0] == "hfe");
    CHECK(t[1] == "gene");

    auto u = text::term_tokens("E. coli's O157:H7");
    REQUIRE(u.size() == 5);
    CHECK(u[0] == "e");
    CHECK(u[1] == "coli");
    CHECK(u[2] == "s");
    CHECK(u[3] == "o157");
    CHECK(u[4] == "h7");  // digits and letters stay glued: only non-alnum splits

    CHECK(text::term_tokens("...").empty());
}

TEST_CASE("sentence splitting needs punctuation, space, then uppercase") {
    auto s = text::split_sentences("E. coli causes infection. It spreads.");
    REQUIRE(s.size() == 2);
    CHECK(s[0] == "E. coli causes infection.");
    CHECK(s[1] == "It spreads.");

    auto t = text::split_sentences("What is PKU? How is it treated?");
    REQUIRE(t.size() == 2);
    CHECK(t[0] == "What is PKU?");

    // lowercase after the period: no boundary
    auto u = text::split_sentences("approx. ten people");
    REQUIRE(u.size() == 1);

    // paragraph break always splits
    auto v = text::split_sentences("alpha beta\n\ngamma");
    REQUIRE(v.size() == 2);
    CHECK(v[1] == "gamma");

    CHECK(text::split_sentences("   ").empty());

    // run of terminal punctuation stays with its sentence
    auto w = text::split_sentences("Really?! Yes.");
    REQUIRE(w.size() == 2);
    CHECK(w[0] == "Really?!");
}

TEST_CASE("nfc composes decomposed accents") {
    std::string decomposed = "cafe\xcc\x81";   // e + combining acute
    std::string composed = "caf\xc3\xa9";      // precomposed
    CHECK(text::nfc(decomposed) == composed);
    CHECK(text::nfc(composed) == composed);
    CHECK(text::nfc("plain") == "plain");
}

TEST_CASE("invalid utf-8 passes through untouched") {
    std::string bad = "ok\xffstill";
    CHECK_FALSE(text::is_valid_utf8(bad));
    CHECK(text::nfc(bad) == bad);
    CHECK(text::is_valid_utf8("caf\xc3\xa9"));
}

TEST_CASE("lowercase handles unicode") {
    CHECK(text::lowercase("TP53") == "tp53");
    CHECK(text::lowercase("CAF\xc3\x89") == "caf\xc3\xa9");  // É -> é
}

TEST_CASE("canonical answer strips surrounding quotes and punctuation to a fixpoint") {
    CHECK(text::canonical_answer("\"'Yes'.\"") == "yes");
    CHECK(text::canonical_answer("Chromosome 6") == "chromosome 6");
    CHECK(text::canonical_answer("  Chromosome   6 ") == "chromosome 6");
    CHECK(text::canonical_answer("chromosome 6.") == "chromosome 6");
    // curly quotes
    CHECK(text::canonical_answer("\xe2\x80\x9c\x4e\x6f\xe2\x80\x9d") == "no");
    // composed and decomposed forms agree
    CHECK(text::canonical_answer("cafe\xcc\x81") == text::canonical_answer("caf\xc3\xa9"));
    CHECK(text::canonical_answer("") == "");
    CHECK(text::canonical_answer("...") == "");
}

TEST_CASE("canonical answer is idempotent") {
    const char* samples[] = {"\"'Yes'.\"", "Chromosome 6", "  a  b ", "...", "caf\xc3\xa9!",
                             "'nested \"quotes\"'"};
    for (const char* s : samples) {
        auto once = text::canonical_answer(s);
        CHECK(text::canonical_answer(once) == once);
    }
}
