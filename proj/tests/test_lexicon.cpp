#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>

#include "r4style/error.hpp"
#include "r4style/lexicon.hpp"
#include "r4style/random.hpp"
#include "test_support.hpp"

using namespace r4style;
using r4style::testing::TempDir;

namespace {

const char* kFunctionWords = "funct\tit,is,a\n";

std::vector<std::string> toks(std::initializer_list<const char*> l) { return {l.begin(), l.end()}; }

}  // namespace

TEST_CASE("vocabulary keeps file order") {
  TempDir dir("lex");
  const auto vocab = load_vocabulary(dir.write("v.txt", "noisy\nroom\n"));
  CHECK(vocab.size() == 2);
  CHECK(vocab.index("noisy") == 0);
  CHECK(vocab.index("room") == 1);
}

TEST_CASE("vocabulary rejects duplicates, empty files and multi-word lines") {
  TempDir dir("lex");
  CHECK_THROWS_AS(load_vocabulary(dir.write("dup.txt", "a\na\n")), ValidationError);
  CHECK_THROWS_AS(load_vocabulary(dir.write("dup2.txt", "Room\nroom\n")), ValidationError);
  CHECK_THROWS_AS(load_vocabulary(dir.write("empty.txt", "")), ValidationError);
  CHECK_THROWS_AS(load_vocabulary(dir.write("blank.txt", "\n\n")), ValidationError);
  CHECK_THROWS_AS(load_vocabulary(dir.write("two.txt", "red wine\n")), ParseError);
  CHECK_THROWS_AS(load_vocabulary(dir / "missing.txt"), IoError);
}

TEST_CASE("vocabulary of 18,749 words") {
  TempDir dir("lex");
  std::string text;
  for (int i = 0; i < 18749; ++i) text += "w" + std::to_string(i) + "\n";
  const auto vocab = load_vocabulary(dir.write("big.txt", text));
  CHECK(vocab.size() == 18749);
  CHECK(vocab.index("w18748") == 18748);
}

TEST_CASE("vocabulary lowercases and handles CRLF") {
  TempDir dir("lex");
  const auto vocab = load_vocabulary(dir.write("v.txt", "Noisy\r\nRÖTLICH\r\n"));
  CHECK(vocab.word(0) == "noisy");
  CHECK(vocab.word(1) == "rötlich");
}

TEST_CASE("category lexicon parsing") {
  SUBCASE("single category with exact patterns") {
    const auto lex = parse_category_lexicon(kFunctionWords);
    REQUIRE(lex.size() == 1);
    CHECK(lex.categories()[0].name == "funct");
    CHECK(lex.categories()[0].patterns.size() == 3);
    for (const auto& p : lex.categories()[0].patterns) CHECK_FALSE(p.prefix);
  }
  SUBCASE("74 categories") {
    std::string text = "# generated\n";
    for (int i = 0; i < 74; ++i) text += "cat" + std::to_string(i) + "\tw" + std::to_string(i) + ",x*\n";
    CHECK(parse_category_lexicon(text).size() == 74);
  }
  SUBCASE("comments, blank lines, uppercase patterns") {
    const auto lex = parse_category_lexicon("# header\n\nposemo\tGood,Happ*\n");
    REQUIRE(lex.size() == 1);
    CHECK(lex.categories()[0].patterns[0].text == "good");
    CHECK(lex.categories()[0].patterns[1].text == "happ");
    CHECK(lex.categories()[0].patterns[1].prefix);
  }
  SUBCASE("errors carry the line number") {
    try {
      parse_category_lexicon("a\tx\nb x\n", "lex.txt");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(std::string(e.what()).find("lex.txt:2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_category_lexicon("a\tx\na\ty\n"), ParseError);
    CHECK_THROWS_AS(parse_category_lexicon("a\tx,,y\n"), ParseError);
    CHECK_THROWS_AS(parse_category_lexicon("a\te*t\n"), ParseError);
    CHECK_THROWS_AS(parse_category_lexicon("a\t*\n"), ParseError);
    CHECK_THROWS_AS(parse_category_lexicon("\tx\n"), ParseError);
  }
}

TEST_CASE("prefix patterns agree with a plain prefix test") {
  // Oracle: std::string::compare over a tiny hand lexicon.
  const auto lex = parse_category_lexicon("ingest\teat*,drink\nverb\teat,go*\n");
  const std::vector<std::string> words{"eat", "eating", "eats", "drink", "drinks", "go", "going", "ate", "e", "beat"};
  for (const auto& w : words) {
    std::vector<std::size_t> expected;
    if (w.compare(0, 3, "eat") == 0 || w == "drink") expected.push_back(0);
    if (w == "eat" || w.compare(0, 2, "go") == 0) expected.push_back(1);
    CHECK_MESSAGE(lex.match(w) == expected, w);
  }
  CHECK(LexiconPattern{"eat", true}.matches("eating"));
  CHECK_FALSE(LexiconPattern{"eat", false}.matches("eating"));
}

TEST_CASE("one-hot targets") {
  const SensorialVocabulary vocab({"bright", "noisy", "cold", "room", "sweet"});
  const auto noisy = one_hot("noisy", vocab).dense();
  const auto room = one_hot("room", vocab).dense();
  CHECK(noisy == (Eigen::VectorXd(5) << 0, 1, 0, 0, 0).finished());
  CHECK(room == (Eigen::VectorXd(5) << 0, 0, 0, 1, 0).finished());
  CHECK(noisy.lpNorm<1>() == 1.0);
  CHECK_THROWS_AS(one_hot("quiet", vocab), UnknownWordError);
}

TEST_CASE("style vector of the worked example") {
  const auto lex = parse_category_lexicon(kFunctionWords);
  const auto sentence = toks({"it", "is", "a", "noisy", "room"});
  const auto for_room = style_vector(sentence, 4, lex);
  const auto for_noisy = style_vector(sentence, 3, lex);
  CHECK(for_room.denom == 4);
  CHECK(for_room.values(0) == 0.75);
  CHECK(for_noisy.values(0) == 0.75);
}

TEST_CASE("style vector counts other sensorial words and overlapping categories") {
  const auto lex = parse_category_lexicon("sense\tnoisy,room\nfunct\tit,is,a\nall\tit*,noi*\n");
  const auto s = style_vector(toks({"it", "is", "a", "noisy", "room"}), 4, lex);
  CHECK(s.values(0) == 0.25);  // "noisy" still counts
  CHECK(s.values(1) == 0.75);
  CHECK(s.values(2) == 0.5);   // "it" and "noisy" contribute to two categories each
}

TEST_CASE("degenerate sentences") {
  const auto lex = parse_category_lexicon(kFunctionWords);
  CHECK_THROWS_AS(style_vector(toks({"noisy"}), 0, lex), DegenerateSentenceError);
  CHECK_THROWS_AS(style_vector(toks({"a", "b"}), 2, lex), ValidationError);
}

TEST_CASE("style vector properties on random sentences") {
  const auto lex = parse_category_lexicon("c0\ta,b\nc1\ta*,c\nc2\td\nc3\tzz*\n");
  const std::vector<std::string> pool{"a", "ab", "b", "c", "d", "e", "zzz", "q"};
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> sent(2 + rng.index(10));
    for (auto& w : sent) w = pool[rng.index(pool.size())];
    const auto target = rng.index(sent.size());
    const auto s = style_vector(sent, target, lex);
    REQUIRE(s.denom == sent.size() - 1);
    for (Eigen::Index i = 0; i < s.values.size(); ++i) {
      CHECK(s.values(i) >= 0.0);
      CHECK(s.values(i) <= 1.0);
      const double count = s.values(i) * static_cast<double>(s.denom);
      CHECK(count == doctest::Approx(std::round(count)).epsilon(1e-12));
    }
    // Permuting the non-target tokens leaves the vector unchanged.
    auto others = sent;
    const auto tword = others[target];
    others.erase(others.begin() + static_cast<std::ptrdiff_t>(target));
    std::reverse(others.begin(), others.end());
    others.insert(others.begin(), tword);
    CHECK(style_vector(others, 0, lex).values == s.values);
  }
}
