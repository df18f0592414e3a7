#include <doctest.h>

#include <random>
#include <string>

#include "coa/format.hpp"
#include "oracles.hpp"

using namespace coa;

namespace {

const std::string kValid =
    "<general description>red shapes</general description><evidence>A; B</evidence>"
    "<thought>compare</thought><answer>grasper</answer>";

std::string random_body(std::mt19937_64& g) {
  static const std::string alphabet = "abcdefghij klmnop;,.-XYZ";
  std::uniform_int_distribution<int> len(1, 12);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::string s;
  const int n = len(g);
  for (int i = 0; i < n; ++i) s.push_back(alphabet[pick(g)]);
  std::string t(trim(s));
  return t.empty() ? "x" : t;
}

}  // namespace

TEST_CASE("minimal well-formed response parses") {
  auto r = parse_coa(kValid);
  REQUIRE(r);
  CHECK(*r.response == CoaResponse{"red shapes", "A; B", "compare", "grasper"});
  CHECK(r.report.valid());
}

TEST_CASE("surrounding whitespace is trimmed and layout is free") {
  auto r = parse_coa("  \n<general description>  g </general description>\n\n<evidence>e</evidence>\t"
                     "<thought>\nt\n</thought> <answer> a b </answer>\n");
  REQUIRE(r);
  CHECK(r.response->general_description == "g");
  CHECK(r.response->answer == "a b");
}

TEST_CASE("vanilla chain of thought lacks two sections") {
  auto r = parse_coa("<thought>x</thought><answer>y</answer>");
  CHECK_FALSE(r);
  CHECK(r.report.count(ViolationCode::MissingSection) == 2);
  CHECK(r.report.violations.size() == 2);
}

TEST_CASE("section order is enforced") {
  auto r = parse_coa(
      "<evidence>e</evidence><general description>g</general description><thought>t</thought><answer>a</answer>");
  CHECK_FALSE(r);
  REQUIRE(r.report.violations.size() == 1);
  CHECK(r.report.violations[0].code == ViolationCode::OrderViolation);
}

TEST_CASE("empty sections are invalid") {
  auto r = parse_coa(
      "<general description>g</general description><evidence>e</evidence><thought>t</thought><answer></answer>");
  CHECK_FALSE(r);
  REQUIRE(r.report.violations.size() == 1);
  CHECK(r.report.violations[0].code == ViolationCode::EmptySection);

  auto blank = parse_coa(
      "<general description>g</general description><evidence> \n </evidence><thought>t</thought><answer>a</answer>");
  CHECK(blank.report.count(ViolationCode::EmptySection) == 1);
}

TEST_CASE("violation codes for common defects") {
  SUBCASE("stray text") {
    auto r = parse_coa("Sure! " + kValid);
    CHECK(r.report.count(ViolationCode::StrayText) == 1);
    CHECK(r.report.violations[0].span == Span{0, 5});
  }
  SUBCASE("unclosed tag") {
    auto r = parse_coa("<general description>g</general description><evidence>e</evidence><thought>t"
                       "<answer>a</answer>");
    CHECK(r.report.count(ViolationCode::UnclosedTag) == 1);
  }
  SUBCASE("never closed") {
    auto r = parse_coa("<general description>g</general description><evidence>e</evidence><thought>t</thought>"
                       "<answer>a");
    CHECK(r.report.count(ViolationCode::UnclosedTag) == 1);
  }
  SUBCASE("closing tag with no opening") {
    auto r = parse_coa(kValid + "</answer>");
    CHECK(r.report.count(ViolationCode::UnclosedTag) == 1);
  }
  SUBCASE("unknown tag, including wrong case") {
    auto r = parse_coa("<general description>g</general description><evidence>e <b>x</b></evidence>"
                       "<thought>t</thought><Answer>a</Answer>");
    CHECK(r.report.count(ViolationCode::UnknownTag) == 4);
    CHECK(r.report.count(ViolationCode::MissingSection) == 1);
  }
  SUBCASE("duplicate answer") {
    auto r = parse_coa(kValid + "<answer>hook</answer>");
    CHECK(r.report.count(ViolationCode::DuplicateSection) == 1);
  }
  SUBCASE("length cap") {
    ParseOptions opts;
    opts.max_length = 10;
    auto r = parse_coa(kValid, opts);
    CHECK_FALSE(r);
  }
}

TEST_CASE("comparison operators in text are not tags") {
  auto r = parse_coa("<general description>a < b and c > d</general description><evidence>e</evidence>"
                     "<thought>1<2</thought><answer>a</answer>");
  CHECK(r);
}

TEST_CASE("extract_answer") {
  CHECK(extract_answer("<general description>g</general description><evidence>e</evidence><thought>t</thought>"
                       "<answer>grasper, hook</answer>") == "grasper, hook");
  try {
    extract_answer(kValid + "<answer>x</answer>");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.report().count(ViolationCode::DuplicateSection) == 1);
  }
  ParseOptions cot;
  cot.mode = FormatMode::Cot;
  CHECK(extract_answer("<thought>t</thought><answer>scissors</answer>", cot) == "scissors");
  CHECK_THROWS_AS(extract_answer(kValid, cot), FormatError);  // CoA-only tags are unknown in cot mode
}

TEST_CASE("render_coa canonical form") {
  CHECK(render_coa({"g", "e", "t", "a"}) ==
        "<general description>g</general description>\n<evidence>e</evidence>\n<thought>t</thought>\n<answer>a</answer>");
  CHECK(render_coa({"", "", "t", "a"}, FormatMode::Cot) == "<thought>t</thought>\n<answer>a</answer>");
  CHECK_THROWS_AS(render_coa({"g", "e", "", "a"}), std::invalid_argument);
  CHECK_THROWS_AS(render_coa({"g", "e", " t", "a"}), std::invalid_argument);
  CHECK_THROWS_AS(render_coa({"g", "e", "<answer>", "a"}), std::invalid_argument);
  CHECK_THROWS_AS(render_coa({"g", "e", "t", "a"}, FormatMode::Cot), std::invalid_argument);
}

TEST_CASE("round trip and mutation sensitivity on random responses") {
  std::mt19937_64 g(11);
  for (int iter = 0; iter < 500; ++iter) {
    CoaResponse r{random_body(g), random_body(g), random_body(g), random_body(g)};
    const std::string text = render_coa(r);
    auto parsed = parse_coa(text);
    REQUIRE(parsed);
    CHECK(*parsed.response == r);
    CHECK(extract_answer(text) == r.answer);

    // Deleting any one of the eight tags invalidates the response.
    std::size_t pos = 0;
    int deleted = 0;
    while ((pos = text.find('<', pos)) != std::string::npos) {
      const std::size_t close = text.find('>', pos);
      std::string mutated = text.substr(0, pos) + text.substr(close + 1);
      CHECK_FALSE(parse_coa(mutated));
      pos = close + 1;
      ++deleted;
    }
    CHECK(deleted == 8);
  }
}

TEST_CASE("parser totality on random input") {
  std::mt19937_64 g(5);
  const std::vector<std::string> pieces = {"<general description>", "</general description>", "<evidence>",
                                           "</evidence>", "<thought>", "</thought>", "<answer>", "</answer>",
                                           "<", ">", "/", " ", "\n", "x", "grasper", "<foo>", "\0"};
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  std::uniform_int_distribution<int> len(0, 20);
  for (int iter = 0; iter < 20000; ++iter) {
    std::string s;
    const int n = len(g);
    for (int i = 0; i < n; ++i) s += pieces[pick(g)];
    auto r = parse_coa(s);
    CHECK(r.response.has_value() == r.report.valid());
  }
}

TEST_CASE("lexicon scan") {
  const Lexicon lex({"duodenum", "grasper"});
  CHECK(lexicon_scan("a metal rod near pink tissue", lex).empty());

  const auto one = lexicon_scan("the grasper holds tissue", Lexicon({"grasper"}));
  REQUIRE(one.size() == 1);
  CHECK(one[0].term == "grasper");
  CHECK(one[0].span == Span{4, 11});

  CHECK(lexicon_scan("graspers and subgrasper", lex).empty());
  CHECK_THROWS_AS(Lexicon({"  "}), std::invalid_argument);
  CHECK(Lexicon({" Needle   Driver "}).terms() == std::vector<std::string>{"needle driver"});
}

TEST_CASE("lexicon scan agrees with the substring oracle") {
  const std::vector<std::string> terms = {"grasper", "needle driver", "hook", "clip applier"};
  const Lexicon lex(terms);

  auto compare = [&](const std::string& text) {
    const auto got = lexicon_scan(text, lex);
    const auto want = oracle::substring_scan(text, lex.terms());
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      bool found = false;
      for (const auto& w : want) found = found || (w.term == got[i].term && w.begin == got[i].span.begin && w.end == got[i].span.end);
      CHECK(found);
    }
    return got.size();
  };

  CHECK(compare("Grasper; GRASPER") == 2);
  CHECK(compare("a NEEDLE\n  driver and hooks, hook-like, clip applier.") == 3);

  std::mt19937_64 g(3);
  const std::vector<std::string> words = {"grasper", "Hook", "needle", "driver", "clip", "applier", "x", " ", "  ",
                                          ",", "\n", "-", "hooks"};
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  for (int iter = 0; iter < 300; ++iter) {
    std::string text;
    for (int i = 0; i < 8; ++i) text += words[pick(g)];
    compare(text);
  }
}

TEST_CASE("strictness knobs") {
  const std::string swapped =
      "<evidence>e</evidence><general description>g</general description><thought>t</thought><answer>a</answer>";
  ParseOptions loose;
  loose.require_order = false;
  auto r = parse_coa(swapped, loose);
  REQUIRE(r);
  CHECK(r.response->general_description == "g");
  CHECK(r.response->evidence == "e");

  const std::string empty =
      "<general description>g</general description><evidence> </evidence><thought>t</thought><answer>a</answer>";
  ParseOptions lenient;
  lenient.allow_empty = true;
  auto e = parse_coa(empty, lenient);
  REQUIRE(e);
  CHECK(e.response->evidence.empty());
  CHECK_FALSE(parse_coa(empty));
}
