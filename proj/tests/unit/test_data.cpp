#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>

#include "coa/data.hpp"
#include "coa/io.hpp"
#include "oracles.hpp"

using namespace coa;

namespace {

std::vector<std::string> endovis_classes() {
  return {"background tissue", "instrument shaft", "instrument clasper", "instrument wrist", "kidney parenchyma",
          "covered kidney", "thread", "clamps", "suturing needle", "suction instrument"};
}

std::vector<QaRecord> numbered_records(std::size_t n) {
  std::vector<QaRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    QaRecord r;
    r.id = "f" + std::to_string(i);
    r.image = r.id + ".png";
    r.dataset = "generic";
    r.question = "q";
    r.vocabulary = {"a", "b"};
    r.answer_set = {"a"};
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("annotation conversion") {
  const Vocabulary v("generic", {"grasper", "hook", "scissors"});
  const std::vector<AnnotationFrame> frames = {
      {"f2", "b.png", {"Hook ", "GRASPER"}, std::nullopt},
      {"f1", "a.png", {}, std::string("test")},
      {"f3", "c.png", {"stapler", "hook"}, std::nullopt},
      {"f1", "d.png", {"hook"}, std::nullopt},
      {"f4", "e.png", {"hook"}, std::string("val")},
  };
  const auto r = convert_annotations(frames, v, kDefaultQuestionTemplate);
  REQUIRE(r.records.size() == 2);
  CHECK(r.records[0].id == "f1");
  CHECK(r.records[0].answer_set.empty());
  CHECK(r.records[0].split == "test");
  CHECK(r.records[1].id == "f2");
  CHECK(r.records[1].answer_set == std::vector<std::string>{"grasper", "hook"});
  CHECK(r.records[1].vocabulary == v.entries());
  CHECK(r.records[1].question.find("grasper") != std::string::npos);
  REQUIRE(r.errors.size() == 3);
  CHECK(r.records.size() + r.errors.size() == frames.size());
  const auto unmapped = std::find_if(r.errors.begin(), r.errors.end(), [](auto& e) { return e.frame_id == "f3"; });
  REQUIRE(unmapped != r.errors.end());
  CHECK(unmapped->unmapped_labels == std::vector<std::string>{"stapler"});
  for (const auto& rec : r.records) CHECK_NOTHROW(validate(rec));
}

TEST_CASE("conversion is total on random frames") {
  const Vocabulary v("generic", {"a", "b", "c"});
  std::mt19937_64 g(8);
  const std::vector<std::string> labels = {"a", "B ", "c", "d", ""};
  std::uniform_int_distribution<std::size_t> pick(0, labels.size() - 1), id(0, 30), len(0, 3);
  std::vector<AnnotationFrame> frames;
  for (int i = 0; i < 200; ++i) {
    AnnotationFrame f{"f" + std::to_string(id(g)), "x.png", {}, std::nullopt};
    for (std::size_t k = len(g); k > 0; --k) f.labels.push_back(labels[pick(g)]);
    frames.push_back(f);
  }
  const auto r = convert_annotations(frames, v, "{dataset}: {candidates}");
  CHECK(r.records.size() + r.errors.size() == frames.size());
  CHECK(std::is_sorted(r.records.begin(), r.records.end(), [](auto& a, auto& b) { return a.id < b.id; }));
}

TEST_CASE("known datasets enforce their vocabulary size") {
  auto classes = endovis_classes();
  const Vocabulary ok("endovis2018", classes);
  CHECK(convert_annotations({{"f", "i", {"thread"}, std::nullopt}}, ok, kDefaultQuestionTemplate).records.size() == 1);
  classes.pop_back();
  CHECK_THROWS_AS(convert_annotations({}, Vocabulary("endovis2018", classes), kDefaultQuestionTemplate),
                  std::invalid_argument);

  QaRecord rec;
  rec.id = "x";
  rec.dataset = "cholect50";
  for (int i = 0; i < 28; ++i) rec.vocabulary.push_back("class " + std::to_string(i));
  CHECK_NOTHROW(validate(rec));
  rec.vocabulary.pop_back();
  CHECK_THROWS_AS(validate(rec), std::invalid_argument);
  rec.vocabulary.push_back("class 27");
  rec.answer_set = {"not a class"};
  CHECK_THROWS_AS(validate(rec), std::invalid_argument);
}

TEST_CASE("seeded split") {
  const auto recs = numbered_records(3000);
  const auto a = sample_split(recs, {2000, 1000, 42});
  CHECK(a.train.size() == 2000);
  CHECK(a.test.size() == 1000);
  std::set<std::string> ids;
  for (const auto& r : a.train) {
    CHECK(r.split == "train");
    ids.insert(r.id);
  }
  for (const auto& r : a.test) {
    CHECK(r.split == "test");
    ids.insert(r.id);
  }
  CHECK(ids.size() == 3000);
  CHECK(sample_split(recs, {2000, 1000, 42}).train == a.train);
  CHECK(sample_split(recs, {2000, 1000, 43}).train != a.train);

  const auto b = sample_split(recs, {100, 50, 1});
  CHECK(b.train.size() + b.test.size() == 150);
  CHECK(sample_split(recs, {0, 3000, 1}).test.size() == 3000);
  CHECK(sample_split(recs, {0, 0, 1}).train.empty());
  CHECK_THROWS_AS(sample_split(recs, {2001, 1000, 1}), std::invalid_argument);
}

TEST_CASE("largest-remainder apportionment") {
  CHECK(apportion(10000, {0.375, 0.375, 0.25}) == std::vector<std::size_t>{3750, 3750, 2500});
  CHECK(apportion(10, {0.375, 0.375, 0.25}) == std::vector<std::size_t>{4, 4, 2});
  CHECK(oracle::best_rounding(10000, {3, 3, 2}) == std::vector<std::size_t>{3750, 3750, 2500});
  CHECK(oracle::best_rounding(10, {3, 3, 2}) == std::vector<std::size_t>{4, 4, 2});
  CHECK(apportion(45, {0.5, 0.3, 0.2}) == std::vector<std::size_t>{23, 13, 9});
  CHECK(apportion(0, {0.5, 0.5}) == std::vector<std::size_t>{0, 0});
  CHECK_THROWS_AS(apportion(5, {0.5, 0.4}), std::invalid_argument);
  CHECK_THROWS_AS(apportion(5, {}), std::invalid_argument);

  std::mt19937_64 g(6);
  std::uniform_int_distribution<std::size_t> n(0, 500), k(1, 5);
  std::uniform_int_distribution<int> w(0, 8);
  for (int iter = 0; iter < 500; ++iter) {
    std::vector<int> weights(k(g));
    int total = 0;
    for (auto& x : weights) total += (x = w(g));
    if (total == 0) continue;
    std::vector<double> ratios;
    for (int x : weights) ratios.push_back(static_cast<double>(x) / total);
    const std::size_t items = n(g);
    CHECK(apportion(items, ratios) == oracle::best_rounding(items, {weights.begin(), weights.end()}));
  }
}

TEST_CASE("cold-start manifest") {
  std::vector<ColdStartImage> images;
  for (int i = 0; i < 10000; ++i) images.push_back({"img" + std::to_string(i) + ".jpg", "video " + std::to_string(i % 37)});
  const auto m = build_cold_start_manifest(images, kColdStartRatios, 5, default_cold_start_templates());
  REQUIRE(m.size() == 10000);
  std::array<std::size_t, 3> counts{};
  for (const auto& r : m) ++counts[static_cast<std::size_t>(r.question_type)];
  CHECK(counts == std::array<std::size_t, 3>{3750, 3750, 2500});
  CHECK(m[0].id == "cs-000000");
  CHECK(m[9999].id == "cs-009999");
  CHECK(m[3].question.find(m[3].title) != std::string::npos);
  CHECK(m == build_cold_start_manifest(images, kColdStartRatios, 5, default_cold_start_templates()));
  CHECK(m != build_cold_start_manifest(images, kColdStartRatios, 6, default_cold_start_templates()));

  const std::vector<ColdStartImage> ten(images.begin(), images.begin() + 10);
  std::array<std::size_t, 3> small{};
  for (const auto& r : build_cold_start_manifest(ten, kColdStartRatios, 1, default_cold_start_templates())) {
    ++small[static_cast<std::size_t>(r.question_type)];
  }
  CHECK(small == std::array<std::size_t, 3>{4, 4, 2});
  CHECK_THROWS_AS(build_cold_start_manifest({}, kColdStartRatios, 1, default_cold_start_templates()),
                  std::invalid_argument);
}

TEST_CASE("cold-start import") {
  const std::vector<ColdStartImage> images = {{"a.jpg", "t"}, {"b.jpg", "t"}, {"c.jpg", "t"}};
  const auto m = build_cold_start_manifest(images, kColdStartRatios, 1, default_cold_start_templates());
  const std::string good = render_coa({"g", "e", "t", "a"});
  const auto r = import_cold_start_responses(
      m, {{m[0].id, good}, {m[1].id, "<thought>t</thought><answer>a</answer>"}, {"cs-999999", good}});
  CHECK(r.accepted == 1);
  CHECK(r.records[0].response == good);
  CHECK_FALSE(r.records[1].response);
  REQUIRE(r.rejects.size() == 1);
  CHECK(r.rejects[0].id == m[1].id);
  CHECK(r.rejects[0].report.count(ViolationCode::MissingSection) == 2);
  CHECK(r.orphans == std::vector<std::string>{"cs-999999"});
  CHECK_THROWS_AS(import_cold_start_responses(m, {{m[0].id, good}, {m[0].id, good}}), std::invalid_argument);
}

TEST_CASE("records round trip through JSON Lines") {
  auto recs = numbered_records(3);
  recs[1].extra = {{"source", "frame 12"}, {"weights", {1, 2}}};
  const auto dir = std::filesystem::temp_directory_path() / "coa_test_data";
  const auto path = dir / "records.jsonl";
  write_qa_records(path, recs);
  CHECK(read_qa_records(path) == recs);
  std::filesystem::remove_all(dir);

  const auto rows = parse_jsonl("{\"id\":\"x\"}\n\n{\"id\":\"y\"}\n", "mem");
  CHECK(rows.size() == 2);
  CHECK_THROWS_AS(parse_jsonl("{\"id\":\"x\"}\n[1]\n", "mem"), InputError);
  CHECK_THROWS_AS(parse_jsonl("{oops\n", "mem"), InputError);
  CHECK_THROWS_AS(qa_record_from_json(json{{"id", "x"}}), InputError);
}
