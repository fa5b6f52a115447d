#include <doctest.h>

#include <cmath>
#include <random>

#include "../support.hpp"
#include "geoeval/error.hpp"
#include "geoeval/stratification.hpp"

using namespace geoeval;
using namespace geoeval::testing;

namespace {

CountryId c(const std::string& code) { return {code, code}; }

StratumAssignment label(const std::string& id, const std::string& who, UrbanRural ur, const std::string& biome) {
  return {id, who, ur, biome};
}

const std::vector<std::string> kTwo{"urban", "rural"};

}  // namespace

TEST_CASE("default prompt bank carries both families") {
  const auto bank = default_prompt_bank();
  validate(bank);
  CHECK(bank.urban_rural[0].prompt == "an urban city scene");
  CHECK(bank.urban_rural[1].prompt == "a rural countryside scene");
  CHECK(bank.biome_names() ==
        std::vector<std::string>{"Tropical", "Arid", "Temperate", "Mediterranean", "Tundra", "Boreal"});
  CHECK(bank.biomes[4].prompt == "a cold tundra, snow, or polar landscape");
  CHECK(*bank.find_biome("boreal") == "Boreal");
  CHECK_FALSE(bank.find_biome("Savanna"));
}

TEST_CASE("prompt bank file must define six distinct biomes") {
  TempDir dir;
  write_text(dir.file("bad.json"),
             R"({"urban_rural":[{"name":"urban","prompt":"u"},{"name":"rural","prompt":"r"}],
                 "biomes":[{"name":"Arid","prompt":"a"},{"name":"arid","prompt":"b"}]})");
  CHECK_THROWS_AS(load_prompt_bank(dir.file("bad.json")), Error);
}

TEST_CASE("zero-shot argmax and ties") {
  const EmbeddingMatrix prompts({"urban", "rural"}, 2, {1, 0, 0, 1});
  const EmbeddingMatrix images({"same", "tie"}, 2, {1, 0, static_cast<float>(M_SQRT1_2), static_cast<float>(M_SQRT1_2)});
  const auto out = zero_shot_label(images, prompts, kTwo);
  CHECK(out[0].category == 0);
  CHECK(out[0].confidence > 0.5);
  CHECK(out[1].category == 0);
  CHECK(out[1].confidence == doctest::Approx(0.5));
}

TEST_CASE("softmax confidence uses the fixed logit scale") {
  // Similarities 0.31 and 0.24 against two orthonormal prompts.
  const EmbeddingMatrix prompts({"urban", "rural"}, 3, {1, 0, 0, 0, 1, 0});
  const float z = std::sqrt(1.0f - 0.31f * 0.31f - 0.24f * 0.24f);
  const EmbeddingMatrix image({"x"}, 3, {0.31f, 0.24f, z});
  const auto out = zero_shot_label(image, prompts, kTwo);
  CHECK(out[0].category == 0);
  // 1 / (1 + exp(-100 * 0.07))
  CHECK(out[0].confidence == doctest::Approx(0.9990889488).epsilon(1e-6));
}

TEST_CASE("zero-shot labels are invariant to prompt rescaling after normalization") {
  std::mt19937_64 gen(43);
  const auto images = l2_normalize(random_matrix(gen, 30, 5));
  auto prompts = random_matrix(gen, 6, 5);
  const auto base = zero_shot_label(images, l2_normalize(prompts), default_prompt_bank().biome_names());
  auto data = prompts.data();
  for (auto& v : data) v *= 3.5f;
  prompts = EmbeddingMatrix(prompts.ids(), prompts.dim(), data);
  const auto scaled = zero_shot_label(images, l2_normalize(prompts), default_prompt_bank().biome_names());
  for (std::size_t i = 0; i < base.size(); ++i) CHECK(base[i].category == scaled[i].category);
}

TEST_CASE("import_labels validation") {
  TempDir dir;
  const auto bank = default_prompt_bank();
  write_text(dir.file("ok.jsonl"),
             R"({"sample_id":"a","labeller":"vlm","urban_rural":"Urban","biome":"Temperate"}
{"sample_id":"b","labeller":"vlm","urban_rural":"rural","biome":"arid","confidence":0.7}
)");
  const auto rows = import_labels(dir.file("ok.jsonl"), bank);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].urban_rural == UrbanRural::urban);
  CHECK(rows[1].biome == "Arid");
  CHECK(rows[1].biome_confidence == doctest::Approx(0.7));

  write_text(dir.file("savanna.jsonl"), R"({"sample_id":"a","labeller":"vlm","urban_rural":"urban","biome":"Savanna"})");
  CHECK_THROWS_AS(import_labels(dir.file("savanna.jsonl"), bank), Error);
  write_text(dir.file("dup.jsonl"),
             R"({"sample_id":"a","labeller":"vlm","urban_rural":"urban","biome":"Arid"}
{"sample_id":"a","labeller":"vlm","urban_rural":"rural","biome":"Arid"}
)");
  CHECK_THROWS_AS(import_labels(dir.file("dup.jsonl"), bank), Error);
  write_text(dir.file("ur.jsonl"), R"({"sample_id":"a","labeller":"vlm","urban_rural":"suburban","biome":"Arid"})");
  CHECK_THROWS_AS(import_labels(dir.file("ur.jsonl"), bank), Error);
}

TEST_CASE("consensus keeps unanimous samples only") {
  std::vector<SampleRecord> s{sample("x", c("AA")), sample("y", c("AA"))};
  std::vector<StratumAssignment> a{
      label("x", "l1", UrbanRural::urban, "Arid"), label("x", "l2", UrbanRural::rural, "Arid"),
      label("x", "l3", UrbanRural::urban, "Arid"), label("y", "l1", UrbanRural::urban, "Arid"),
      label("y", "l2", UrbanRural::urban, "Arid"), label("y", "l3", UrbanRural::urban, "Temperate")};
  const auto out = consensus_filter(s, a);
  REQUIRE(out.size() == 1);
  CHECK(out[0].sample_id == "x");
  CHECK(out[0].biome == "Arid");

  a.pop_back();
  CHECK_THROWS_AS(consensus_filter(s, a), Error);
  std::vector<StratumAssignment> two{label("x", "l1", UrbanRural::urban, "Arid"),
                                     label("x", "l2", UrbanRural::urban, "Arid")};
  CHECK_THROWS_AS(consensus_filter(std::span(s).first(1), two), Error);
}

TEST_CASE("consensus agrees with a recheck on random labels") {
  std::mt19937_64 gen(47);
  const auto names = default_prompt_bank().biome_names();
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + gen() % 40, labellers = 3 + gen() % 3;
    std::vector<SampleRecord> s;
    std::vector<StratumAssignment> a;
    std::vector<bool> unanimous(n, true);
    for (std::size_t i = 0; i < n; ++i) {
      s.push_back(sample(padded_id(i), c("AA")));
      std::string first;
      for (std::size_t l = 0; l < labellers; ++l) {
        const auto b = names[gen() % 2];
        if (l == 0) first = b;
        unanimous[i] = unanimous[i] && b == first;
        a.push_back(label(padded_id(i), "l" + std::to_string(l), UrbanRural::urban, b));
      }
    }
    std::shuffle(a.begin(), a.end(), gen);
    const auto out = consensus_filter(s, a);
    std::size_t expected = 0;
    for (bool u : unanimous) expected += u;
    CHECK(out.size() == expected);
    for (const auto& lbl : out) CHECK(unanimous[std::stoul(lbl.sample_id.substr(1))]);
  }
}

TEST_CASE("identical partitions give zero std") {
  std::vector<SampleRecord> s;
  PredictionMap p;
  std::vector<StratumAssignment> a;
  for (int i = 0; i < 6; ++i) {
    s.push_back(sample(padded_id(i), c("AA")));
    p[padded_id(i)] = {c(i % 2 ? "AA" : "BB")};
    for (const char* who : {"l1", "l2", "l3"})
      a.push_back(label(padded_id(i), who, i < 3 ? UrbanRural::urban : UrbanRural::rural, "Arid"));
  }
  for (const auto& st : urban_rural_accuracy(s, p, a)) {
    CHECK(st.top1->std == 0.0);
    CHECK(st.top5->std == 0.0);
  }
}

TEST_CASE("differing partitions move samples between strata") {
  // Top-1 correct on s1, s2, s4. Labellers A and C: urban = {s1, s2, s3};
  // labeller B: urban = {s1, s2, s3, s4}.
  std::vector<SampleRecord> s;
  PredictionMap p;
  const std::vector<bool> correct{true, true, false, true, false, false};
  for (int i = 0; i < 6; ++i) {
    const auto id = "s" + std::to_string(i + 1);
    s.push_back(sample(id, c("AA")));
    p[id] = {c(correct[i] ? "AA" : "BB")};
  }
  std::vector<StratumAssignment> a;
  for (int i = 0; i < 6; ++i) {
    const auto id = "s" + std::to_string(i + 1);
    a.push_back(label(id, "A", i < 3 ? UrbanRural::urban : UrbanRural::rural, "Arid"));
    a.push_back(label(id, "B", i < 4 ? UrbanRural::urban : UrbanRural::rural, "Arid"));
    a.push_back(label(id, "C", i < 3 ? UrbanRural::urban : UrbanRural::rural, "Arid"));
  }
  const auto out = urban_rural_accuracy(s, p, a);
  REQUIRE(out.size() == 2);
  CHECK(out[0].stratum == "urban");
  CHECK(out[0].top1->mean == doctest::Approx(25.0 / 36.0));
  CHECK(out[0].top1->std == doctest::Approx(std::sqrt(1.0 / 648.0)));
  CHECK(out[1].top1->mean == doctest::Approx(2.0 / 9.0));
  CHECK(out[1].top1->std == doctest::Approx(std::sqrt(2.0) / 9.0));
  CHECK(*out[0].per_labeller[1].top1 == doctest::Approx(0.75));
}

TEST_CASE("biome table reports every bank biome") {
  std::vector<SampleRecord> s{sample("a", c("AA")), sample("b", c("AA")), sample("d", c("AA"))};
  PredictionMap p{{"a", {c("AA")}}, {"b", {c("BB"), c("AA")}}, {"d", {}}};
  std::vector<ConsensusLabel> consensus{{"a", "Arid"}, {"b", "Arid"}};
  const auto t = biome_accuracy(s, p, consensus, default_prompt_bank());
  CHECK(t.n_samples == 3);
  CHECK(t.n_consensus == 2);
  REQUIRE(t.strata.size() == 6);
  CHECK(t.strata[1].biome == "Arid");
  CHECK(*t.strata[1].accuracy.top1 == doctest::Approx(0.5));
  CHECK(*t.strata[1].accuracy.top5 == doctest::Approx(1.0));
  CHECK_FALSE(t.strata[0].accuracy.top1);
}
