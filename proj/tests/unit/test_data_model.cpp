#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <random>

#include "../support.hpp"
#include "geoeval/data_model.hpp"
#include "geoeval/error.hpp"

using namespace geoeval;
using namespace geoeval::testing;

namespace {

const char* kRegistry =
    R"({"code":"US","name":"United States","aliases":["USA","United States of America"],"lat":39.8,"lon":-98.6}
{"code":"FR","name":"France","aliases":["FRA"],"lat":46.6,"lon":2.4}
{"code":"HK","name":"Hong Kong","lat":22.3,"lon":114.2,"island":true}
)";

CountryRegistry fixture_registry(const TempDir& dir) {
  write_text(dir.file("registry.jsonl"), kRegistry);
  return load_registry(dir.file("registry.jsonl"));
}

}  // namespace

TEST_CASE("registry resolves codes, names and aliases case-insensitively") {
  TempDir dir;
  const auto reg = fixture_registry(dir);
  CHECK(reg.size() == 3);
  CHECK(reg.resolve("usa")->code == "US");
  CHECK(reg.resolve("united states of america")->code == "US");
  CHECK(reg.resolve("fr")->display_name == "France");
  CHECK_FALSE(reg.resolve("Atlantis"));
  CHECK(reg.at("HK").is_island);
  CHECK_THROWS_AS(reg.at("ZZ"), Error);
}

TEST_CASE("registry rejects alias collisions and bad entries") {
  CHECK_THROWS_AS(CountryRegistry({{{"AA", "Alpha"}, {"Shared"}, {0, 0}, false},
                                   {{"BB", "Beta"}, {"shared"}, {0, 0}, false}}),
                  Error);
  CHECK_THROWS_AS(CountryRegistry({{{"AAAA", "Alpha"}, {}, {0, 0}, false}}), Error);
  CHECK_THROWS_AS(CountryRegistry({{{"AA", "Alpha"}, {}, {91, 0}, false}}), Error);
  CHECK_THROWS_AS(CountryRegistry({{{"AA", "Alpha"}, {}, {0, 0}, false}, {{"AA", "Again"}, {}, {0, 0}, false}}),
                  Error);
}

TEST_CASE("manifest loads records and the observed label space") {
  TempDir dir;
  const auto reg = fixture_registry(dir);
  write_text(dir.file("m.csv"), "sample_id,country,dataset\na,US,d\nb,usa,d\nc,France,d\n");
  const auto m = load_manifest(dir.file("m.csv"), reg);
  REQUIRE(m.samples.size() == 3);
  CHECK(m.samples[1].country.code == "US");
  REQUIRE(m.label_space.size() == 2);
  CHECK(m.label_space.countries()[0].code == "FR");
  CHECK(m.label_space.countries()[1].code == "US");
  CHECK(m.datasets() == std::vector<std::string>{"d"});
}

TEST_CASE("manifest errors name the offending row") {
  TempDir dir;
  const auto reg = fixture_registry(dir);
  write_text(dir.file("m.csv"), "sample_id,country,dataset\na,US,d\nb,Atlantis,d\n");
  try {
    load_manifest(dir.file("m.csv"), reg);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("unresolvable country") != std::string::npos);
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    CHECK(e.module() == "data-model");
  }
  write_text(dir.file("dup.csv"), "sample_id,country,dataset\na,US,d\na,FR,d\n");
  CHECK_THROWS_AS(load_manifest(dir.file("dup.csv"), reg), Error);
  write_text(dir.file("hdr.csv"), "id,country\na,US\n");
  CHECK_THROWS_AS(load_manifest(dir.file("hdr.csv"), reg), Error);
}

TEST_CASE("manifest round-trips through write_manifest") {
  TempDir dir;
  const auto reg = fixture_registry(dir);
  std::vector<SampleRecord> rows{{"x1", {"US", "United States"}, "d1"}, {"x2", {"FR", "France"}, "d2"}};
  write_manifest(dir.file("out.csv"), rows);
  const auto m = load_manifest(dir.file("out.csv"), reg);
  REQUIRE(m.samples.size() == 2);
  CHECK(m.samples[1].dataset == "d2");
  CHECK(m.datasets() == std::vector<std::string>{"d1", "d2"});
  CHECK(m.samples_of("d2").size() == 1);
}

TEST_CASE("label space is invariant under sample permutation") {
  std::mt19937_64 gen(11);
  std::vector<SampleRecord> samples;
  const std::vector<CountryId> pool{{"FR", "France"}, {"ES", "Spain"}, {"PT", "Portugal"}, {"JP", "Japan"}};
  for (int i = 0; i < 40; ++i) samples.push_back(sample(padded_id(i), pool[gen() % pool.size()]));
  const auto base = LabelSpace::from_samples("d", samples);
  for (int r = 0; r < 20; ++r) {
    std::shuffle(samples.begin(), samples.end(), gen);
    const auto other = LabelSpace::from_samples("d", samples);
    REQUIRE(other.size() == base.size());
    for (std::size_t i = 0; i < base.size(); ++i) CHECK(other.countries()[i].code == base.countries()[i].code);
  }
  CHECK(base.match_display_name("portugal")->code == "PT");
  CHECK(base.match_display_name("Portugal") == nullptr);
}

TEST_CASE("predictions JSONL loads and rejects duplicates") {
  TempDir dir;
  write_text(dir.file("p.jsonl"),
             R"({"sample_id":"a","model":"m","setting":"unconstrained","raw_output":"{\"predictions\":[\"France\"]}"}
{"sample_id":"a","model":"m","setting":"constrained","raw_output":null}
)");
  const auto p = load_predictions(dir.file("p.jsonl"));
  REQUIRE(p.size() == 2);
  CHECK(p[1].setting == Setting::constrained);
  CHECK(p[1].raw_output.empty());
  write_text(dir.file("dup.jsonl"),
             R"({"sample_id":"a","model":"m","setting":"unconstrained","raw_output":""}
{"sample_id":"a","model":"m","setting":"unconstrained","raw_output":"x"}
)");
  CHECK_THROWS_AS(load_predictions(dir.file("dup.jsonl")), Error);
  write_text(dir.file("bad.jsonl"), R"({"sample_id":"a","model":"m","setting":"zeroshot","raw_output":""})");
  CHECK_THROWS_AS(load_predictions(dir.file("bad.jsonl")), Error);
}

namespace {

void write_raw_gemb(const std::string& path, std::uint32_t dim, std::uint64_t count, std::size_t n_floats,
                    const char* magic = "GEMB", float fill = 0.5f) {
  std::string bytes(magic, 4);
  std::uint32_t version = 1;
  bytes.append(reinterpret_cast<const char*>(&version), 4);
  bytes.append(reinterpret_cast<const char*>(&dim), 4);
  bytes.append(reinterpret_cast<const char*>(&count), 8);
  for (std::size_t i = 0; i < n_floats; ++i) bytes.append(reinterpret_cast<const char*>(&fill), 4);
  write_text(path, bytes);
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("GEMB well-formed file loads") {
  TempDir dir;
  write_raw_gemb(dir.file("e.gemb"), 4, 2, 8);
  write_text(dir.file("e.ids"), "a\nb\n");
  const auto m = load_embeddings(dir.file("e.gemb"), dir.file("e.ids"));
  CHECK(m.rows() == 2);
  CHECK(m.dim() == 4);
  CHECK(m.row(1)[3] == 0.5f);
  CHECK(*m.index_of("b") == 1);
}

TEST_CASE("GEMB validation errors") {
  TempDir dir;
  write_text(dir.file("e.ids"), "a\nb\n");
  write_raw_gemb(dir.file("short.gemb"), 4, 2, 7);
  CHECK(error_of([&] { load_embeddings(dir.file("short.gemb"), dir.file("e.ids")); })
            .find("truncated embedding payload") != std::string::npos);
  write_raw_gemb(dir.file("ok.gemb"), 4, 2, 8);
  write_text(dir.file("three.ids"), "a\nb\nc\n");
  CHECK(error_of([&] { load_embeddings(dir.file("ok.gemb"), dir.file("three.ids")); })
            .find("id/row count mismatch") != std::string::npos);
  write_raw_gemb(dir.file("magic.gemb"), 4, 2, 8, "GEMX");
  CHECK(error_of([&] { load_embeddings(dir.file("magic.gemb"), dir.file("e.ids")); }).find("magic") !=
        std::string::npos);
  write_raw_gemb(dir.file("long.gemb"), 4, 2, 9);
  CHECK_THROWS_AS(load_embeddings(dir.file("long.gemb"), dir.file("e.ids")), Error);
  write_raw_gemb(dir.file("nan.gemb"), 4, 2, 8, "GEMB", std::numeric_limits<float>::quiet_NaN());
  CHECK(error_of([&] { load_embeddings(dir.file("nan.gemb"), dir.file("e.ids")); }).find("non-finite") !=
        std::string::npos);
  write_text(dir.file("dup.ids"), "a\na\n");
  CHECK_THROWS_AS(load_embeddings(dir.file("ok.gemb"), dir.file("dup.ids")), Error);
}

TEST_CASE("GEMB write/load is bit-exact") {
  TempDir dir;
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = random_matrix(gen, 1 + gen() % 40, 1 + gen() % 16);
    write_embeddings(dir.file("r.gemb"), dir.file("r.ids"), m);
    const auto back = load_embeddings(dir.file("r.gemb"), dir.file("r.ids"));
    CHECK(back.ids() == m.ids());
    CHECK(back.dim() == m.dim());
    CHECK(std::memcmp(back.data().data(), m.data().data(), m.data().size() * sizeof(float)) == 0);
  }
}

TEST_CASE("select returns rows in the requested order") {
  EmbeddingMatrix m({"a", "b", "c"}, 2, {1, 2, 3, 4, 5, 6});
  const std::vector<std::string> want{"c", "a"};
  const auto s = m.select(want);
  CHECK(s.ids() == want);
  CHECK(s.row(0)[0] == 5);
  CHECK(s.row(1)[1] == 2);
  const std::vector<std::string> missing{"z"};
  CHECK_THROWS_AS(m.select(missing), Error);
  CHECK_THROWS_AS(EmbeddingMatrix({"a"}, 2, {1, 2, 3}), Error);
}

TEST_CASE("shipped registry loads without collisions") {
  const auto reg = load_registry(std::string(GEOEVAL_DATA) + "/registry.jsonl");
  CHECK(reg.size() >= 240);
  CHECK(reg.resolve("Hong Kong")->code == "HK");
  CHECK(reg.resolve("China")->code == "CN");
  CHECK(reg.resolve("Cambodia")->code == "KH");
  CHECK(reg.resolve("Thailand")->code == "TH");
}
