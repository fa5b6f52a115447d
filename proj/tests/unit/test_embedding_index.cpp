#include <doctest.h>

#include <cmath>
#include <random>

#include "../oracles.hpp"
#include "../support.hpp"
#include "geoeval/embedding_index.hpp"
#include "geoeval/error.hpp"

using namespace geoeval;
using namespace geoeval::testing;

TEST_CASE("l2_normalize scales rows to unit length") {
  const EmbeddingMatrix m({"a", "b"}, 2, {3, 4, 0.6f, 0.8f});
  const auto n = l2_normalize(m);
  CHECK(n.row(0)[0] == doctest::Approx(0.6).epsilon(1e-7));
  CHECK(n.row(0)[1] == doctest::Approx(0.8).epsilon(1e-7));
  CHECK(std::abs(n.row(1)[0] - 0.6f) < 1e-6);
  CHECK(std::abs(n.row(1)[1] - 0.8f) < 1e-6);
}

TEST_CASE("zero rows are rejected by name") {
  const EmbeddingMatrix m({"a", "zero_row"}, 2, {1, 0, 0, 0});
  try {
    l2_normalize(m);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("zero_row") != std::string::npos);
  }
}

TEST_CASE("orthogonal rows tie at similarity zero and break by id") {
  const EmbeddingMatrix m({"c", "a", "b"}, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const auto lists = knn(m, 1);
  REQUIRE(lists.size() == 3);
  CHECK(lists[0].query_id == "c");
  CHECK(lists[0].neighbors[0].id == "a");
  CHECK(lists[0].neighbors[0].similarity == 0.0f);
  CHECK(lists[1].neighbors[0].id == "b");
  CHECK(lists[2].neighbors[0].id == "a");
}

TEST_CASE("duplicate rows find each other") {
  const EmbeddingMatrix m({"u1", "u2", "v"}, 2, {1, 0, 1, 0, 0, 1});
  const auto lists = knn(m, 1);
  CHECK(lists[0].neighbors[0].id == "u2");
  CHECK(lists[0].neighbors[0].similarity == 1.0f);
  CHECK(lists[1].neighbors[0].id == "u1");
}

TEST_CASE("knn preconditions") {
  const EmbeddingMatrix m({"a", "b"}, 2, {1, 0, 0, 1});
  CHECK_THROWS_AS(knn(m, 2), Error);
  CHECK_THROWS_AS(knn(m, 0), Error);
  const EmbeddingMatrix raw({"a", "b", "c"}, 2, {3, 4, 0, 1, 1, 0});
  CHECK_THROWS_AS(knn(raw, 1), Error);
}

TEST_CASE("random 64x8 matches the naive oracle") {
  std::mt19937_64 gen(29);
  const auto m = l2_normalize(random_matrix(gen, 64, 8));
  const auto got = knn(m, 5);
  const auto want = oracle::naive_knn(m, 5);
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].query_id == m.ids()[i]);
    REQUIRE(got[i].neighbors.size() == 5);
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(got[i].neighbors[j].id == want[i][j].id);
      CHECK(got[i].neighbors[j].similarity == want[i][j].sim);
    }
  }
}

TEST_CASE("knn is independent of worker count and blocking") {
  std::mt19937_64 gen(31);
  for (std::size_t n : {6u, 33u, 130u, 300u}) {
    const auto m = l2_normalize(random_matrix(gen, n, 1 + gen() % 40));
    const auto one = knn(m, 5, 1);
    const auto many = knn(m, 5, 7);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < 5; ++j) {
        CHECK(one[i].neighbors[j].id == many[i].neighbors[j].id);
        CHECK(one[i].neighbors[j].similarity == many[i].neighbors[j].similarity);
      }
    }
  }
}

TEST_CASE("neighbour cache round-trips exactly") {
  TempDir dir;
  std::mt19937_64 gen(37);
  const auto lists = knn(l2_normalize(random_matrix(gen, 40, 6)), 4);
  write_neighbor_cache(dir.file("n.jsonl"), lists);
  const auto back = load_neighbor_cache(dir.file("n.jsonl"));
  REQUIRE(back.size() == lists.size());
  for (std::size_t i = 0; i < lists.size(); ++i) {
    CHECK(back[i].query_id == lists[i].query_id);
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(back[i].neighbors[j].id == lists[i].neighbors[j].id);
      CHECK(back[i].neighbors[j].similarity == lists[i].neighbors[j].similarity);
    }
  }
}
