#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "../support.hpp"
#include "geoeval/error.hpp"
#include "geoeval/subset_sampler.hpp"

using namespace geoeval;
using namespace geoeval::testing;

namespace {

std::vector<SampleRecord> population(const std::map<std::string, std::size_t>& sizes) {
  std::vector<SampleRecord> out;
  std::size_t i = 0;
  for (const auto& [code, n] : sizes)
    for (std::size_t j = 0; j < n; ++j) out.push_back(sample(padded_id(i++), {code, code}));
  return out;
}

}  // namespace

TEST_CASE("floor exhausts the target") {
  const auto pop = population({{"AA", 100}, {"BB", 100}, {"CC", 100}});
  const auto p = plan(pop, 60, 20, 1);
  CHECK(p.quotas == std::map<std::string, std::size_t>{{"AA", 20}, {"BB", 20}, {"CC", 20}});
}

TEST_CASE("small countries are taken whole") {
  const auto pop = population({{"AA", 7}, {"BB", 100}, {"CC", 200}});
  const auto p = plan(pop, 100, 20, 1);
  CHECK(p.quotas.at("AA") == 7);
  CHECK(p.total() == 100);
  // Spare after the floor is 80 and 180; 53 left to split (16.31 and 36.69).
  CHECK(p.quotas.at("BB") == 20 + 16);
  CHECK(p.quotas.at("CC") == 20 + 37);
}

TEST_CASE("target below the floor is an error naming it") {
  const auto pop = population({{"AA", 100}, {"BB", 100}, {"CC", 100}});
  try {
    plan(pop, 59, 20, 1);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("60") != std::string::npos);
  }
}

TEST_CASE("target above the population takes everything") {
  const auto pop = population({{"AA", 5}, {"BB", 30}});
  const auto p = plan(pop, 1000, 20, 1);
  CHECK(p.total() == 35);
  CHECK(draw(pop, p).size() == 35);
}

TEST_CASE("plan properties on random populations") {
  std::mt19937_64 gen(53);
  for (int trial = 0; trial < 300; ++trial) {
    std::map<std::string, std::size_t> sizes;
    const std::size_t countries = 1 + gen() % 30;
    for (std::size_t i = 0; i < countries; ++i) sizes[padded_id(i, "C")] = 1 + gen() % 300;
    const auto pop = population(sizes);
    const std::size_t min = gen() % 25;
    std::size_t floor = 0;
    for (const auto& [code, n] : sizes) floor += std::min(n, min);
    const std::size_t target = floor + gen() % (pop.size() - floor + 1);
    const auto p = plan(pop, target, min, gen());
    CHECK(p.total() == target);
    const double goal = static_cast<double>(target - floor);
    std::size_t spare_total = 0;
    for (const auto& [code, n] : sizes) spare_total += n - std::min(n, min);
    for (const auto& [code, n] : sizes) {
      const auto q = p.quotas.at(code);
      CHECK(q >= std::min(n, min));
      CHECK(q <= n);
      if (spare_total == 0) continue;
      const double ideal = goal * static_cast<double>(n - std::min(n, min)) / static_cast<double>(spare_total);
      CHECK(std::abs(static_cast<double>(q - std::min(n, min)) - ideal) <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("draw honours quotas and is seed-deterministic") {
  const auto pop = population({{"AA", 50}, {"BB", 120}, {"CC", 9}, {"DD", 300}});
  const auto p = plan(pop, 150, 20, 7);
  const auto a = draw(pop, p);
  const auto b = draw(pop, p);
  CHECK(a.size() == 150);
  std::map<std::string, std::size_t> counts;
  std::set<std::string> ids;
  for (const auto& s : a) {
    ++counts[s.country.code];
    ids.insert(s.sample_id);
  }
  CHECK(ids.size() == a.size());
  for (const auto& [code, q] : p.quotas) CHECK(counts[code] == q);
  CHECK(counts["CC"] == 9);
  REQUIRE(b.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].sample_id == b[i].sample_id);
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i - 1].sample_id < a[i].sample_id);

  const auto other = plan(pop, 150, 20, 8);
  CHECK(other.quotas == p.quotas);
  const auto c = draw(pop, other);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= a[i].sample_id != c[i].sample_id;
  CHECK(differs);
}

TEST_CASE("draw rejects a plan for another population") {
  const auto pop = population({{"AA", 50}, {"BB", 50}});
  const auto p = plan(pop, 60, 20, 1);
  const auto smaller = population({{"AA", 10}, {"BB", 50}});
  CHECK_THROWS_AS(draw(smaller, p), Error);
}
