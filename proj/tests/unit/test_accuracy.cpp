#include <doctest.h>

#include <algorithm>
#include <random>

#include "../support.hpp"
#include "geoeval/accuracy.hpp"
#include "geoeval/error.hpp"

using namespace geoeval;
using namespace geoeval::testing;

namespace {

const CountryId kFR{"FR", "France"}, kES{"ES", "Spain"}, kIT{"IT", "Italy"}, kPT{"PT", "Portugal"};

}  // namespace

TEST_CASE("hand-counted fixture") {
  std::vector<SampleRecord> s{sample("a", kFR), sample("b", kES), sample("c", kIT), sample("d", kPT)};
  PredictionMap p{{"a", {kFR, kES}}, {"b", {kES}}, {"c", {kIT, kFR}}, {"d", {kFR, kES, kPT}}};
  const auto r = evaluate(s, p);
  CHECK(*r.top1 == doctest::Approx(0.75));
  CHECK(*r.top5 == doctest::Approx(1.0));
  CHECK(r.top1_hits == 3);
  CHECK(r.per_country.at("PT").top1_hits == 0);
  CHECK(r.per_country.at("PT").top5_hits == 1);
}

TEST_CASE("empty predictions count as incorrect") {
  std::vector<SampleRecord> s{sample("a", kFR), sample("b", kES)};
  PredictionMap p{{"a", {}}, {"b", {}}};
  const auto r = evaluate(s, p);
  CHECK(*r.top1 == 0.0);
  CHECK(*r.top5 == 0.0);
  CHECK(r.n_empty == 2);
}

TEST_CASE("identity and undefined cases") {
  std::vector<SampleRecord> one{sample("a", kFR)};
  PredictionMap p{{"a", {kFR}}};
  const auto r = evaluate(one, p);
  CHECK(*r.top1 == 1.0);
  CHECK(*r.top5 == 1.0);
  const auto none = evaluate(std::vector<SampleRecord>{}, p);
  CHECK_FALSE(none.top1);
  CHECK_FALSE(none.top5);
}

TEST_CASE("missing sample is a pipeline error") {
  std::vector<SampleRecord> s{sample("a", kFR), sample("b", kES)};
  PredictionMap p{{"a", {kFR}}};
  CHECK_THROWS_AS(evaluate(s, p), Error);
}

TEST_CASE("accuracy properties on random fixtures") {
  const std::vector<CountryId> pool{kFR, kES, kIT, kPT, {"DE", "Germany"}, {"BE", "Belgium"}, {"NL", "Netherlands"}};
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<SampleRecord> s;
    PredictionMap p;
    const std::size_t n = 1 + gen() % 60;
    for (std::size_t i = 0; i < n; ++i) {
      s.push_back(sample(padded_id(i), pool[gen() % pool.size()]));
      auto order = pool;
      std::shuffle(order.begin(), order.end(), gen);
      order.resize(gen() % 6);
      p[s.back().sample_id] = order;
    }
    const auto r = evaluate(s, p);
    CHECK(*r.top1 <= *r.top5);
    CHECK(r.top1_hits == top_k_hits(s, p, 1));
    CHECK(r.top5_hits == top_k_hits(s, p, 5));
    for (std::size_t k = 1; k < 6; ++k) CHECK(top_k_hits(s, p, k) <= top_k_hits(s, p, k + 1));

    auto shuffled = s;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    const auto r2 = evaluate(shuffled, p);
    CHECK(r2.top1_hits == r.top1_hits);
    CHECK(r2.top5_hits == r.top5_hits);

    // Moving the truth to rank 1 never lowers accuracy.
    auto improved = p;
    const auto& victim = s[gen() % s.size()];
    auto& list = improved[victim.sample_id];
    list.erase(std::remove(list.begin(), list.end(), victim.country), list.end());
    list.insert(list.begin(), victim.country);
    if (list.size() > 5) list.resize(5);
    CHECK(evaluate(s, improved).top1_hits >= r.top1_hits);
    CHECK(evaluate(s, improved).top5_hits >= r.top5_hits);
  }
}
