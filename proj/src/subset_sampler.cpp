#include "geoeval/subset_sampler.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include <json.hpp>

#include "geoeval/error.hpp"

namespace geoeval {
namespace {

constexpr const char* kModule = "subset-sampler";

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, const std::string& code) {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (unsigned char c : code) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return splitmix64(seed ^ splitmix64(h));
}

// Uniform integer in [0, bound) by rejection; std::uniform_int_distribution
// is implementation-defined.
std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  while (true) {
    const std::uint64_t v = gen();
    if (v < limit) return v % bound;
  }
}

}  // namespace

std::size_t SamplingPlan::total() const {
  std::size_t t = 0;
  for (const auto& [_, q] : quotas) t += q;
  return t;
}

std::string SamplingPlan::to_json() const {
  nlohmann::ordered_json j;
  j["target_total"] = target_total;
  j["min_per_country"] = min_per_country;
  j["seed"] = seed;
  j["total"] = total();
  auto& countries = j["countries"] = nlohmann::ordered_json::array();
  for (const auto& [code, q] : quotas) {
    countries.push_back({{"country", code}, {"available", available.at(code)}, {"quota", q}});
  }
  return j.dump(2) + "\n";
}

SamplingPlan plan(std::span<const SampleRecord> population, std::size_t target_total,
                  std::size_t min_per_country, std::uint64_t seed) {
  SamplingPlan p;
  p.target_total = target_total;
  p.min_per_country = min_per_country;
  p.seed = seed;
  for (const auto& s : population) ++p.available[s.country.code];

  std::size_t floor_total = 0;
  std::size_t population_total = 0;
  for (const auto& [code, avail] : p.available) {
    const auto base = std::min(min_per_country, avail);
    p.quotas[code] = base;
    floor_total += base;
    population_total += avail;
  }
  if (target_total < floor_total) {
    throw Error(kModule, "target " + std::to_string(target_total) + " is below the per-country floor of " +
                             std::to_string(floor_total));
  }
  const std::size_t goal = std::min(target_total, population_total);
  const std::size_t remainder = goal - floor_total;
  const std::size_t spare_total = population_total - floor_total;
  if (remainder == 0) return p;

  struct Share {
    std::string code;
    std::size_t available;
    unsigned __int128 fraction;  // numerator of the fractional part, over spare_total
  };
  std::vector<Share> shares;
  std::size_t assigned = 0;
  for (auto& [code, quota] : p.quotas) {
    const auto spare = p.available.at(code) - quota;
    const auto num = static_cast<unsigned __int128>(remainder) * spare;
    const auto whole = static_cast<std::size_t>(num / spare_total);
    quota += whole;
    assigned += whole;
    shares.push_back({code, p.available.at(code), num % spare_total});
  }
  std::sort(shares.begin(), shares.end(), [](const Share& a, const Share& b) {
    if (a.fraction != b.fraction) return a.fraction > b.fraction;
    if (a.available != b.available) return a.available > b.available;
    return a.code < b.code;
  });
  for (std::size_t i = 0; assigned < remainder; ++i) {
    // A zero fraction means the share is exact, so the leftover is always
    // absorbed by countries with a nonzero fractional part.
    ++p.quotas[shares[i].code];
    ++assigned;
  }
  return p;
}

std::vector<SampleRecord> draw(std::span<const SampleRecord> population, const SamplingPlan& plan) {
  std::map<std::string, std::vector<const SampleRecord*>> by_country;
  for (const auto& s : population) by_country[s.country.code].push_back(&s);
  for (const auto& [code, quota] : plan.quotas) {
    const auto it = by_country.find(code);
    const std::size_t avail = it == by_country.end() ? 0 : it->second.size();
    if (quota > avail) {
      throw Error(kModule, "plan asks for " + std::to_string(quota) + " samples of " + code + " but population has " +
                               std::to_string(avail));
    }
  }
  for (const auto& [code, _] : by_country) {
    if (!plan.quotas.count(code)) throw Error(kModule, "population country " + code + " is missing from the plan");
  }

  std::vector<SampleRecord> out;
  out.reserve(plan.total());
  for (auto& [code, members] : by_country) {
    std::sort(members.begin(), members.end(),
              [](const SampleRecord* a, const SampleRecord* b) { return a->sample_id < b->sample_id; });
    const std::size_t quota = plan.quotas.at(code);
    std::mt19937_64 gen(stream_seed(plan.seed, code));
    // Partial Fisher-Yates: the first `quota` slots end up a uniform sample.
    for (std::size_t i = 0; i < quota; ++i) {
      const auto j = i + static_cast<std::size_t>(bounded(gen, members.size() - i));
      std::swap(members[i], members[j]);
      out.push_back(*members[i]);
    }
  }
  std::sort(out.begin(), out.end(), [](const SampleRecord& a, const SampleRecord& b) { return a.sample_id < b.sample_id; });
  return out;
}

}  // namespace geoeval
