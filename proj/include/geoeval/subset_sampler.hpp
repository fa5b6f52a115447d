#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "geoeval/data_model.hpp"

namespace geoeval {

struct SamplingPlan {
  std::size_t target_total = 0;
  std::size_t min_per_country = 20;
  std::uint64_t seed = 0;
  // Keyed by country code.
  std::map<std::string, std::size_t> quotas;
  std::map<std::string, std::size_t> available;

  std::size_t total() const;
  std::string to_json() const;
};

// Phase 1 gives each country min(min_per_country, available). Phase 2 splits
// the rest in proportion to each country's availability left after phase 1,
// using largest-remainder rounding; ties go to the larger availability, then
// the smaller code. If the target exceeds the population, every sample is
// taken.
SamplingPlan plan(std::span<const SampleRecord> population, std::size_t target_total,
                  std::size_t min_per_country, std::uint64_t seed);

// Uniform draw without replacement per country, then sorted by sample_id.
// Each country gets its own stream seeded from (seed, code); the generator
// and the bounded-integer mapping are fixed so output is reproducible
// across platforms.
std::vector<SampleRecord> draw(std::span<const SampleRecord> population, const SamplingPlan& plan);

}  // namespace geoeval
