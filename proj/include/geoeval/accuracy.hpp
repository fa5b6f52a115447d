#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "geoeval/data_model.hpp"

namespace geoeval {

// sample_id -> normalized ranked prediction list.
using PredictionMap = std::unordered_map<std::string, std::vector<CountryId>>;

struct CountryAccuracy {
  std::size_t n_samples = 0;
  std::size_t top1_hits = 0;
  std::size_t top5_hits = 0;
};

struct AccuracyResult {
  std::size_t n_samples = 0;
  std::size_t n_empty = 0;
  std::size_t top1_hits = 0;
  std::size_t top5_hits = 0;
  // Undefined (nullopt) when n_samples == 0.
  std::optional<double> top1;
  std::optional<double> top5;
  // Keyed by ground-truth country code.
  std::map<std::string, CountryAccuracy> per_country;
};

// Empty prediction lists count as incorrect. A sample missing from
// `predictions` is a pipeline error and throws.
AccuracyResult evaluate(std::span<const SampleRecord> samples, const PredictionMap& predictions);

// Hits for y in the first k entries of each list.
std::size_t top_k_hits(std::span<const SampleRecord> samples, const PredictionMap& predictions,
                       std::size_t k);

const std::vector<CountryId>& prediction_for(const PredictionMap& predictions,
                                             const std::string& sample_id, const char* module);

}  // namespace geoeval
