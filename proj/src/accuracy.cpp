#include "geoeval/accuracy.hpp"

#include <algorithm>

#include "geoeval/error.hpp"
#include "geoeval/normalizer.hpp"

namespace geoeval {

const std::vector<CountryId>& prediction_for(const PredictionMap& predictions,
                                             const std::string& sample_id, const char* module) {
  const auto it = predictions.find(sample_id);
  if (it == predictions.end()) {
    throw Error(module, "no prediction record for sample '" + sample_id + "'");
  }
  return it->second;
}

std::size_t top_k_hits(std::span<const SampleRecord> samples, const PredictionMap& predictions,
                       std::size_t k) {
  std::size_t hits = 0;
  for (const auto& s : samples) {
    const auto& p = prediction_for(predictions, s.sample_id, "accuracy-metrics");
    const auto end = p.begin() + static_cast<std::ptrdiff_t>(std::min(k, p.size()));
    if (std::find(p.begin(), end, s.country) != end) ++hits;
  }
  return hits;
}

AccuracyResult evaluate(std::span<const SampleRecord> samples, const PredictionMap& predictions) {
  AccuracyResult r;
  for (const auto& s : samples) {
    const auto& p = prediction_for(predictions, s.sample_id, "accuracy-metrics");
    auto& pc = r.per_country[s.country.code];
    ++r.n_samples;
    ++pc.n_samples;
    if (p.empty()) {
      ++r.n_empty;
      continue;
    }
    if (p.front() == s.country) {
      ++r.top1_hits;
      ++pc.top1_hits;
    }
    const auto end = p.begin() + static_cast<std::ptrdiff_t>(std::min(kMaxPredictions, p.size()));
    if (std::find(p.begin(), end, s.country) != end) {
      ++r.top5_hits;
      ++pc.top5_hits;
    }
  }
  if (r.n_samples > 0) {
    const auto n = static_cast<double>(r.n_samples);
    r.top1 = static_cast<double>(r.top1_hits) / n;
    r.top5 = static_cast<double>(r.top5_hits) / n;
  }
  return r;
}

}  // namespace geoeval
