#include "geoeval/ger.hpp"

#include <algorithm>
#include <cmath>

#include "geoeval/error.hpp"

namespace geoeval {
namespace {
constexpr const char* kModule = "ger-metric";
}

TruthLookup truth_lookup(std::span<const SampleRecord> samples) {
  TruthLookup t;
  t.reserve(samples.size());
  for (const auto& s : samples) t.emplace(s.sample_id, s.country.code);
  return t;
}

std::size_t justification_count(const CountryId& prediction, const NeighborList& neighbors,
                                const TruthLookup& truth) {
  std::size_t c = 0;
  for (const auto& nb : neighbors.neighbors) {
    const auto it = truth.find(nb.id);
    if (it == truth.end()) throw Error(kModule, "neighbour '" + nb.id + "' has no ground truth");
    if (it->second == prediction.code) ++c;
  }
  return c;
}

GerResult ger(std::span<const SampleRecord> samples, const PredictionMap& predictions,
              std::span<const NeighborList> neighbors, std::size_t tau, std::size_t k,
              std::string encoder, std::vector<GerAuditRecord>* audit) {
  if (tau < 1) throw Error(kModule, "tau must be at least 1");
  std::unordered_map<std::string, const NeighborList*> by_query;
  by_query.reserve(neighbors.size());
  for (const auto& l : neighbors) by_query.emplace(l.query_id, &l);
  const auto truth = truth_lookup(samples);

  GerResult r;
  r.encoder = std::move(encoder);
  r.tau = tau;
  r.k = k;
  for (const auto& s : samples) {
    const auto& p = prediction_for(predictions, s.sample_id, kModule);
    if (p.empty()) {
      ++r.n_empty_excluded;
      continue;
    }
    if (p.front() == s.country) continue;
    const auto it = by_query.find(s.sample_id);
    if (it == by_query.end()) throw Error(kModule, "no neighbour list for sample '" + s.sample_id + "'");
    if (it->second->neighbors.size() != k) {
      throw Error(kModule, "neighbour list for '" + s.sample_id + "' has " +
                               std::to_string(it->second->neighbors.size()) + " entries, expected k=" +
                               std::to_string(k));
    }
    const auto c = justification_count(p.front(), *it->second, truth);
    ++r.n_errors;
    const bool weak = c >= 1;
    const bool strong = c >= tau;
    r.n_weak += weak;
    r.n_strong += strong;
    if (audit != nullptr) audit->push_back({s.sample_id, p.front().code, c, weak, strong});
  }
  if (r.n_errors > 0) {
    r.ger_weak = static_cast<double>(r.n_weak) / static_cast<double>(r.n_errors);
    r.ger_strong = static_cast<double>(r.n_strong) / static_cast<double>(r.n_errors);
  }
  return r;
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw Error(kModule, "mean of an empty set");
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) {
    return {values.front(), 0.0};
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

GerAggregate aggregate_encoders(std::span<const GerResult> results) {
  if (results.size() < 2) throw Error(kModule, "cross-encoder aggregation needs at least two encoders");
  GerAggregate agg;
  agg.n_encoders = results.size();
  agg.tau = results.front().tau;
  agg.k = results.front().k;
  std::vector<double> weak;
  std::vector<double> strong;
  bool defined = true;
  for (const auto& r : results) {
    if (r.tau != agg.tau || r.k != agg.k) {
      throw Error(kModule, "cannot aggregate GER results with different tau/k");
    }
    if (!r.ger_weak || !r.ger_strong) {
      defined = false;
      continue;
    }
    weak.push_back(*r.ger_weak);
    strong.push_back(*r.ger_strong);
  }
  if (defined) {
    agg.ger_weak = mean_std(weak);
    agg.ger_strong = mean_std(strong);
  }
  return agg;
}

}  // namespace geoeval
