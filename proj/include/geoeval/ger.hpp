#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "geoeval/accuracy.hpp"
#include "geoeval/data_model.hpp"
#include "geoeval/embedding_index.hpp"

namespace geoeval {

// sample_id -> ground-truth country code.
using TruthLookup = std::unordered_map<std::string, std::string>;

TruthLookup truth_lookup(std::span<const SampleRecord> samples);

// Number of neighbours whose ground-truth country equals `prediction`.
std::size_t justification_count(const CountryId& prediction, const NeighborList& neighbors,
                                const TruthLookup& truth);

struct GerResult {
  std::string encoder;
  // Both nullopt when n_errors == 0.
  std::optional<double> ger_weak;
  std::optional<double> ger_strong;
  std::size_t n_errors = 0;          // |E|: wrong, non-empty Top-1
  std::size_t n_empty_excluded = 0;  // wrong because empty; not in E
  std::size_t n_weak = 0;
  std::size_t n_strong = 0;
  std::size_t tau = 2;
  std::size_t k = 5;
};

struct GerAuditRecord {
  std::string sample_id;
  std::string predicted;
  std::size_t count = 0;
  bool justified_weak = false;
  bool justified_strong = false;
};

// `neighbors` must hold a list for every sample; `k` is the neighbourhood
// size the lists were built with.
GerResult ger(std::span<const SampleRecord> samples, const PredictionMap& predictions,
              std::span<const NeighborList> neighbors, std::size_t tau = 2, std::size_t k = 5,
              std::string encoder = {}, std::vector<GerAuditRecord>* audit = nullptr);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
};

// Arithmetic mean and population standard deviation.
MeanStd mean_std(std::span<const double> values);

struct GerAggregate {
  std::size_t n_encoders = 0;
  // nullopt when any encoder's GER is undefined.
  std::optional<MeanStd> ger_weak;
  std::optional<MeanStd> ger_strong;
  std::size_t tau = 2;
  std::size_t k = 5;
};

// Requires >= 2 results sharing tau and k.
GerAggregate aggregate_encoders(std::span<const GerResult> results);

}  // namespace geoeval
