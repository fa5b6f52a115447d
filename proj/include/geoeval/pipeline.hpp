#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "geoeval/accuracy.hpp"
#include "geoeval/config.hpp"
#include "geoeval/data_model.hpp"
#include "geoeval/embedding_index.hpp"
#include "geoeval/geo_graph.hpp"
#include "geoeval/ger.hpp"
#include "geoeval/normalizer.hpp"
#include "geoeval/stratification.hpp"

namespace geoeval {

struct EvalKey {
  std::string model;
  Setting setting = Setting::unconstrained;
  std::string dataset;

  auto operator<=>(const EvalKey&) const = default;
};

struct DatasetView {
  std::string name;
  std::vector<SampleRecord> samples;
  LabelSpace label_space;
};

struct NormalizedAudit {
  EvalKey key;
  std::string sample_id;
  ParseStatus status = ParseStatus::parse_failed;
  std::vector<std::string> codes;
};

struct GerEntry {
  std::vector<GerResult> per_encoder;  // encoder name order
  std::optional<GerAggregate> aggregate;
};

struct GerAuditRow {
  EvalKey key;
  std::string encoder;
  GerAuditRecord record;
};

struct HopAuditRow {
  EvalKey key;
  HopRecord record;
};

struct UrbanRuralEntry {
  std::vector<StratumSummary> strata;  // urban, rural
};

// Every section is keyed by (model, setting, dataset); a section that was
// not computed stays empty and its files are not written.
struct MetricReport {
  std::string tool_version;
  std::string config_hash;
  std::size_t k = 5;
  std::size_t tau = 2;
  std::vector<std::string> datasets;
  std::map<std::string, std::size_t> dataset_sizes;

  bool has_accuracy = false;
  bool has_hop = false;
  bool has_ger = false;
  bool has_stratification = false;

  std::map<EvalKey, AccuracyResult> accuracy;
  std::map<EvalKey, HopHistogram> hops;
  std::map<EvalKey, GerEntry> ger;
  std::map<EvalKey, UrbanRuralEntry> urban_rural;
  std::map<EvalKey, BiomeTable> biome;
  // dataset -> labellers used for stratification
  std::map<std::string, std::vector<std::string>> labellers;
  std::vector<std::string> notes;

  std::vector<NormalizedAudit> normalized_audit;
  std::vector<HopAuditRow> hop_audit;
  std::vector<GerAuditRow> ger_audit;
  std::vector<StratumAssignment> assignments;
  std::vector<std::pair<std::string, ConsensusLabel>> consensus;  // (dataset, label)
};

// Loaded inputs shared by all stages. Predictions are normalized against the
// label space of each sample's dataset.
struct RunContext {
  RunConfig config;
  std::string config_hash;
  CountryRegistry registry;
  Manifest manifest;
  std::vector<DatasetView> datasets;
  std::map<EvalKey, PredictionMap> predictions;
  std::vector<NormalizedAudit> normalized_audit;
};

// Validates the config (paths exist) before loading anything.
RunContext prepare(const RunConfig& config);

MetricReport empty_report(const RunContext& ctx);

void stage_accuracy(const RunContext& ctx, MetricReport& report);
CountryGraph load_graph(const RunConfig& config, const CountryRegistry& registry);
void stage_hop(const RunContext& ctx, MetricReport& report);

// (encoder, dataset) -> neighbour lists in dataset sample order.
using NeighborTable = std::map<std::pair<std::string, std::string>, std::vector<NeighborList>>;

// Reads `neighbors_<encoder>_<dataset>.jsonl` from the configured cache
// directory when present, otherwise runs the kernel.
NeighborTable stage_knn(const RunContext& ctx);
void write_neighbor_tables(const NeighborTable& table, const fs::path& dir);
std::string neighbor_cache_name(const std::string& encoder, const std::string& dataset);

void stage_ger(const RunContext& ctx, const NeighborTable& neighbors, MetricReport& report);
void stage_stratify(const RunContext& ctx, MetricReport& report);

// All stages in dependency order.
MetricReport run_all(const RunContext& ctx);

}  // namespace geoeval
