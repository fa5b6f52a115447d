#include "geoeval/pipeline.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "geoeval/error.hpp"

namespace geoeval {
namespace {

constexpr const char* kModule = "report-cli";

std::string sanitize(const std::string& s) {
  std::string out = s;
  for (auto& c : out) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '.';
    if (!keep) c = '_';
  }
  return out;
}

const DatasetView& dataset_of(const RunContext& ctx, const std::string& name) {
  for (const auto& d : ctx.datasets) {
    if (d.name == name) return d;
  }
  throw Error(kModule, "unknown dataset '" + name + "'");
}

void check_prompt_ids(const EmbeddingMatrix& m, const std::vector<std::string>& names, const std::string& what) {
  if (m.ids() != names) {
    std::string expected;
    for (const auto& n : names) expected += (expected.empty() ? "" : ",") + n;
    throw Error("stratification", what + " prompt rows must be named " + expected + " in that order");
  }
}

}  // namespace

std::string neighbor_cache_name(const std::string& encoder, const std::string& dataset) {
  return "neighbors_" + sanitize(encoder) + "_" + sanitize(dataset) + ".jsonl";
}

RunContext prepare(const RunConfig& config) {
  validate(config);
  if (!config.manifest) throw Error(kModule, "config has no manifest");
  if (!config.registry) throw Error(kModule, "config has no registry");

  RunContext ctx;
  ctx.config = config;
  ctx.config_hash = config_hash(config);
  ctx.registry = load_registry(config.registry->string());
  ctx.manifest = load_manifest(config.manifest->string(), ctx.registry);
  std::unordered_map<std::string, std::size_t> dataset_index;
  for (const auto& name : ctx.manifest.datasets()) {
    DatasetView v;
    v.name = name;
    v.samples = ctx.manifest.samples_of(name);
    v.label_space = LabelSpace::from_samples(name, v.samples);
    dataset_index.emplace(name, ctx.datasets.size());
    ctx.datasets.push_back(std::move(v));
  }
  std::unordered_map<std::string, std::size_t> sample_dataset;
  for (const auto& s : ctx.manifest.samples) sample_dataset.emplace(s.sample_id, dataset_index.at(s.dataset));

  std::set<std::tuple<std::string, std::string, Setting>> seen;
  for (const auto& path : config.predictions) {
    for (auto& rec : load_predictions(path.string())) {
      const auto it = sample_dataset.find(rec.sample_id);
      if (it == sample_dataset.end()) {
        throw Error("prediction-normalizer", "prediction for unknown sample '" + rec.sample_id + "' in " + path.string());
      }
      if (!seen.emplace(rec.sample_id, rec.model, rec.setting).second) {
        throw Error("prediction-normalizer", "duplicate prediction for sample '" + rec.sample_id + "' (" + rec.model + ")");
      }
      const auto& ds = ctx.datasets[it->second];
      EvalKey key{rec.model, rec.setting, ds.name};
      const auto outcome = parse_raw(rec.raw_output, config.strict_json);
      auto normalized = normalize(outcome, ds.label_space);
      NormalizedAudit audit{key, rec.sample_id, outcome.status, {}};
      for (const auto& c : normalized) audit.codes.push_back(c.code);
      ctx.normalized_audit.push_back(std::move(audit));
      ctx.predictions[key].emplace(rec.sample_id, std::move(normalized));
    }
  }
  return ctx;
}

MetricReport empty_report(const RunContext& ctx) {
  MetricReport r;
  r.tool_version = GEOEVAL_VERSION;
  r.config_hash = ctx.config_hash;
  r.k = ctx.config.k;
  r.tau = ctx.config.tau;
  for (const auto& d : ctx.datasets) {
    r.datasets.push_back(d.name);
    r.dataset_sizes[d.name] = d.samples.size();
  }
  return r;
}

void stage_accuracy(const RunContext& ctx, MetricReport& report) {
  report.has_accuracy = true;
  for (const auto& [key, preds] : ctx.predictions) {
    report.accuracy[key] = evaluate(dataset_of(ctx, key.dataset).samples, preds);
  }
  report.normalized_audit = ctx.normalized_audit;
}

CountryGraph load_graph(const RunConfig& config, const CountryRegistry& registry) {
  if (!config.borders) throw Error(kModule, "config has no borders file");
  const auto borders = load_edge_list(config.borders->string());
  std::vector<CodePair> special;
  if (config.special_edges) special = load_edge_list(config.special_edges->string());
  return build_graph(borders, special, registry);
}

void stage_hop(const RunContext& ctx, MetricReport& report) {
  report.has_hop = true;
  const auto graph = load_graph(ctx.config, ctx.registry);
  for (const auto& [key, preds] : ctx.predictions) {
    std::vector<HopRecord> audit;
    report.hops[key] = hop_histogram(graph, dataset_of(ctx, key.dataset).samples, preds, &audit);
    for (auto& rec : audit) report.hop_audit.push_back({key, std::move(rec)});
  }
}

NeighborTable stage_knn(const RunContext& ctx) {
  NeighborTable table;
  for (const auto& enc : ctx.config.encoders) {
    std::optional<EmbeddingMatrix> images;
    for (const auto& ds : ctx.datasets) {
      if (ctx.config.neighbor_cache_dir) {
        const auto cached = *ctx.config.neighbor_cache_dir / neighbor_cache_name(enc.name, ds.name);
        if (fs::exists(cached)) {
          table[{enc.name, ds.name}] = load_neighbor_cache(cached.string());
          continue;
        }
      }
      if (!images) images = load_embeddings(enc.images.gemb.string(), enc.images.ids.string());
      std::vector<std::string> ids;
      for (const auto& s : ds.samples) ids.push_back(s.sample_id);
      table[{enc.name, ds.name}] = knn(l2_normalize(images->select(ids)), ctx.config.k);
    }
  }
  return table;
}

void write_neighbor_tables(const NeighborTable& table, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& [key, lists] : table) {
    write_neighbor_cache((dir / neighbor_cache_name(key.first, key.second)).string(), lists);
  }
}

void stage_ger(const RunContext& ctx, const NeighborTable& neighbors, MetricReport& report) {
  report.has_ger = true;
  if (ctx.config.encoders.empty()) {
    report.notes.push_back("GER skipped: no embeddings configured.");
    return;
  }
  for (const auto& [key, preds] : ctx.predictions) {
    const auto& samples = dataset_of(ctx, key.dataset).samples;
    GerEntry entry;
    for (const auto& enc : ctx.config.encoders) {
      const auto it = neighbors.find({enc.name, key.dataset});
      if (it == neighbors.end()) throw Error("ger-metric", "no neighbours for encoder '" + enc.name + "'");
      std::vector<GerAuditRecord> audit;
      entry.per_encoder.push_back(ger(samples, preds, it->second, ctx.config.tau, ctx.config.k, enc.name, &audit));
      for (auto& rec : audit) report.ger_audit.push_back({key, enc.name, std::move(rec)});
    }
    if (entry.per_encoder.size() >= 2) entry.aggregate = aggregate_encoders(entry.per_encoder);
    report.ger[key] = std::move(entry);
  }
}

void stage_stratify(const RunContext& ctx, MetricReport& report) {
  report.has_stratification = true;
  const PromptBank bank = ctx.config.prompt_bank ? load_prompt_bank(ctx.config.prompt_bank->string())
                                                 : default_prompt_bank();
  const std::vector<std::string> ur_names{bank.urban_rural[0].name, bank.urban_rural[1].name};
  const auto biome_names = bank.biome_names();

  std::vector<StratumAssignment> imported;
  for (const auto& p : ctx.config.labels) {
    auto rows = import_labels(p.string(), bank);
    imported.insert(imported.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
  }

  for (const auto& ds : ctx.datasets) {
    std::vector<StratumAssignment> assignments;
    std::vector<std::string> ids;
    for (const auto& s : ds.samples) ids.push_back(s.sample_id);
    for (const auto& enc : ctx.config.encoders) {
      if (!enc.urban_rural_prompts || !enc.biome_prompts) continue;
      const auto images = load_embeddings(enc.images.gemb.string(), enc.images.ids.string());
      const auto ur = l2_normalize(load_embeddings(enc.urban_rural_prompts->gemb.string(), enc.urban_rural_prompts->ids.string()));
      const auto bi = l2_normalize(load_embeddings(enc.biome_prompts->gemb.string(), enc.biome_prompts->ids.string()));
      check_prompt_ids(ur, ur_names, "urban/rural");
      check_prompt_ids(bi, biome_names, "biome");
      auto rows = zero_shot_assign(l2_normalize(images.select(ids)), ur, bi, bank, enc.name);
      assignments.insert(assignments.end(), rows.begin(), rows.end());
    }
    std::unordered_map<std::string, bool> in_dataset;
    for (const auto& id : ids) in_dataset.emplace(id, true);
    for (const auto& a : imported) {
      if (in_dataset.count(a.sample_id)) assignments.push_back(a);
    }
    if (assignments.empty()) {
      report.notes.push_back("Stratification skipped for " + ds.name + ": no labellers configured.");
      continue;
    }
    const auto labellers = labellers_of(assignments);
    report.labellers[ds.name] = labellers;

    std::optional<std::vector<ConsensusLabel>> consensus;
    if (labellers.size() >= 3) {
      consensus = consensus_filter(ds.samples, assignments);
      for (const auto& c : *consensus) report.consensus.emplace_back(ds.name, c);
    } else {
      report.notes.push_back("Biome table skipped for " + ds.name + ": consensus needs at least 3 labellers, got " +
                             std::to_string(labellers.size()) + ".");
    }
    for (const auto& [key, preds] : ctx.predictions) {
      if (key.dataset != ds.name) continue;
      report.urban_rural[key].strata = urban_rural_accuracy(ds.samples, preds, assignments);
      if (consensus) report.biome[key] = biome_accuracy(ds.samples, preds, *consensus, bank);
    }
    report.assignments.insert(report.assignments.end(), assignments.begin(), assignments.end());
  }
}

MetricReport run_all(const RunContext& ctx) {
  auto report = empty_report(ctx);
  stage_accuracy(ctx, report);
  stage_hop(ctx, report);
  if (!ctx.config.encoders.empty()) {
    stage_ger(ctx, stage_knn(ctx), report);
  } else {
    report.notes.push_back("GER skipped: no embeddings configured.");
  }
  stage_stratify(ctx, report);
  return report;
}

}  // namespace geoeval
