// geoeval: country-level geolocalization evaluation from prediction logs and
// embedding files. See README.md for the config format.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "geoeval/config.hpp"
#include "geoeval/error.hpp"
#include "geoeval/geo_graph.hpp"
#include "geoeval/pipeline.hpp"
#include "geoeval/report.hpp"
#include "geoeval/subset_sampler.hpp"

namespace {

using geoeval::fs::path;

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

// Flags shared by every subcommand; each overrides the config value.
struct Overrides {
  std::string config;
  std::string out;
  std::string manifest;
  std::string registry;
  std::string borders;
  std::string special_edges;
  std::string neighbor_cache;
  std::optional<std::size_t> k;
  std::optional<std::size_t> tau;
  std::optional<std::size_t> target;
  std::optional<std::size_t> min_per_country;
  std::optional<std::uint64_t> seed;
  bool strict_json = false;
};

void add_common(CLI::App* cmd, Overrides& o, bool config_required) {
  auto* c = cmd->add_option("-c,--config", o.config, "Run config file");
  if (config_required) c->required();
  cmd->add_option("-o,--out", o.out, "Output directory");
  cmd->add_option("--manifest", o.manifest, "Ground-truth manifest CSV");
  cmd->add_option("--registry", o.registry, "Country registry JSONL");
  cmd->add_option("--borders", o.borders, "Border edge CSV");
  cmd->add_option("--special-edges", o.special_edges, "Special edge CSV");
  cmd->add_option("--k", o.k, "Neighbourhood size")->check(CLI::PositiveNumber);
  cmd->add_option("--tau", o.tau, "GER-Strong threshold")->check(CLI::PositiveNumber);
  cmd->add_option("--neighbor-cache", o.neighbor_cache, "Directory of cached neighbour lists");
  cmd->add_flag("--strict-json", o.strict_json, "Require the whole output to be the JSON object");
}

geoeval::RunConfig effective_config(const Overrides& o) {
  geoeval::RunConfig cfg = o.config.empty() ? geoeval::RunConfig{} : geoeval::load_config(o.config);
  if (!o.out.empty()) cfg.out = o.out;
  if (!o.manifest.empty()) cfg.manifest = path(o.manifest);
  if (!o.registry.empty()) cfg.registry = path(o.registry);
  if (!o.borders.empty()) cfg.borders = path(o.borders);
  if (!o.special_edges.empty()) cfg.special_edges = path(o.special_edges);
  if (!o.neighbor_cache.empty()) cfg.neighbor_cache_dir = path(o.neighbor_cache);
  if (o.k) cfg.k = *o.k;
  if (o.tau) cfg.tau = *o.tau;
  if (o.target) cfg.target_total = *o.target;
  if (o.min_per_country) cfg.min_per_country = *o.min_per_country;
  if (o.seed) cfg.seed = *o.seed;
  if (o.strict_json) cfg.strict_json = true;
  geoeval::validate(cfg);
  return cfg;
}

void finish(const geoeval::MetricReport& report, const geoeval::RunConfig& cfg, const std::string& command,
            bool markdown) {
  geoeval::write_report_files(report, cfg.out, markdown);
  geoeval::write_run_meta(report, cfg.out, command);
  std::cout << "wrote " << command << " outputs to " << cfg.out.string() << "\n";
}

int run_sample(const Overrides& o) {
  auto cfg = effective_config(o);
  if (!cfg.manifest || !cfg.registry) throw geoeval::Error("subset-sampler", "sample needs --manifest and --registry");
  const auto registry = geoeval::load_registry(cfg.registry->string());
  const auto manifest = geoeval::load_manifest(cfg.manifest->string(), registry);
  const auto p = geoeval::plan(manifest.samples, cfg.target_total, cfg.min_per_country, cfg.seed);
  const auto subset = geoeval::draw(manifest.samples, p);
  geoeval::fs::create_directories(cfg.out);
  geoeval::write_manifest((cfg.out / "subset_manifest.csv").string(), subset);
  std::ofstream(cfg.out / "sampling_plan.json", std::ios::binary) << p.to_json();
  std::cout << "sampled " << subset.size() << " of " << manifest.samples.size() << " samples across "
            << p.quotas.size() << " countries into " << cfg.out.string() << "\n";
  return 0;
}

int run_graph_export(const Overrides& o) {
  auto cfg = effective_config(o);
  if (!cfg.registry) throw geoeval::Error("geo-graph", "graph export needs --registry");
  const auto registry = geoeval::load_registry(cfg.registry->string());
  const auto graph = geoeval::load_graph(cfg, registry);
  geoeval::fs::create_directories(cfg.out);
  std::ofstream(cfg.out / "graph.json", std::ios::binary) << graph.to_json();
  std::cout << "exported " << graph.nodes().size() << " nodes and " << graph.edges().size() << " edges to "
            << (cfg.out / "graph.json").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geoeval: country-level image geolocalization evaluation"};
  app.require_subcommand(1);

  Overrides o;
  auto* evaluate = app.add_subcommand("evaluate", "Run every stage and write report.md plus all tables");
  auto* accuracy = app.add_subcommand("accuracy", "Top-1 / Top-5 accuracy");
  auto* hop = app.add_subcommand("hop", "Border-hop distribution of Top-1 errors");
  auto* ger = app.add_subcommand("ger", "Geographic Error Reasonableness");
  auto* stratify = app.add_subcommand("stratify", "Urban/rural and consensus-biome accuracy");
  auto* knn = app.add_subcommand("knn", "Exact cosine k-NN; writes neighbour caches");
  auto* sample = app.add_subcommand("sample", "Stratified subset with per-country floors");
  auto* graph = app.add_subcommand("graph", "Country adjacency graph tools");
  auto* graph_export = graph->add_subcommand("export", "Write the built graph as JSON");
  graph->require_subcommand(1);

  for (auto* cmd : {evaluate, accuracy, hop, ger, stratify, knn}) add_common(cmd, o, true);
  add_common(sample, o, false);
  add_common(graph_export, o, false);
  std::string cache_out;
  knn->add_option("--cache-out", cache_out, "Directory for neighbour cache files")->required();
  sample->add_option("--target", o.target, "Target subset size");
  sample->add_option("--min", o.min_per_country, "Per-country minimum");
  sample->add_option("--seed", o.seed, "Sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*sample) return run_sample(o);
    if (*graph_export) return run_graph_export(o);

    const auto cfg = effective_config(o);
    const auto ctx = geoeval::prepare(cfg);
    auto report = geoeval::empty_report(ctx);
    if (*evaluate) {
      report = geoeval::run_all(ctx);
      finish(report, cfg, "evaluate", true);
    } else if (*accuracy) {
      geoeval::stage_accuracy(ctx, report);
      finish(report, cfg, "accuracy", false);
    } else if (*hop) {
      geoeval::stage_hop(ctx, report);
      finish(report, cfg, "hop", false);
    } else if (*ger) {
      geoeval::stage_ger(ctx, geoeval::stage_knn(ctx), report);
      finish(report, cfg, "ger", false);
    } else if (*stratify) {
      geoeval::stage_stratify(ctx, report);
      finish(report, cfg, "stratify", false);
    } else if (*knn) {
      const auto table = geoeval::stage_knn(ctx);
      geoeval::write_neighbor_tables(table, cache_out);
      std::cout << "wrote " << table.size() << " neighbour cache files to " << cache_out << "\n";
    }
    return 0;
  } catch (const geoeval::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
