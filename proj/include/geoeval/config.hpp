#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace geoeval {

namespace fs = std::filesystem;

struct GembInput {
  fs::path gemb;
  fs::path ids;
};

struct EncoderConfig {
  std::string name;
  GembInput images;
  std::optional<GembInput> urban_rural_prompts;
  std::optional<GembInput> biome_prompts;
};

// Run configuration. Read from a key/value file:
//
//   # comment
//   manifest = "manifest.csv"
//   predictions = ["a.jsonl", "b.jsonl"]     (or the key repeated)
//   [embeddings.clip]
//   gemb = "clip.gemb"                       (ids default to clip.ids)
//   urban_rural_prompts = "clip_ur.gemb"
//   biome_prompts = "clip_biome.gemb"
//
// Relative paths resolve against the config file's directory.
struct RunConfig {
  std::optional<fs::path> manifest;
  std::optional<fs::path> registry;
  std::optional<fs::path> borders;
  std::optional<fs::path> special_edges;
  std::optional<fs::path> prompt_bank;  // built-in bank when absent
  std::vector<fs::path> predictions;
  std::vector<fs::path> labels;        // imported labeller assignments
  std::vector<EncoderConfig> encoders;  // sorted by name
  std::optional<fs::path> neighbor_cache_dir;
  fs::path out = "geoeval_out";
  std::size_t k = 5;
  std::size_t tau = 2;
  std::size_t min_per_country = 20;
  std::size_t target_total = 50000;
  std::uint64_t seed = 0;
  bool strict_json = false;
};

RunConfig load_config(const fs::path& path);

// Every path that is present must exist; k >= 1, tau >= 1.
void validate(const RunConfig& config);

// SHA-256 over the effective parameters and the bytes of every input file.
// Independent of where the inputs live and of the output directory.
std::string config_hash(const RunConfig& config);

}  // namespace geoeval
