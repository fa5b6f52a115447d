#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geoeval/accuracy.hpp"
#include "geoeval/data_model.hpp"
#include "geoeval/ger.hpp"

namespace geoeval {

struct PromptEntry {
  std::string name;
  std::string prompt;
};

// Urban/rural prompt pair (urban first) and the six biome prompts.
struct PromptBank {
  std::array<PromptEntry, 2> urban_rural;
  std::vector<PromptEntry> biomes;

  std::vector<std::string> biome_names() const;
  // Canonical biome name for a case-insensitive match, if any.
  std::optional<std::string> find_biome(std::string_view name) const;
};

PromptBank default_prompt_bank();
// {"urban_rural": [{"name","prompt"} x2], "biomes": [{"name","prompt"} x6]}
PromptBank load_prompt_bank(const std::string& path);
void validate(const PromptBank& bank);

enum class UrbanRural { urban, rural };

std::string_view to_string(UrbanRural u);

struct StratumAssignment {
  std::string sample_id;
  std::string labeller;
  UrbanRural urban_rural = UrbanRural::urban;
  std::string biome;
  // Softmax probabilities of the chosen labels; 1.0 for imported labels
  // that carry none.
  double urban_rural_confidence = 1.0;
  double biome_confidence = 1.0;
};

// Logit scale applied to cosine similarities before the softmax.
inline constexpr double kSoftmaxScale = 100.0;

struct ZeroShotLabel {
  std::size_t category = 0;
  double confidence = 0.0;
};

// Argmax over raw cosine similarity (first prompt wins ties). Confidence is
// the softmax of kSoftmaxScale * similarity at the chosen prompt.
std::vector<ZeroShotLabel> zero_shot_label(const EmbeddingMatrix& images, const EmbeddingMatrix& prompts,
                                           std::span<const std::string> category_names);

// Both label families for one contrastive labeller. Prompt rows follow the
// bank order.
std::vector<StratumAssignment> zero_shot_assign(const EmbeddingMatrix& images,
                                                const EmbeddingMatrix& urban_rural_prompts,
                                                const EmbeddingMatrix& biome_prompts, const PromptBank& bank,
                                                const std::string& labeller);

// JSONL rows {"sample_id","labeller","urban_rural","biome"[,"confidence"]}.
std::vector<StratumAssignment> import_labels(const std::string& path, const PromptBank& bank);

void write_assignments(const std::string& path, std::span<const StratumAssignment> assignments);

// Labellers in first-appearance order.
std::vector<std::string> labellers_of(std::span<const StratumAssignment> assignments);

struct ConsensusLabel {
  std::string sample_id;
  std::string biome;
};

// Keeps the samples on which every labeller names the same biome; output
// follows `samples` order. Needs >= 3 labellers, each covering all samples.
std::vector<ConsensusLabel> consensus_filter(std::span<const SampleRecord> samples,
                                             std::span<const StratumAssignment> assignments);

struct StratumSummary {
  std::string stratum;
  // One entry per labeller, in labeller order.
  std::vector<std::string> labellers;
  std::vector<AccuracyResult> per_labeller;
  // Over labellers whose partition left the stratum non-empty.
  std::optional<MeanStd> top1;
  std::optional<MeanStd> top5;
};

// Accuracy under each labeller's own urban/rural partition, then mean and
// population std across labellers. Strata: urban, rural.
std::vector<StratumSummary> urban_rural_accuracy(std::span<const SampleRecord> samples,
                                                 const PredictionMap& predictions,
                                                 std::span<const StratumAssignment> assignments);

struct BiomeStratum {
  std::string biome;
  AccuracyResult accuracy;
};

struct BiomeTable {
  std::size_t n_samples = 0;
  std::size_t n_consensus = 0;
  std::vector<BiomeStratum> strata;  // bank order
};

// Accuracy per consensus biome subset.
BiomeTable biome_accuracy(std::span<const SampleRecord> samples, const PredictionMap& predictions,
                          std::span<const ConsensusLabel> consensus, const PromptBank& bank);

}  // namespace geoeval
