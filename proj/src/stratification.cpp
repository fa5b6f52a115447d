#include "geoeval/stratification.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "geoeval/error.hpp"
#include "geoeval/text.hpp"

namespace geoeval {
namespace {

constexpr const char* kModule = "stratification";

// Six decimals keeps audit files stable across libm implementations.
double rounded(double p) { return std::round(p * 1e6) / 1e6; }

struct LabellerIndex {
  std::vector<std::string> labellers;
  // labeller -> sample_id -> assignment
  std::vector<std::unordered_map<std::string, const StratumAssignment*>> by_sample;
};

LabellerIndex index_assignments(std::span<const StratumAssignment> assignments) {
  LabellerIndex idx;
  idx.labellers = labellers_of(assignments);
  idx.by_sample.resize(idx.labellers.size());
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < idx.labellers.size(); ++i) pos.emplace(idx.labellers[i], i);
  for (const auto& a : assignments) {
    if (!idx.by_sample[pos.at(a.labeller)].emplace(a.sample_id, &a).second) {
      throw Error(kModule, "duplicate assignment for sample '" + a.sample_id + "' by labeller '" + a.labeller + "'");
    }
  }
  return idx;
}

const StratumAssignment& require(const LabellerIndex& idx, std::size_t labeller, const std::string& sample_id) {
  const auto it = idx.by_sample[labeller].find(sample_id);
  if (it == idx.by_sample[labeller].end()) {
    throw Error(kModule, "sample '" + sample_id + "' has no label from labeller '" + idx.labellers[labeller] + "'");
  }
  return *it->second;
}

}  // namespace

std::vector<std::string> PromptBank::biome_names() const {
  std::vector<std::string> names;
  for (const auto& b : biomes) names.push_back(b.name);
  return names;
}

std::optional<std::string> PromptBank::find_biome(std::string_view name) const {
  const auto folded = text::utf8_lower(text::trim_ascii(name));
  for (const auto& b : biomes) {
    if (text::utf8_lower(b.name) == folded) return b.name;
  }
  return std::nullopt;
}

PromptBank default_prompt_bank() {
  PromptBank bank;
  bank.urban_rural = {PromptEntry{"urban", "an urban city scene"},
                      PromptEntry{"rural", "a rural countryside scene"}};
  bank.biomes = {
      {"Tropical", "a tropical rainforest or jungle scene"},
      {"Arid", "a dry desert or arid landscape"},
      {"Temperate", "a temperate forest or grassland scene"},
      {"Mediterranean", "a Mediterranean coastal or dry summer landscape"},
      {"Tundra", "a cold tundra, snow, or polar landscape"},
      {"Boreal", "a boreal forest or taiga with conifer trees"},
  };
  return bank;
}

void validate(const PromptBank& bank) {
  if (bank.urban_rural[0].name != "urban" || bank.urban_rural[1].name != "rural") {
    throw Error(kModule, "urban/rural prompts must be named urban, rural (in that order)");
  }
  if (bank.biomes.size() != 6) throw Error(kModule, "prompt bank must define exactly 6 biomes");
  std::set<std::string> names;
  for (const auto& b : bank.biomes) {
    if (b.name.empty() || b.prompt.empty()) throw Error(kModule, "biome entries need a name and a prompt");
    if (!names.insert(text::utf8_lower(b.name)).second) throw Error(kModule, "duplicate biome '" + b.name + "'");
  }
}

PromptBank load_prompt_bank(const std::string& path) {
  const auto j = nlohmann::json::parse(text::read_file(path, kModule), nullptr, false);
  if (j.is_discarded()) throw Error(kModule, "prompt bank '" + path + "' is not valid JSON");
  PromptBank bank;
  try {
    const auto& ur = j.at("urban_rural");
    if (!ur.is_array() || ur.size() != 2) throw Error(kModule, "prompt bank needs exactly 2 urban/rural prompts");
    for (std::size_t i = 0; i < 2; ++i) {
      bank.urban_rural[i] = {ur[i].at("name").get<std::string>(), ur[i].at("prompt").get<std::string>()};
    }
    for (const auto& b : j.at("biomes")) {
      bank.biomes.push_back({b.at("name").get<std::string>(), b.at("prompt").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(kModule, "invalid prompt bank '" + path + "': " + ex.what());
  }
  validate(bank);
  return bank;
}

std::string_view to_string(UrbanRural u) { return u == UrbanRural::urban ? "urban" : "rural"; }

std::vector<ZeroShotLabel> zero_shot_label(const EmbeddingMatrix& images, const EmbeddingMatrix& prompts,
                                           std::span<const std::string> category_names) {
  if (images.dim() != prompts.dim()) {
    throw Error(kModule, "image/prompt embedding dims differ (" + std::to_string(images.dim()) + " vs " +
                             std::to_string(prompts.dim()) + ")");
  }
  if (prompts.rows() < 2) throw Error(kModule, "zero-shot labelling needs at least 2 prompts");
  if (prompts.rows() != category_names.size()) {
    throw Error(kModule, "prompt matrix has " + std::to_string(prompts.rows()) + " rows for " +
                             std::to_string(category_names.size()) + " categories");
  }
  std::vector<ZeroShotLabel> out(images.rows());
  std::vector<double> sims(prompts.rows());
  for (std::size_t i = 0; i < images.rows(); ++i) {
    const auto img = images.row(i);
    std::size_t best = 0;
    for (std::size_t p = 0; p < prompts.rows(); ++p) {
      const auto pr = prompts.row(p);
      double dot = 0.0;
      for (std::size_t d = 0; d < img.size(); ++d) dot += static_cast<double>(img[d]) * pr[d];
      sims[p] = dot;
      if (dot > sims[best]) best = p;
    }
    double denom = 0.0;
    for (double s : sims) denom += std::exp(kSoftmaxScale * (s - sims[best]));
    out[i] = {best, 1.0 / denom};
  }
  return out;
}

std::vector<StratumAssignment> zero_shot_assign(const EmbeddingMatrix& images,
                                                const EmbeddingMatrix& urban_rural_prompts,
                                                const EmbeddingMatrix& biome_prompts, const PromptBank& bank,
                                                const std::string& labeller) {
  validate(bank);
  const std::vector<std::string> ur_names{bank.urban_rural[0].name, bank.urban_rural[1].name};
  const auto biome_names = bank.biome_names();
  const auto ur = zero_shot_label(images, urban_rural_prompts, ur_names);
  const auto bi = zero_shot_label(images, biome_prompts, biome_names);
  std::vector<StratumAssignment> out(images.rows());
  for (std::size_t i = 0; i < images.rows(); ++i) {
    auto& a = out[i];
    a.sample_id = images.ids()[i];
    a.labeller = labeller;
    a.urban_rural = ur[i].category == 0 ? UrbanRural::urban : UrbanRural::rural;
    a.urban_rural_confidence = ur[i].confidence;
    a.biome = biome_names[bi[i].category];
    a.biome_confidence = bi[i].confidence;
  }
  return out;
}

std::vector<StratumAssignment> import_labels(const std::string& path, const PromptBank& bank) {
  std::vector<StratumAssignment> out;
  std::set<std::pair<std::string, std::string>> seen;
  const auto lines = text::read_lines(path, kModule);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (text::trim_ascii(lines[n]).empty()) continue;
    const auto where = path + ":" + std::to_string(n + 1);
    const auto j = nlohmann::json::parse(lines[n], nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(kModule, "malformed label line " + where);
    StratumAssignment a;
    std::string ur;
    std::string biome;
    try {
      a.sample_id = j.at("sample_id").get<std::string>();
      a.labeller = j.at("labeller").get<std::string>();
      ur = text::utf8_lower(text::trim_ascii(j.at("urban_rural").get<std::string>()));
      biome = j.at("biome").get<std::string>();
      if (j.contains("confidence")) a.urban_rural_confidence = a.biome_confidence = j.at("confidence").get<double>();
    } catch (const nlohmann::json::exception& ex) {
      throw Error(kModule, "invalid label record at " + where + ": " + ex.what());
    }
    if (ur == "urban") {
      a.urban_rural = UrbanRural::urban;
    } else if (ur == "rural") {
      a.urban_rural = UrbanRural::rural;
    } else {
      throw Error(kModule, "unknown urban/rural category '" + ur + "' at " + where);
    }
    const auto canonical = bank.find_biome(biome);
    if (!canonical) throw Error(kModule, "unknown biome '" + biome + "' at " + where);
    a.biome = *canonical;
    if (!seen.emplace(a.sample_id, a.labeller).second) {
      throw Error(kModule, "duplicate (sample_id, labeller) pair (" + a.sample_id + ", " + a.labeller + ") at " + where);
    }
    out.push_back(std::move(a));
  }
  return out;
}

void write_assignments(const std::string& path, std::span<const StratumAssignment> assignments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(kModule, "cannot write '" + path + "'");
  for (const auto& a : assignments) {
    nlohmann::ordered_json j;
    j["sample_id"] = a.sample_id;
    j["labeller"] = a.labeller;
    j["urban_rural"] = std::string(to_string(a.urban_rural));
    j["biome"] = a.biome;
    j["urban_rural_confidence"] = rounded(a.urban_rural_confidence);
    j["biome_confidence"] = rounded(a.biome_confidence);
    out << j.dump() << '\n';
  }
}

std::vector<std::string> labellers_of(std::span<const StratumAssignment> assignments) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& a : assignments) {
    if (seen.insert(a.labeller).second) out.push_back(a.labeller);
  }
  return out;
}

std::vector<ConsensusLabel> consensus_filter(std::span<const SampleRecord> samples,
                                             std::span<const StratumAssignment> assignments) {
  const auto idx = index_assignments(assignments);
  if (idx.labellers.size() < 3) {
    throw Error(kModule, "consensus filtering needs at least 3 labellers, got " + std::to_string(idx.labellers.size()));
  }
  std::vector<ConsensusLabel> out;
  for (const auto& s : samples) {
    const auto& first = require(idx, 0, s.sample_id).biome;
    bool unanimous = true;
    for (std::size_t l = 1; l < idx.labellers.size(); ++l) {
      if (require(idx, l, s.sample_id).biome != first) unanimous = false;
    }
    if (unanimous) out.push_back({s.sample_id, first});
  }
  return out;
}

std::vector<StratumSummary> urban_rural_accuracy(std::span<const SampleRecord> samples,
                                                 const PredictionMap& predictions,
                                                 std::span<const StratumAssignment> assignments) {
  const auto idx = index_assignments(assignments);
  if (idx.labellers.empty()) throw Error(kModule, "no urban/rural labels supplied");
  std::vector<StratumSummary> out;
  for (const auto stratum : {UrbanRural::urban, UrbanRural::rural}) {
    StratumSummary sum;
    sum.stratum = std::string(to_string(stratum));
    sum.labellers = idx.labellers;
    std::vector<double> top1;
    std::vector<double> top5;
    for (std::size_t l = 0; l < idx.labellers.size(); ++l) {
      std::vector<SampleRecord> members;
      for (const auto& s : samples) {
        if (require(idx, l, s.sample_id).urban_rural == stratum) members.push_back(s);
      }
      auto acc = evaluate(members, predictions);
      if (acc.top1) {
        top1.push_back(*acc.top1);
        top5.push_back(*acc.top5);
      }
      sum.per_labeller.push_back(std::move(acc));
    }
    if (!top1.empty()) {
      sum.top1 = mean_std(top1);
      sum.top5 = mean_std(top5);
    }
    out.push_back(std::move(sum));
  }
  return out;
}

BiomeTable biome_accuracy(std::span<const SampleRecord> samples, const PredictionMap& predictions,
                          std::span<const ConsensusLabel> consensus, const PromptBank& bank) {
  std::unordered_map<std::string, const SampleRecord*> by_id;
  for (const auto& s : samples) by_id.emplace(s.sample_id, &s);
  BiomeTable table;
  table.n_samples = samples.size();
  table.n_consensus = consensus.size();
  for (const auto& b : bank.biomes) {
    std::vector<SampleRecord> members;
    for (const auto& c : consensus) {
      if (c.biome != b.name) continue;
      const auto it = by_id.find(c.sample_id);
      if (it == by_id.end()) throw Error(kModule, "consensus sample '" + c.sample_id + "' is not in the manifest");
      members.push_back(*it->second);
    }
    table.strata.push_back({b.name, evaluate(members, predictions)});
  }
  return table;
}

}  // namespace geoeval
