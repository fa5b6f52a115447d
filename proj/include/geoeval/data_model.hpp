#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace geoeval {

// Canonical country identity. Equality and ordering use the code only.
struct CountryId {
  std::string code;
  std::string display_name;

  friend bool operator==(const CountryId& a, const CountryId& b) { return a.code == b.code; }
  friend auto operator<=>(const CountryId& a, const CountryId& b) { return a.code <=> b.code; }
};

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
};

struct RegistryEntry {
  CountryId id;
  std::vector<std::string> aliases;
  LatLon centroid;
  bool is_island = false;
};

// Country authority used to join manifests, border lists and centroids.
// Prediction matching never goes through aliases; see normalizer.hpp.
class CountryRegistry {
 public:
  CountryRegistry() = default;
  explicit CountryRegistry(std::vector<RegistryEntry> entries);

  // Resolves a code, display name or alias, case-insensitively.
  std::optional<CountryId> resolve(std::string_view name) const;
  const RegistryEntry* find(std::string_view code) const;
  const RegistryEntry& at(std::string_view code) const;

  const std::vector<RegistryEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<RegistryEntry> entries_;
  std::unordered_map<std::string, std::size_t> by_code_;
  std::unordered_map<std::string, std::size_t> by_key_;
};

CountryRegistry load_registry(const std::string& path);

struct SampleRecord {
  std::string sample_id;
  CountryId country;
  std::string dataset;
};

// The distinct ground-truth countries of one manifest (or one dataset of it).
class LabelSpace {
 public:
  LabelSpace() = default;
  LabelSpace(std::string dataset, std::vector<CountryId> countries);

  static LabelSpace from_samples(std::string dataset, std::span<const SampleRecord> samples);

  const std::string& dataset() const { return dataset_; }
  // Sorted by code.
  const std::vector<CountryId>& countries() const { return countries_; }
  std::size_t size() const { return countries_.size(); }
  bool empty() const { return countries_.empty(); }
  bool contains(const CountryId& c) const;

  // Case-insensitive lookup on display name; no alias expansion.
  const CountryId* match_display_name(std::string_view folded_name) const;

 private:
  std::string dataset_;
  std::vector<CountryId> countries_;
  std::unordered_map<std::string, std::size_t> by_folded_name_;
};

struct Manifest {
  std::vector<SampleRecord> samples;
  LabelSpace label_space;

  // Dataset tags in first-appearance order.
  std::vector<std::string> datasets() const;
  std::vector<SampleRecord> samples_of(const std::string& dataset) const;
};

Manifest load_manifest(const std::string& path, const CountryRegistry& registry);
void write_manifest(const std::string& path, std::span<const SampleRecord> samples);

enum class Setting { unconstrained, constrained };

std::string_view to_string(Setting s);
std::optional<Setting> parse_setting(std::string_view s);

struct PredictionRecord {
  std::string sample_id;
  std::string model;
  Setting setting = Setting::unconstrained;
  std::string raw_output;
  std::vector<CountryId> normalized;
};

// Raw prediction log; `normalized` is left empty.
std::vector<PredictionRecord> load_predictions(const std::string& path);

// Row-major float32 matrix with one sample id per row.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::vector<std::string> ids, std::size_t dim, std::vector<float> data);

  std::size_t rows() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<float>& data() const { return data_; }

  std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<float> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }

  std::optional<std::size_t> index_of(std::string_view id) const;

  // Rows for `ids`, in that order. Throws if an id is absent.
  EmbeddingMatrix select(std::span<const std::string> ids) const;

 private:
  std::vector<std::string> ids_;
  std::size_t dim_ = 0;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline constexpr char kGembMagic[4] = {'G', 'E', 'M', 'B'};
inline constexpr std::uint32_t kGembVersion = 1;

EmbeddingMatrix load_embeddings(const std::string& path, const std::string& ids_path);
void write_embeddings(const std::string& path, const std::string& ids_path,
                      const EmbeddingMatrix& matrix);

}  // namespace geoeval
