#include "geoeval/data_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "geoeval/error.hpp"
#include "geoeval/text.hpp"

namespace geoeval {
namespace {

constexpr const char* kModule = "data-model";

static_assert(std::endian::native == std::endian::little,
              "GEMB I/O assumes a little-endian host");

std::string upper_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 32);
  }
  return out;
}

template <typename T>
T read_le(const std::string& buf, std::size_t offset) {
  T v;
  std::memcpy(&v, buf.data() + offset, sizeof v);
  return v;
}

}  // namespace

CountryRegistry::CountryRegistry(std::vector<RegistryEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto& e = entries_[i];
    e.id.code = upper_ascii(e.id.code);
    if (e.id.code.size() < 2 || e.id.code.size() > 3) {
      throw Error(kModule, "registry code '" + e.id.code + "' must have 2-3 characters");
    }
    if (e.id.display_name.empty()) {
      throw Error(kModule, "registry entry " + e.id.code + " has an empty name");
    }
    if (!(e.centroid.lat >= -90.0 && e.centroid.lat <= 90.0) ||
        !(e.centroid.lon > -180.0 && e.centroid.lon <= 180.0)) {
      throw Error(kModule, "registry entry " + e.id.code + " has an out-of-range centroid");
    }
    if (!by_code_.emplace(e.id.code, i).second) {
      throw Error(kModule, "duplicate registry code " + e.id.code);
    }
  }
  // Keys: code, display name, aliases. A key may only point to one entry.
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    std::vector<std::string> keys{e.id.code, e.id.display_name};
    keys.insert(keys.end(), e.aliases.begin(), e.aliases.end());
    for (const auto& k : keys) {
      const std::string folded = text::utf8_lower(text::trim_ascii(k));
      if (folded.empty()) continue;
      auto [it, inserted] = by_key_.emplace(folded, i);
      if (!inserted && it->second != i) {
        throw Error(kModule, "alias '" + k + "' maps to both " + entries_[it->second].id.code +
                                 " and " + e.id.code);
      }
    }
  }
}

std::optional<CountryId> CountryRegistry::resolve(std::string_view name) const {
  const auto it = by_key_.find(text::utf8_lower(text::trim_ascii(name)));
  if (it == by_key_.end()) return std::nullopt;
  return entries_[it->second].id;
}

const RegistryEntry* CountryRegistry::find(std::string_view code) const {
  const auto it = by_code_.find(upper_ascii(code));
  return it == by_code_.end() ? nullptr : &entries_[it->second];
}

const RegistryEntry& CountryRegistry::at(std::string_view code) const {
  const auto* e = find(code);
  if (e == nullptr) throw Error(kModule, "unknown country code '" + std::string(code) + "'");
  return *e;
}

CountryRegistry load_registry(const std::string& path) {
  const auto lines = text::read_lines(path, kModule);
  std::vector<RegistryEntry> entries;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (text::trim_ascii(lines[n]).empty()) continue;
    const auto where = path + ":" + std::to_string(n + 1);
    const auto j = nlohmann::json::parse(lines[n], nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(kModule, "malformed registry line " + where);
    try {
      RegistryEntry e;
      e.id.code = j.at("code").get<std::string>();
      e.id.display_name = j.at("name").get<std::string>();
      if (j.contains("aliases")) e.aliases = j.at("aliases").get<std::vector<std::string>>();
      e.centroid.lat = j.at("lat").get<double>();
      e.centroid.lon = j.at("lon").get<double>();
      e.is_island = j.value("island", false);
      entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(kModule, "invalid registry entry at " + where + ": " + ex.what());
    }
  }
  return CountryRegistry(std::move(entries));
}

LabelSpace::LabelSpace(std::string dataset, std::vector<CountryId> countries)
    : dataset_(std::move(dataset)), countries_(std::move(countries)) {
  std::sort(countries_.begin(), countries_.end());
  countries_.erase(std::unique(countries_.begin(), countries_.end()), countries_.end());
  for (std::size_t i = 0; i < countries_.size(); ++i) {
    by_folded_name_.emplace(text::utf8_lower(text::trim_ascii(countries_[i].display_name)), i);
  }
}

LabelSpace LabelSpace::from_samples(std::string dataset, std::span<const SampleRecord> samples) {
  std::vector<CountryId> countries;
  countries.reserve(samples.size());
  for (const auto& s : samples) countries.push_back(s.country);
  return LabelSpace(std::move(dataset), std::move(countries));
}

bool LabelSpace::contains(const CountryId& c) const {
  return std::binary_search(countries_.begin(), countries_.end(), c);
}

const CountryId* LabelSpace::match_display_name(std::string_view folded_name) const {
  const auto it = by_folded_name_.find(std::string(folded_name));
  return it == by_folded_name_.end() ? nullptr : &countries_[it->second];
}

std::vector<std::string> Manifest::datasets() const {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& s : samples) {
    if (seen.insert(s.dataset).second) out.push_back(s.dataset);
  }
  return out;
}

std::vector<SampleRecord> Manifest::samples_of(const std::string& dataset) const {
  std::vector<SampleRecord> out;
  for (const auto& s : samples) {
    if (s.dataset == dataset) out.push_back(s);
  }
  return out;
}

Manifest load_manifest(const std::string& path, const CountryRegistry& registry) {
  const auto lines = text::read_lines(path, kModule);
  if (lines.empty() || text::trim_ascii(lines[0]) != "sample_id,country,dataset") {
    throw Error(kModule, "manifest '" + path + "' must start with header sample_id,country,dataset");
  }
  Manifest m;
  std::unordered_set<std::string> ids;
  std::size_t row = 0;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (text::trim_ascii(lines[n]).empty()) continue;
    ++row;
    const auto fields = text::split_csv_line(lines[n]);
    if (fields.size() != 3) {
      throw Error(kModule, "expected 3 fields at row " + std::to_string(row) + " of " + path);
    }
    SampleRecord rec;
    rec.sample_id = std::string(text::trim_ascii(fields[0]));
    rec.dataset = std::string(text::trim_ascii(fields[2]));
    if (rec.sample_id.empty()) throw Error(kModule, "empty sample_id at row " + std::to_string(row));
    const auto country = registry.resolve(fields[1]);
    if (!country) {
      throw Error(kModule, "unresolvable country '" + std::string(text::trim_ascii(fields[1])) +
                               "' at row " + std::to_string(row));
    }
    rec.country = *country;
    if (!ids.insert(rec.sample_id).second) {
      throw Error(kModule, "duplicate sample_id '" + rec.sample_id + "' at row " + std::to_string(row));
    }
    m.samples.push_back(std::move(rec));
  }
  const auto datasets = m.datasets();
  std::string tag;
  for (std::size_t i = 0; i < datasets.size(); ++i) tag += (i ? "+" : "") + datasets[i];
  m.label_space = LabelSpace::from_samples(tag, m.samples);
  return m;
}

void write_manifest(const std::string& path, std::span<const SampleRecord> samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(kModule, "cannot write '" + path + "'");
  out << "sample_id,country,dataset\n";
  for (const auto& s : samples) out << s.sample_id << ',' << s.country.code << ',' << s.dataset << '\n';
}

std::string_view to_string(Setting s) {
  return s == Setting::constrained ? "constrained" : "unconstrained";
}

std::optional<Setting> parse_setting(std::string_view s) {
  if (s == "unconstrained") return Setting::unconstrained;
  if (s == "constrained") return Setting::constrained;
  return std::nullopt;
}

std::vector<PredictionRecord> load_predictions(const std::string& path) {
  const auto lines = text::read_lines(path, kModule);
  std::vector<PredictionRecord> out;
  std::set<std::tuple<std::string, std::string, Setting>> seen;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (text::trim_ascii(lines[n]).empty()) continue;
    const auto where = path + ":" + std::to_string(n + 1);
    const auto j = nlohmann::json::parse(lines[n], nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(kModule, "malformed prediction line " + where);
    PredictionRecord rec;
    try {
      rec.sample_id = j.at("sample_id").get<std::string>();
      rec.model = j.at("model").get<std::string>();
      const auto setting = parse_setting(j.at("setting").get<std::string>());
      if (!setting) throw Error(kModule, "unknown setting at " + where);
      rec.setting = *setting;
      // Failed backend calls may carry null output; those score as empty.
      const auto& raw = j.at("raw_output");
      rec.raw_output = raw.is_null() ? std::string{} : raw.get<std::string>();
    } catch (const nlohmann::json::exception& ex) {
      throw Error(kModule, "invalid prediction record at " + where + ": " + ex.what());
    }
    if (!seen.emplace(rec.sample_id, rec.model, rec.setting).second) {
      throw Error(kModule, "duplicate prediction for sample '" + rec.sample_id + "' (" + rec.model +
                               ", " + std::string(to_string(rec.setting)) + ") at " + where);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> ids, std::size_t dim, std::vector<float> data)
    : ids_(std::move(ids)), dim_(dim), data_(std::move(data)) {
  if (data_.size() != ids_.size() * dim_) throw Error(kModule, "id/row count mismatch");
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i].empty()) throw Error(kModule, "empty embedding id at row " + std::to_string(i));
    if (!index_.emplace(ids_[i], i).second) {
      throw Error(kModule, "duplicate embedding id '" + ids_[i] + "'");
    }
  }
}

std::optional<std::size_t> EmbeddingMatrix::index_of(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

EmbeddingMatrix EmbeddingMatrix::select(std::span<const std::string> ids) const {
  std::vector<float> data;
  data.reserve(ids.size() * dim_);
  for (const auto& id : ids) {
    const auto idx = index_of(id);
    if (!idx) throw Error(kModule, "sample '" + id + "' has no embedding row");
    const auto r = row(*idx);
    data.insert(data.end(), r.begin(), r.end());
  }
  return EmbeddingMatrix({ids.begin(), ids.end()}, dim_, std::move(data));
}

EmbeddingMatrix load_embeddings(const std::string& path, const std::string& ids_path) {
  const std::string buf = text::read_file(path, kModule);
  constexpr std::size_t header = 4 + 4 + 4 + 8;
  if (buf.size() < header) throw Error(kModule, "truncated embedding header in '" + path + "'");
  if (std::memcmp(buf.data(), kGembMagic, 4) != 0) {
    throw Error(kModule, "magic mismatch in '" + path + "' (expected GEMB)");
  }
  const auto version = read_le<std::uint32_t>(buf, 4);
  if (version != kGembVersion) {
    throw Error(kModule, "unsupported GEMB version " + std::to_string(version));
  }
  const auto dim = read_le<std::uint32_t>(buf, 8);
  const auto count = read_le<std::uint64_t>(buf, 12);
  if (dim == 0) throw Error(kModule, "embedding dim must be positive");
  const auto floats = count * dim;
  if (count != 0 && floats / count != dim) throw Error(kModule, "embedding size overflow");
  if (buf.size() - header < floats * sizeof(float)) {
    throw Error(kModule, "truncated embedding payload in '" + path + "'");
  }
  if (buf.size() - header > floats * sizeof(float)) {
    throw Error(kModule, "trailing bytes after embedding payload in '" + path + "'");
  }

  auto lines = text::read_lines(ids_path, kModule);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.size() != count) {
    throw Error(kModule, "id/row count mismatch: " + std::to_string(lines.size()) + " ids for " +
                             std::to_string(count) + " rows");
  }

  std::vector<float> data(floats);
  std::memcpy(data.data(), buf.data() + header, floats * sizeof(float));
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw Error(kModule, "non-finite value in row of sample '" + lines[i / dim] + "'");
    }
  }
  return EmbeddingMatrix(std::move(lines), dim, std::move(data));
}

void write_embeddings(const std::string& path, const std::string& ids_path,
                      const EmbeddingMatrix& matrix) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(kModule, "cannot write '" + path + "'");
  const std::uint32_t version = kGembVersion;
  const auto dim = static_cast<std::uint32_t>(matrix.dim());
  const std::uint64_t count = matrix.rows();
  out.write(kGembMagic, 4);
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  out.write(reinterpret_cast<const char*>(matrix.data().data()),
            static_cast<std::streamsize>(matrix.data().size() * sizeof(float)));
  std::ofstream ids(ids_path, std::ios::binary);
  if (!ids) throw Error(kModule, "cannot write '" + ids_path + "'");
  for (const auto& id : matrix.ids()) ids << id << '\n';
}

}  // namespace geoeval
