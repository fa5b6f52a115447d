#include "geoeval/config.hpp"

#include <algorithm>
#include <array>
#include <map>

#include <json.hpp>
#include <openssl/evp.h>

#include "geoeval/error.hpp"
#include "geoeval/text.hpp"

namespace geoeval {
namespace {

constexpr const char* kModule = "config";

std::string unquote(std::string_view v, const std::string& where) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
    const auto j = nlohmann::json::parse(v, nullptr, false);
    if (j.is_discarded() || !j.is_string()) throw Error(kModule, "bad string value at " + where);
    return j.get<std::string>();
  }
  return std::string(v);
}

std::vector<std::string> values_of(std::string_view v, const std::string& where) {
  if (!v.empty() && v.front() == '[') {
    const auto j = nlohmann::json::parse(v, nullptr, false);
    if (j.is_discarded() || !j.is_array()) throw Error(kModule, "bad list value at " + where);
    std::vector<std::string> out;
    for (const auto& e : j) {
      if (!e.is_string()) throw Error(kModule, "list entries must be strings at " + where);
      out.push_back(e.get<std::string>());
    }
    return out;
  }
  return {unquote(v, where)};
}

std::size_t to_count(const std::string& v, const std::string& key) {
  const bool digits = !v.empty() && std::all_of(v.begin(), v.end(), [](char c) { return c >= '0' && c <= '9'; });
  try {
    if (!digits) throw std::invalid_argument(v);
    std::size_t used = 0;
    const auto n = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    throw Error(kModule, "'" + key + "' must be a non-negative integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw Error(kModule, "'" + key + "' must be true or false");
}

fs::path default_ids(const fs::path& gemb) {
  fs::path ids = gemb;
  ids.replace_extension(".ids");
  return ids;
}

void hash_update(EVP_MD_CTX* ctx, std::string_view s) {
  const std::uint64_t len = s.size();
  EVP_DigestUpdate(ctx, &len, sizeof len);
  EVP_DigestUpdate(ctx, s.data(), s.size());
}

}  // namespace

RunConfig load_config(const fs::path& path) {
  const auto base = path.parent_path();
  const auto lines = text::read_lines(path.string(), kModule);
  RunConfig cfg;
  std::map<std::string, std::map<std::string, fs::path>> enc;
  std::string section;
  auto resolve = [&](const std::string& v) { return fs::path(v).is_absolute() ? fs::path(v) : base / v; };

  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto where = path.string() + ":" + std::to_string(n + 1);
    auto line = text::trim_ascii(lines[n]);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = std::string(text::trim_ascii(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(kModule, "expected key = value at " + where);
    std::string key(text::trim_ascii(line.substr(0, eq)));
    const auto raw = text::trim_ascii(line.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;
    const auto vals = values_of(raw, where);
    const auto single = [&]() -> const std::string& {
      if (vals.size() != 1) throw Error(kModule, "'" + key + "' takes one value at " + where);
      return vals.front();
    };

    if (key == "manifest") {
      cfg.manifest = resolve(single());
    } else if (key == "registry") {
      cfg.registry = resolve(single());
    } else if (key == "borders") {
      cfg.borders = resolve(single());
    } else if (key == "special_edges") {
      cfg.special_edges = resolve(single());
    } else if (key == "prompt_bank") {
      cfg.prompt_bank = resolve(single());
    } else if (key == "neighbor_cache") {
      cfg.neighbor_cache_dir = resolve(single());
    } else if (key == "out") {
      cfg.out = resolve(single());
    } else if (key == "predictions") {
      for (const auto& v : vals) cfg.predictions.push_back(resolve(v));
    } else if (key == "labels") {
      for (const auto& v : vals) cfg.labels.push_back(resolve(v));
    } else if (key == "k") {
      cfg.k = to_count(single(), key);
    } else if (key == "tau") {
      cfg.tau = to_count(single(), key);
    } else if (key == "min_per_country") {
      cfg.min_per_country = to_count(single(), key);
    } else if (key == "target_total") {
      cfg.target_total = to_count(single(), key);
    } else if (key == "seed") {
      cfg.seed = to_count(single(), key);
    } else if (key == "strict_json") {
      cfg.strict_json = to_bool(single(), key);
    } else if (key.rfind("embeddings.", 0) == 0) {
      const auto rest = key.substr(std::string("embeddings.").size());
      const auto dot = rest.rfind('.');
      static const std::array<std::string, 6> fields{"gemb", "ids", "urban_rural_prompts", "urban_rural_ids",
                                                     "biome_prompts", "biome_ids"};
      if (dot == std::string::npos || dot == 0 ||
          std::find(fields.begin(), fields.end(), rest.substr(dot + 1)) == fields.end()) {
        throw Error(kModule, "unknown embeddings key '" + key + "' at " + where);
      }
      enc[rest.substr(0, dot)][rest.substr(dot + 1)] = resolve(single());
    } else {
      throw Error(kModule, "unknown key '" + key + "' at " + where);
    }
  }

  for (auto& [name, fields] : enc) {
    if (!fields.count("gemb")) throw Error(kModule, "encoder '" + name + "' has no gemb path");
    EncoderConfig e;
    e.name = name;
    e.images = {fields.at("gemb"), fields.count("ids") ? fields.at("ids") : default_ids(fields.at("gemb"))};
    if (fields.count("urban_rural_prompts")) {
      const auto& g = fields.at("urban_rural_prompts");
      e.urban_rural_prompts = GembInput{g, fields.count("urban_rural_ids") ? fields.at("urban_rural_ids") : default_ids(g)};
    }
    if (fields.count("biome_prompts")) {
      const auto& g = fields.at("biome_prompts");
      e.biome_prompts = GembInput{g, fields.count("biome_ids") ? fields.at("biome_ids") : default_ids(g)};
    }
    cfg.encoders.push_back(std::move(e));
  }
  return cfg;
}

void validate(const RunConfig& c) {
  auto check = [](const fs::path& p, const std::string& what) {
    if (!fs::exists(p)) throw Error(kModule, what + " path does not exist: " + p.string());
  };
  auto check_opt = [&](const std::optional<fs::path>& p, const std::string& what) {
    if (p) check(*p, what);
  };
  check_opt(c.manifest, "manifest");
  check_opt(c.registry, "registry");
  check_opt(c.borders, "borders");
  check_opt(c.special_edges, "special_edges");
  check_opt(c.prompt_bank, "prompt_bank");
  check_opt(c.neighbor_cache_dir, "neighbor_cache");
  for (const auto& p : c.predictions) check(p, "predictions");
  for (const auto& p : c.labels) check(p, "labels");
  for (const auto& e : c.encoders) {
    check(e.images.gemb, "embeddings." + e.name + ".gemb");
    check(e.images.ids, "embeddings." + e.name + ".ids");
    if (e.urban_rural_prompts) {
      check(e.urban_rural_prompts->gemb, "embeddings." + e.name + ".urban_rural_prompts");
      check(e.urban_rural_prompts->ids, "embeddings." + e.name + ".urban_rural_ids");
    }
    if (e.biome_prompts) {
      check(e.biome_prompts->gemb, "embeddings." + e.name + ".biome_prompts");
      check(e.biome_prompts->ids, "embeddings." + e.name + ".biome_ids");
    }
  }
  if (c.k < 1) throw Error(kModule, "k must be at least 1");
  if (c.tau < 1) throw Error(kModule, "tau must be at least 1");
}

std::string config_hash(const RunConfig& c) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  auto param = [&](const std::string& key, const std::string& value) { hash_update(ctx, key + "=" + value); };
  auto file = [&](const std::string& role, const fs::path& p) {
    hash_update(ctx, role);
    hash_update(ctx, text::read_file(p.string(), kModule));
  };
  auto file_opt = [&](const std::string& role, const std::optional<fs::path>& p) {
    if (p) file(role, *p);
  };
  param("k", std::to_string(c.k));
  param("tau", std::to_string(c.tau));
  param("min_per_country", std::to_string(c.min_per_country));
  param("target_total", std::to_string(c.target_total));
  param("seed", std::to_string(c.seed));
  param("strict_json", c.strict_json ? "true" : "false");
  file_opt("manifest", c.manifest);
  file_opt("registry", c.registry);
  file_opt("borders", c.borders);
  file_opt("special_edges", c.special_edges);
  file_opt("prompt_bank", c.prompt_bank);
  for (const auto& p : c.predictions) file("predictions", p);
  for (const auto& p : c.labels) file("labels", p);
  for (const auto& e : c.encoders) {
    param("encoder", e.name);
    file("gemb", e.images.gemb);
    file("ids", e.images.ids);
    if (e.urban_rural_prompts) {
      file("urban_rural_prompts", e.urban_rural_prompts->gemb);
      file("urban_rural_ids", e.urban_rural_prompts->ids);
    }
    if (e.biome_prompts) {
      file("biome_prompts", e.biome_prompts->gemb);
      file("biome_ids", e.biome_prompts->ids);
    }
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

}  // namespace geoeval
