#include "geoeval/normalizer.hpp"

#include <algorithm>
#include <optional>

#include <json.hpp>

#include "geoeval/error.hpp"
#include "geoeval/text.hpp"

namespace geoeval {
namespace {

using nlohmann::json;

// End index (inclusive) of the balanced object starting at `open`, if any.
std::optional<std::size_t> balanced_end(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::nullopt;
}

enum class Candidate { accepted, no_key, bad_value, not_object };

Candidate inspect(const json& j, std::vector<std::string>& names) {
  if (!j.is_object()) return Candidate::not_object;
  const auto it = j.find("predictions");
  if (it == j.end()) return Candidate::no_key;
  if (!it->is_array()) return Candidate::bad_value;
  std::vector<std::string> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_string()) return Candidate::bad_value;
    out.push_back(v.get<std::string>());
  }
  names = std::move(out);
  return Candidate::accepted;
}

}  // namespace

std::string_view to_string(ParseStatus s) {
  switch (s) {
    case ParseStatus::ok: return "ok";
    case ParseStatus::key_missing: return "key_missing";
    case ParseStatus::parse_failed: break;
  }
  return "parse_failed";
}

ParseOutcome parse_raw(std::string_view raw_output, bool strict) {
  ParseOutcome result;
  if (strict) {
    const auto body = text::trim_ascii(raw_output);
    const auto j = json::parse(body.begin(), body.end(), nullptr, false);
    if (j.is_discarded()) return result;
    switch (inspect(j, result.ranked_names)) {
      case Candidate::accepted: result.status = ParseStatus::ok; break;
      case Candidate::no_key: result.status = ParseStatus::key_missing; break;
      default: break;
    }
    return result;
  }

  bool saw_object = false;
  bool saw_bad_value = false;
  for (std::size_t open = raw_output.find('{'); open != std::string_view::npos;
       open = raw_output.find('{', open + 1)) {
    const auto close = balanced_end(raw_output, open);
    if (!close) continue;
    const auto span = raw_output.substr(open, *close - open + 1);
    const auto j = json::parse(span.begin(), span.end(), nullptr, false);
    if (j.is_discarded()) continue;
    switch (inspect(j, result.ranked_names)) {
      case Candidate::accepted:
        result.status = ParseStatus::ok;
        return result;
      case Candidate::no_key: saw_object = true; break;
      case Candidate::bad_value: saw_bad_value = true; break;
      case Candidate::not_object: break;
    }
  }
  result.status = (saw_object && !saw_bad_value) ? ParseStatus::key_missing : ParseStatus::parse_failed;
  return result;
}

std::vector<CountryId> normalize(const ParseOutcome& outcome, const LabelSpace& label_space) {
  if (label_space.empty()) throw Error("prediction-normalizer", "label space is empty");
  std::vector<CountryId> out;
  if (outcome.status != ParseStatus::ok) return out;
  for (const auto& name : outcome.ranked_names) {
    if (out.size() == kMaxPredictions) break;
    const auto* match = label_space.match_display_name(text::utf8_lower(text::trim_ascii(name)));
    if (match == nullptr) continue;
    if (std::find(out.begin(), out.end(), *match) != out.end()) continue;
    out.push_back(*match);
  }
  return out;
}

}  // namespace geoeval
