#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "geoeval/data_model.hpp"

namespace geoeval {

enum class ParseStatus { ok, parse_failed, key_missing };

std::string_view to_string(ParseStatus s);

struct ParseOutcome {
  ParseStatus status = ParseStatus::parse_failed;
  std::vector<std::string> ranked_names;  // empty unless status == ok
};

inline constexpr std::size_t kMaxPredictions = 5;

// Extracts `{"predictions": [..strings..]}` from model output.
//
// Lenient mode scans every '{' in order, takes the balanced span that starts
// there (string- and escape-aware) and accepts the first span that parses as
// a JSON object whose "predictions" member is an array of strings. Nested
// objects are candidates as well. Strict mode requires the whole trimmed
// text to be that object.
//
// Failure reporting: key_missing when at least one JSON object was found and
// none carried the key; parse_failed otherwise (no object at all, or the key
// held something other than an array of strings).
ParseOutcome parse_raw(std::string_view raw_output, bool strict = false);

// Case-insensitive exact match against the display names of `label_space`.
// Unmatched names and repeats are dropped, rank order is kept, and the
// result is truncated to the first five valid names.
std::vector<CountryId> normalize(const ParseOutcome& outcome, const LabelSpace& label_space);

}  // namespace geoeval
