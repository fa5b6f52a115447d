#pragma once

#include <string>

#include "geoeval/config.hpp"
#include "geoeval/pipeline.hpp"

namespace geoeval {

// Percentages use two decimals, half-up; undefined cells print "n/a".
std::string accuracy_csv(const MetricReport& r);
std::string per_country_csv(const MetricReport& r);
std::string hop_csv(const MetricReport& r);
std::string ger_csv(const MetricReport& r);
std::string ger_aggregate_csv(const MetricReport& r);
std::string urban_rural_csv(const MetricReport& r);
std::string urban_rural_summary_csv(const MetricReport& r);
std::string biome_csv(const MetricReport& r);

std::string render_markdown(const MetricReport& r);

// Writes the CSV tables and audit JSONL for every computed section, plus
// report.md when `with_markdown` is set. All output is deterministic for a
// fixed config; timestamps go to run_meta.json only.
void write_report_files(const MetricReport& r, const fs::path& out_dir, bool with_markdown);

void write_run_meta(const MetricReport& r, const fs::path& out_dir, const std::string& command);

}  // namespace geoeval
