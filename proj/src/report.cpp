#include "geoeval/report.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "geoeval/error.hpp"
#include "geoeval/parallel.hpp"
#include "geoeval/text.hpp"

namespace geoeval {
namespace {

constexpr const char* kModule = "report-cli";
constexpr const char* kNa = "n/a";

std::string pct(const std::optional<double>& v) { return v ? text::format_percent(*v) : kNa; }

std::string pct_ratio(std::size_t num, std::size_t den) {
  return den == 0 ? kNa : text::format_percent(static_cast<double>(num) / static_cast<double>(den));
}

std::string key_cols(const EvalKey& k) {
  return k.model + "," + std::string(to_string(k.setting)) + "," + k.dataset;
}

std::string mean_cell(const std::optional<MeanStd>& m) { return m ? text::format_percent(m->mean) : kNa; }
std::string std_cell(const std::optional<MeanStd>& m) { return m ? text::format_percent(m->std) : kNa; }

std::string pm(const std::optional<MeanStd>& m) {
  if (!m) return kNa;
  return text::format_percent(m->mean) + " ± " + text::format_percent(m->std);
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(kModule, "cannot write '" + p.string() + "'");
  out << content;
}

std::set<std::string> models_of(const MetricReport& r) {
  std::set<std::string> m;
  for (const auto& [k, _] : r.accuracy) m.insert(k.model);
  for (const auto& [k, _] : r.hops) m.insert(k.model);
  return m;
}

nlohmann::ordered_json key_json(const EvalKey& k) {
  nlohmann::ordered_json j;
  j["model"] = k.model;
  j["setting"] = std::string(to_string(k.setting));
  j["dataset"] = k.dataset;
  return j;
}

}  // namespace

std::string accuracy_csv(const MetricReport& r) {
  std::ostringstream os;
  os << "model,setting,dataset,n_samples,n_empty,top1,top5,config_hash\n";
  for (const auto& [k, a] : r.accuracy) {
    os << key_cols(k) << ',' << a.n_samples << ',' << a.n_empty << ',' << pct(a.top1) << ',' << pct(a.top5) << ','
       << r.config_hash << '\n';
  }
  return os.str();
}

std::string per_country_csv(const MetricReport& r) {
  std::ostringstream os;
  os << "model,setting,dataset,country,n_samples,top1,top5,config_hash\n";
  for (const auto& [k, a] : r.accuracy) {
    for (const auto& [code, c] : a.per_country) {
      os << key_cols(k) << ',' << code << ',' << c.n_samples << ',' << pct_ratio(c.top1_hits, c.n_samples) << ','
         << pct_ratio(c.top5_hits, c.n_samples) << ',' << r.config_hash << '\n';
    }
  }
  return os.str();
}

std::string hop_csv(const MetricReport& r) {
  std::ostringstream os;
  os << "model,setting,dataset,n_errors,n_placed,n_unplaceable,h1,h2,h3_plus,h1_pct,h2_pct,h3_plus_pct,config_hash\n";
  for (const auto& [k, h] : r.hops) {
    const auto placed = h.n_placed();
    os << key_cols(k) << ',' << h.n_errors << ',' << placed << ',' << h.n_unplaceable << ',' << h.h1 << ',' << h.h2
       << ',' << h.h3_plus << ',' << pct_ratio(h.h1, placed) << ',' << pct_ratio(h.h2, placed) << ','
       << pct_ratio(h.h3_plus, placed) << ',' << r.config_hash << '\n';
  }
  return os.str();
}

std::string ger_csv(const MetricReport& r) {
  std::ostringstream os;
  os << "model,setting,dataset,encoder,k,tau,n_errors,n_empty_excluded,n_weak,n_strong,ger_weak,ger_strong,config_hash\n";
  for (const auto& [k, e] : r.ger) {
    for (const auto& g : e.per_encoder) {
      os << key_cols(k) << ',' << g.encoder << ',' << g.k << ',' << g.tau << ',' << g.n_errors << ','
         << g.n_empty_excluded << ',' << g.n_weak << ',' << g.n_strong << ',' << pct(g.ger_weak) << ','
         << pct(g.ger_strong) << ',' << r.config_hash << '\n';
    }
  }
  return os.str();
}

std::string ger_aggregate_csv(const MetricReport& r) {
  std::ostringstream os;
  os << "model,setting,dataset,n_encoders,ger_weak_mean,ger_weak_std,ger_strong_mean,ger_strong_std,config_hash\n";
  for (const auto& [k, e] : r.ger) {
    if (!e.aggregate) continue;
    const auto& a = *e.aggregate;
    os << key_cols(k) << ',' << a.n_encoders << ',' << mean_cell(a.ger_weak) << ',' << std_cell(a.ger_weak) << ','
       << mean_cell(a.ger_strong) << ',' << std_cell(a.ger_strong) << ',' << r.config_hash << '\n';
  }
  return os.str();
}

std::string urban_rural_csv(const MetricReport& r) {
  std::ostringstream os;
  os << "model,setting,dataset,stratum,labeller,n_samples,top1,top5,config_hash\n";
  for (const auto& [k, e] : r.urban_rural) {
    for (const auto& s : e.strata) {
      for (std::size_t l = 0; l < s.labellers.size(); ++l) {
        const auto& a = s.per_labeller[l];
        os << key_cols(k) << ',' << s.stratum << ',' << s.labellers[l] << ',' << a.n_samples << ',' << pct(a.top1)
           << ',' << pct(a.top5) << ',' << r.config_hash << '\n';
      }
    }
  }
  return os.str();
}

std::string urban_rural_summary_csv(const MetricReport& r) {
  std::ostringstream os;
  os << "model,setting,dataset,stratum,n_labellers,top1_mean,top1_std,top5_mean,top5_std,config_hash\n";
  for (const auto& [k, e] : r.urban_rural) {
    for (const auto& s : e.strata) {
      os << key_cols(k) << ',' << s.stratum << ',' << s.labellers.size() << ',' << mean_cell(s.top1) << ','
         << std_cell(s.top1) << ',' << mean_cell(s.top5) << ',' << std_cell(s.top5) << ',' << r.config_hash << '\n';
    }
  }
  return os.str();
}

std::string biome_csv(const MetricReport& r) {
  std::ostringstream os;
  os << "model,setting,dataset,biome,n_samples,top1,top5,config_hash\n";
  for (const auto& [k, t] : r.biome) {
    for (const auto& s : t.strata) {
      os << key_cols(k) << ',' << s.biome << ',' << s.accuracy.n_samples << ',' << pct(s.accuracy.top1) << ','
         << pct(s.accuracy.top5) << ',' << r.config_hash << '\n';
    }
  }
  return os.str();
}

std::string render_markdown(const MetricReport& r) {
  std::ostringstream os;
  os << "# Geolocalization evaluation report\n\n";
  os << "- Tool: geoeval " << r.tool_version << "\n";
  os << "- Config hash: `" << r.config_hash << "`\n";
  os << "- Neighbourhood size k = " << r.k << ", GER-Strong threshold tau = " << r.tau << "\n";
  os << "- Datasets:";
  for (std::size_t i = 0; i < r.datasets.size(); ++i) {
    os << (i ? "," : "") << ' ' << r.datasets[i] << " (" << r.dataset_sizes.at(r.datasets[i]) << " samples)";
  }
  os << "\n\nAll values are percentages.\n";

  const auto models = models_of(r);
  if (r.has_accuracy) {
    for (const auto setting : {Setting::unconstrained, Setting::constrained}) {
      bool any = false;
      for (const auto& [k, _] : r.accuracy) any = any || k.setting == setting;
      if (!any) continue;
      os << "\n## Accuracy (" << (setting == Setting::unconstrained ? "unconstrained" : "label-constrained") << ")\n\n";
      os << "| Model |";
      for (const auto& d : r.datasets) os << ' ' << d << " Top-1 | " << d << " Top-5 |";
      os << "\n|---|";
      for (std::size_t i = 0; i < r.datasets.size(); ++i) os << "---:|---:|";
      os << '\n';
      for (const auto& m : models) {
        bool has_row = false;
        for (const auto& d : r.datasets) has_row = has_row || r.accuracy.count({m, setting, d});
        if (!has_row) continue;
        os << "| " << m << " |";
        for (const auto& d : r.datasets) {
          const auto it = r.accuracy.find({m, setting, d});
          if (it == r.accuracy.end()) {
            os << ' ' << kNa << " | " << kNa << " |";
          } else {
            os << ' ' << pct(it->second.top1) << " | " << pct(it->second.top5) << " |";
          }
        }
        os << '\n';
      }
    }
  }

  if (!r.urban_rural.empty()) {
    os << "\n## Urban / rural (mean ± std across labellers)\n\n";
    os << "| Model | Setting | Dataset | Urban Top-1 | Urban Top-5 | Rural Top-1 | Rural Top-5 |\n";
    os << "|---|---|---|---:|---:|---:|---:|\n";
    for (const auto& [k, e] : r.urban_rural) {
      os << "| " << k.model << " | " << to_string(k.setting) << " | " << k.dataset << " |";
      for (const auto& s : e.strata) os << ' ' << pm(s.top1) << " | " << pm(s.top5) << " |";
      os << '\n';
    }
    os << "\nLabellers:";
    bool first = true;
    for (const auto& [d, ls] : r.labellers) {
      os << (first ? " " : "; ") << d << ":";
      for (const auto& l : ls) os << ' ' << l;
      first = false;
    }
    os << '\n';
  }

  if (!r.biome.empty()) {
    os << "\n## Biome (Top-1 on consensus labels)\n\n";
    std::set<std::string> shown;
    for (const auto& [k, t] : r.biome) {
      if (!shown.insert(k.dataset).second) continue;
      os << "- " << k.dataset << ": " << t.n_consensus << " of " << t.n_samples << " samples ("
         << pct_ratio(t.n_consensus, t.n_samples) << ") have unanimous biome labels\n";
    }
    const auto& first = r.biome.begin()->second;
    os << "\n| Model | Setting | Dataset |";
    for (const auto& s : first.strata) os << ' ' << s.biome << " |";
    os << "\n|---|---|---|";
    for (std::size_t i = 0; i < first.strata.size(); ++i) os << "---:|";
    os << '\n';
    for (const auto& [k, t] : r.biome) {
      os << "| " << k.model << " | " << to_string(k.setting) << " | " << k.dataset << " |";
      for (const auto& s : t.strata) os << ' ' << pct(s.accuracy.top1) << " |";
      os << '\n';
    }
    os << "\n| Model | Setting | Dataset |";
    for (const auto& s : first.strata) os << ' ' << s.biome << " Top-5 |";
    os << "\n|---|---|---|";
    for (std::size_t i = 0; i < first.strata.size(); ++i) os << "---:|";
    os << '\n';
    for (const auto& [k, t] : r.biome) {
      os << "| " << k.model << " | " << to_string(k.setting) << " | " << k.dataset << " |";
      for (const auto& s : t.strata) os << ' ' << pct(s.accuracy.top5) << " |";
      os << '\n';
    }
  }

  if (r.has_hop) {
    os << "\n## Hop distance (share of placed Top-1 errors)\n\n";
    os << "| Model | Setting | Dataset | H-1 | H-2 | H-3+ | Errors | Unplaceable |\n";
    os << "|---|---|---|---:|---:|---:|---:|---:|\n";
    for (const auto& [k, h] : r.hops) {
      const auto placed = h.n_placed();
      os << "| " << k.model << " | " << to_string(k.setting) << " | " << k.dataset << " | " << pct_ratio(h.h1, placed)
         << " | " << pct_ratio(h.h2, placed) << " | " << pct_ratio(h.h3_plus, placed) << " | " << h.n_errors << " | "
         << h.n_unplaceable << " |\n";
    }
  }

  if (!r.ger.empty()) {
    os << "\n## Geographic Error Reasonableness";
    const auto& first = r.ger.begin()->second;
    if (first.aggregate) {
      os << " (mean ± std across " << first.aggregate->n_encoders << " encoders)";
    }
    os << "\n\n| Model | Setting | Dataset | GER-Weak | GER-Strong | Errors |\n";
    os << "|---|---|---|---:|---:|---:|\n";
    for (const auto& [k, e] : r.ger) {
      std::string weak;
      std::string strong;
      if (e.aggregate) {
        weak = pm(e.aggregate->ger_weak);
        strong = pm(e.aggregate->ger_strong);
      } else {
        weak = pct(e.per_encoder.front().ger_weak);
        strong = pct(e.per_encoder.front().ger_strong);
      }
      os << "| " << k.model << " | " << to_string(k.setting) << " | " << k.dataset << " | " << weak << " | "
         << strong << " | " << e.per_encoder.front().n_errors << " |\n";
    }
  }

  if (!r.notes.empty()) {
    os << "\n## Notes\n\n";
    for (const auto& n : r.notes) os << "- " << n << '\n';
  }
  return os.str();
}

void write_report_files(const MetricReport& r, const fs::path& out, bool with_markdown) {
  fs::create_directories(out);
  auto jsonl = [&](const fs::path& p, auto&& rows) {
    std::ostringstream os;
    for (const auto& j : rows) os << j.dump() << '\n';
    write_file(p, os.str());
  };

  if (r.has_accuracy) {
    write_file(out / "accuracy.csv", accuracy_csv(r));
    write_file(out / "per_country.csv", per_country_csv(r));
    std::vector<nlohmann::ordered_json> rows;
    for (const auto& a : r.normalized_audit) {
      auto j = key_json(a.key);
      j["sample_id"] = a.sample_id;
      j["status"] = std::string(to_string(a.status));
      j["normalized"] = a.codes;
      rows.push_back(std::move(j));
    }
    jsonl(out / "normalized_predictions.jsonl", rows);
  }
  if (r.has_hop) {
    write_file(out / "hop.csv", hop_csv(r));
    std::vector<nlohmann::ordered_json> rows;
    for (const auto& a : r.hop_audit) {
      auto j = key_json(a.key);
      j["sample_id"] = a.record.sample_id;
      j["truth"] = a.record.truth;
      j["pred"] = a.record.predicted;
      j["hops"] = a.record.hops < 0 ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(a.record.hops);
      rows.push_back(std::move(j));
    }
    jsonl(out / "hop_audit.jsonl", rows);
  }
  if (r.has_ger) {
    write_file(out / "ger.csv", ger_csv(r));
    write_file(out / "ger_aggregate.csv", ger_aggregate_csv(r));
    std::vector<nlohmann::ordered_json> rows;
    for (const auto& a : r.ger_audit) {
      auto j = key_json(a.key);
      j["encoder"] = a.encoder;
      j["sample_id"] = a.record.sample_id;
      j["pred"] = a.record.predicted;
      j["c"] = a.record.count;
      j["justified_weak"] = a.record.justified_weak;
      j["justified_strong"] = a.record.justified_strong;
      rows.push_back(std::move(j));
    }
    jsonl(out / "ger_audit.jsonl", rows);
  }
  if (r.has_stratification) {
    write_file(out / "urban_rural.csv", urban_rural_csv(r));
    write_file(out / "urban_rural_summary.csv", urban_rural_summary_csv(r));
    write_file(out / "biome.csv", biome_csv(r));
    write_assignments((out / "assignments.jsonl").string(), r.assignments);
    std::vector<nlohmann::ordered_json> rows;
    for (const auto& [d, c] : r.consensus) {
      nlohmann::ordered_json j;
      j["dataset"] = d;
      j["sample_id"] = c.sample_id;
      j["biome"] = c.biome;
      rows.push_back(std::move(j));
    }
    jsonl(out / "consensus.jsonl", rows);
  }
  if (with_markdown) write_file(out / "report.md", render_markdown(r));
}

void write_run_meta(const MetricReport& r, const fs::path& out, const std::string& command) {
  fs::create_directories(out);
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  nlohmann::ordered_json j;
  j["tool"] = "geoeval";
  j["version"] = r.tool_version;
  j["command"] = command;
  j["config_hash"] = r.config_hash;
  j["threads"] = worker_count();
  j["finished_utc"] = stamp;
  write_file(out / "run_meta.json", j.dump(2) + "\n");
}

}  // namespace geoeval
