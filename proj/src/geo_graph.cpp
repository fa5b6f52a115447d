#include "geoeval/geo_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>
#include <set>
#include <shared_mutex>

#include <json.hpp>

#include "geoeval/error.hpp"
#include "geoeval/text.hpp"

namespace geoeval {
namespace {

constexpr const char* kModule = "geo-graph";
constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

// Union-find over node indices.
struct Components {
  std::vector<std::size_t> parent;
  explicit Components(std::size_t n) : parent(n) {
    for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

}  // namespace

double haversine_km(LatLon a, LatLon b) {
  for (const auto& p : {a, b}) {
    if (!(p.lat >= -90.0 && p.lat <= 90.0) || !(p.lon >= -180.0 && p.lon <= 180.0)) {
      throw Error(kModule, "coordinate out of range");
    }
  }
  const double phi1 = radians(a.lat);
  const double phi2 = radians(b.lat);
  const double dphi = phi2 - phi1;
  const double dlambda = radians(b.lon - a.lon);
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

std::string_view to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::border: return "border";
    case EdgeKind::special: return "special";
    case EdgeKind::island_bridge: return "island_bridge";
    case EdgeKind::component_bridge: return "component_bridge";
  }
  return "border";
}

std::vector<CodePair> load_edge_list(const std::string& path) {
  std::vector<CodePair> out;
  const auto lines = text::read_lines(path, kModule);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto line = text::trim_ascii(lines[n]);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = text::split_csv_line(line);
    if (fields.size() != 2) {
      throw Error(kModule, "expected code_a,code_b at " + path + ":" + std::to_string(n + 1));
    }
    std::string a(text::trim_ascii(fields[0]));
    std::string b(text::trim_ascii(fields[1]));
    if (n == 0 && a == "code_a" && b == "code_b") continue;
    out.emplace_back(std::move(a), std::move(b));
  }
  return out;
}

struct CountryGraph::HopCache {
  std::shared_mutex mutex;
  std::unordered_map<std::size_t, std::vector<std::size_t>> rows;
};

CountryGraph::CountryGraph(std::vector<std::string> nodes, std::vector<GraphEdge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), cache_(std::make_shared<HopCache>()) {
  std::sort(nodes_.begin(), nodes_.end());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!index_.emplace(nodes_[i], i).second) throw Error(kModule, "duplicate node " + nodes_[i]);
  }
  adjacency_.resize(nodes_.size());
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (auto& e : edges_) {
    if (e.b < e.a) std::swap(e.a, e.b);
    if (e.a == e.b) throw Error(kModule, "self-loop on " + e.a);
    const auto ia = index(e.a);
    const auto ib = index(e.b);
    if (!seen.emplace(ia, ib).second) throw Error(kModule, "duplicate edge " + e.a + "-" + e.b);
    adjacency_[ia].push_back(ib);
    adjacency_[ib].push_back(ia);
  }
  for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());
}

std::size_t CountryGraph::index(std::string_view code) const {
  const auto it = index_.find(std::string(code));
  if (it == index_.end()) throw Error(kModule, "country '" + std::string(code) + "' is not in the graph");
  return it->second;
}

bool CountryGraph::contains(std::string_view code) const { return index_.count(std::string(code)) != 0; }

std::size_t CountryGraph::degree(std::string_view code) const { return adjacency_[index(code)].size(); }

std::size_t CountryGraph::component_count() const {
  Components uf(nodes_.size());
  std::size_t count = nodes_.size();
  for (std::size_t a = 0; a < adjacency_.size(); ++a) {
    for (auto b : adjacency_[a]) {
      if (uf.unite(a, b)) --count;
    }
  }
  return count;
}

const std::vector<std::size_t>& CountryGraph::bfs_row(std::size_t source) const {
  {
    std::shared_lock lock(cache_->mutex);
    const auto it = cache_->rows.find(source);
    if (it != cache_->rows.end()) return it->second;
  }
  std::vector<std::size_t> dist(nodes_.size(), kUnreached);
  std::queue<std::size_t> frontier;
  dist[source] = 0;
  frontier.push(source);
  while (!frontier.empty()) {
    const auto u = frontier.front();
    frontier.pop();
    for (auto v : adjacency_[u]) {
      if (dist[v] == kUnreached) {
        dist[v] = dist[u] + 1;
        frontier.push(v);
      }
    }
  }
  std::unique_lock lock(cache_->mutex);
  // Rows are identical whichever thread computes them; keep the first so
  // references handed out earlier stay valid.
  return cache_->rows.try_emplace(source, std::move(dist)).first->second;
}

std::size_t CountryGraph::hop_distance(std::string_view from, std::string_view to) const {
  const auto a = index(from);
  const auto b = index(to);
  const auto d = bfs_row(a)[b];
  if (d == kUnreached) throw Error(kModule, "no path between " + std::string(from) + " and " + std::string(to));
  return d;
}

std::string CountryGraph::to_json() const {
  nlohmann::ordered_json j;
  j["nodes"] = nodes_;
  auto& edges = j["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : edges_) {
    edges.push_back({{"a", e.a}, {"b", e.b}, {"provenance", std::string(to_string(e.kind))}});
  }
  return j.dump(2) + "\n";
}

CountryGraph build_graph(std::span<const CodePair> border_edges, std::span<const CodePair> special_edges,
                         const CountryRegistry& registry) {
  if (registry.size() == 0) throw Error(kModule, "registry has no countries");
  const auto& entries = registry.entries();
  std::vector<std::string> codes;
  codes.reserve(entries.size());
  for (const auto& e : entries) codes.push_back(e.id.code);
  std::sort(codes.begin(), codes.end());
  std::unordered_map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < codes.size(); ++i) idx.emplace(codes[i], i);
  const std::size_t n = codes.size();

  std::vector<GraphEdge> edges;
  std::set<std::pair<std::size_t, std::size_t>> present;
  std::vector<std::size_t> degree(n, 0);
  Components uf(n);
  auto add_edge = [&](std::size_t a, std::size_t b, EdgeKind kind) {
    if (a == b) return;
    if (b < a) std::swap(a, b);
    if (!present.emplace(a, b).second) return;
    edges.push_back({codes[a], codes[b], kind});
    ++degree[a];
    ++degree[b];
    uf.unite(a, b);
  };
  auto resolve = [&](const std::string& code) {
    const auto* e = registry.find(code);
    if (e == nullptr) throw Error(kModule, "unresolvable country code '" + code + "' in edge list");
    return idx.at(e->id.code);
  };

  for (const auto& [a, b] : border_edges) add_edge(resolve(a), resolve(b), EdgeKind::border);
  for (const auto& [a, b] : special_edges) add_edge(resolve(a), resolve(b), EdgeKind::special);

  std::vector<LatLon> centroid(n);
  std::vector<bool> island(n, false);
  for (const auto& e : entries) {
    const auto i = idx.at(e.id.code);
    centroid[i] = e.centroid;
    island[i] = e.is_island;
  }
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      dist[a * n + b] = dist[b * n + a] = haversine_km(centroid[a], centroid[b]);
    }
  }

  // Codes are sorted, so scanning b upward yields the lexicographic tie-break.
  for (std::size_t a = 0; a < n; ++a) {
    if (!island[a] || degree[a] != 0) continue;
    std::size_t best = n;
    for (std::size_t b = 0; b < n; ++b) {
      if (b == a) continue;
      if (best == n || dist[a * n + b] < dist[a * n + best]) best = b;
    }
    if (best != n) add_edge(a, best, EdgeKind::island_bridge);
  }

  while (true) {
    std::size_t best_a = n;
    std::size_t best_b = n;
    for (std::size_t a = 0; a < n; ++a) {
      const auto ra = uf.find(a);
      for (std::size_t b = a + 1; b < n; ++b) {
        if (uf.find(b) == ra) continue;
        if (best_a == n || dist[a * n + b] < dist[best_a * n + best_b]) {
          best_a = a;
          best_b = b;
        }
      }
    }
    if (best_a == n) break;
    add_edge(best_a, best_b, EdgeKind::component_bridge);
  }

  CountryGraph graph(std::move(codes), std::move(edges));
  if (graph.component_count() != 1) throw Error(kModule, "graph is not connected after bridging");
  return graph;
}

HopHistogram hop_histogram(const CountryGraph& graph, std::span<const SampleRecord> samples,
                           const PredictionMap& predictions, std::vector<HopRecord>* audit) {
  HopHistogram h;
  for (const auto& s : samples) {
    const auto& p = prediction_for(predictions, s.sample_id, kModule);
    if (!p.empty() && p.front() == s.country) continue;
    ++h.n_errors;
    HopRecord rec{s.sample_id, s.country.code, p.empty() ? std::string{} : p.front().code, -1};
    if (p.empty() || !graph.contains(p.front().code) || !graph.contains(s.country.code)) {
      ++h.n_unplaceable;
    } else {
      const auto hops = graph.hop_distance(p.front().code, s.country.code);
      rec.hops = static_cast<long>(hops);
      if (hops == 1) {
        ++h.h1;
      } else if (hops == 2) {
        ++h.h2;
      } else {
        ++h.h3_plus;
      }
    }
    if (audit != nullptr) audit->push_back(std::move(rec));
  }
  return h;
}

}  // namespace geoeval
