#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "geoeval/accuracy.hpp"
#include "geoeval/data_model.hpp"

namespace geoeval {

inline constexpr double kEarthRadiusKm = 6371.0088;

// Great-circle distance on a sphere of radius kEarthRadiusKm. Throws on
// latitudes outside [-90, 90] or longitudes outside [-180, 180].
double haversine_km(LatLon a, LatLon b);

enum class EdgeKind { border, special, island_bridge, component_bridge };

std::string_view to_string(EdgeKind k);

struct GraphEdge {
  std::string a;  // a < b
  std::string b;
  EdgeKind kind = EdgeKind::border;
};

using CodePair = std::pair<std::string, std::string>;

// Reads `code_a,code_b` lines; a `code_a,code_b` header line is skipped.
std::vector<CodePair> load_edge_list(const std::string& path);

// Undirected country adjacency with provenance-tagged edges. Immutable once
// built; BFS rows are memoized per source behind a shared cache.
class CountryGraph {
 public:
  CountryGraph(std::vector<std::string> nodes, std::vector<GraphEdge> edges);

  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }
  bool contains(std::string_view code) const;
  std::size_t degree(std::string_view code) const;
  std::size_t component_count() const;

  // Shortest path length in edges. Throws if either node is absent.
  std::size_t hop_distance(std::string_view from, std::string_view to) const;

  std::string to_json() const;

 private:
  struct HopCache;

  std::size_t index(std::string_view code) const;
  const std::vector<std::size_t>& bfs_row(std::size_t source) const;

  std::vector<std::string> nodes_;
  std::vector<GraphEdge> edges_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::shared_ptr<HopCache> cache_;
};

// Nodes are every registry entry. Steps: border edges, special edges, one
// nearest-centroid bridge per isolated island (islands visited in code
// order), then closest-pair bridges until a single component remains.
// Distance ties break on the lexicographically smaller code pair.
CountryGraph build_graph(std::span<const CodePair> border_edges, std::span<const CodePair> special_edges,
                         const CountryRegistry& registry);

struct HopHistogram {
  std::size_t h1 = 0;
  std::size_t h2 = 0;
  std::size_t h3_plus = 0;
  std::size_t n_errors = 0;
  std::size_t n_unplaceable = 0;

  std::size_t n_placed() const { return h1 + h2 + h3_plus; }
};

struct HopRecord {
  std::string sample_id;
  std::string truth;
  std::string predicted;  // empty when the list was empty
  long hops = -1;         // -1 when unplaceable
};

// Buckets incorrect Top-1 predictions by hop distance to the truth.
HopHistogram hop_histogram(const CountryGraph& graph, std::span<const SampleRecord> samples,
                           const PredictionMap& predictions, std::vector<HopRecord>* audit = nullptr);

}  // namespace geoeval
