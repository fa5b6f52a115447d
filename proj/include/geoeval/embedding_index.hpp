#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "geoeval/data_model.hpp"
#include "geoeval/parallel.hpp"

namespace geoeval {

struct Neighbor {
  std::string id;
  float similarity = 0.0f;
};

struct NeighborList {
  std::string query_id;
  std::vector<Neighbor> neighbors;  // best first, query itself excluded
};

// Rows scaled to unit Euclidean norm. The norm is reduced in double; rows
// with norm <= 1e-12 are rejected.
EmbeddingMatrix l2_normalize(const EmbeddingMatrix& matrix);

// Exact top-k by dot product over unit rows, self excluded. Candidates with
// equal similarity are ordered by ascending sample id. Each dot product is a
// float32 sum taken in dimension order, so the result does not depend on the
// worker count or on blocking. Memory beyond the input is one blocked copy
// of the matrix plus O(N * k).
std::vector<NeighborList> knn(const EmbeddingMatrix& normalized, std::size_t k,
                              std::size_t workers = worker_count());

// {"query": id, "neighbors": [[id, sim], ...]} per line.
void write_neighbor_cache(const std::string& path, const std::vector<NeighborList>& lists);
std::vector<NeighborList> load_neighbor_cache(const std::string& path);

}  // namespace geoeval
