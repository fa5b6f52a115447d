#include "geoeval/embedding_index.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "geoeval/error.hpp"
#include "geoeval/text.hpp"

namespace geoeval {
namespace {

constexpr const char* kModule = "embedding-index";

// Tile shape: kQueryTile query rows against kLanes candidate rows.
constexpr std::size_t kLanes = 32;
constexpr std::size_t kQueryTile = 4;
// Queries per scheduled task.
constexpr std::size_t kQueriesPerTask = 128;

// out[q * kLanes + j] = sum_d query[q][d] * block[d * kLanes + j], summed in
// increasing d with a separate multiply and add per term.
__attribute__((target_clones("avx512f", "avx2", "default")))
void score_tile(const float* __restrict q0, const float* __restrict q1, const float* __restrict q2,
                const float* __restrict q3, const float* __restrict block, std::size_t dim,
                float* __restrict out) {
  float a0[kLanes] = {};
  float a1[kLanes] = {};
  float a2[kLanes] = {};
  float a3[kLanes] = {};
  for (std::size_t d = 0; d < dim; ++d) {
    const float* t = block + d * kLanes;
    const float x0 = q0[d];
    const float x1 = q1[d];
    const float x2 = q2[d];
    const float x3 = q3[d];
    for (std::size_t j = 0; j < kLanes; ++j) {
      a0[j] += x0 * t[j];
      a1[j] += x1 * t[j];
      a2[j] += x2 * t[j];
      a3[j] += x3 * t[j];
    }
  }
  for (std::size_t j = 0; j < kLanes; ++j) {
    out[j] = a0[j];
    out[kLanes + j] = a1[j];
    out[2 * kLanes + j] = a2[j];
    out[3 * kLanes + j] = a3[j];
  }
}

struct Candidate {
  float sim;
  std::size_t rank;  // position of the id in sorted-id order
  std::size_t row;
};

bool better(const Candidate& a, const Candidate& b) {
  return a.sim > b.sim || (a.sim == b.sim && a.rank < b.rank);
}

// Bounded sorted list of the best k candidates.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) { items_.reserve(k + 1); }

  void offer(const Candidate& c) {
    if (items_.size() == k_ && !better(c, items_.back())) return;
    auto pos = std::upper_bound(items_.begin(), items_.end(), c,
                                [](const Candidate& x, const Candidate& y) { return better(x, y); });
    items_.insert(pos, c);
    if (items_.size() > k_) items_.pop_back();
  }

  const std::vector<Candidate>& items() const { return items_; }

 private:
  std::size_t k_;
  std::vector<Candidate> items_;
};

}  // namespace

EmbeddingMatrix l2_normalize(const EmbeddingMatrix& matrix) {
  std::vector<float> data(matrix.data());
  const std::size_t dim = matrix.dim();
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    float* r = data.data() + i * dim;
    double sq = 0.0;
    for (std::size_t d = 0; d < dim; ++d) sq += static_cast<double>(r[d]) * r[d];
    const double norm = std::sqrt(sq);
    if (!(norm > 1e-12)) {
      throw Error(kModule, "zero-norm embedding for sample '" + matrix.ids()[i] + "'");
    }
    for (std::size_t d = 0; d < dim; ++d) r[d] = static_cast<float>(r[d] / norm);
  }
  return EmbeddingMatrix(matrix.ids(), dim, std::move(data));
}

std::vector<NeighborList> knn(const EmbeddingMatrix& m, std::size_t k, std::size_t workers) {
  const std::size_t n = m.rows();
  const std::size_t dim = m.dim();
  if (k < 1) throw Error(kModule, "k must be at least 1");
  if (n <= k) {
    throw Error(kModule, "need more rows than k (rows=" + std::to_string(n) + ", k=" + std::to_string(k) + ")");
  }
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (float v : m.row(i)) sq += static_cast<double>(v) * v;
    if (std::abs(std::sqrt(sq) - 1.0) > 1e-4) {
      throw Error(kModule, "row for sample '" + m.ids()[i] + "' is not unit-normalized");
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return m.ids()[a] < m.ids()[b]; });
  std::vector<std::size_t> rank(n);
  for (std::size_t r = 0; r < n; ++r) rank[order[r]] = r;

  // Candidate-major blocks: block b holds rows [b*kLanes, (b+1)*kLanes)
  // transposed to dim x kLanes, zero-padded past the last row.
  const std::size_t n_blocks = (n + kLanes - 1) / kLanes;
  std::vector<float> blocked(n_blocks * dim * kLanes, 0.0f);
  for (std::size_t i = 0; i < n; ++i) {
    float* base = blocked.data() + (i / kLanes) * dim * kLanes + (i % kLanes);
    const auto r = m.row(i);
    for (std::size_t d = 0; d < dim; ++d) base[d * kLanes] = r[d];
  }
  const std::vector<float> zero_row(dim, 0.0f);

  std::vector<NeighborList> out(n);
  const std::size_t n_tasks = (n + kQueriesPerTask - 1) / kQueriesPerTask;
  parallel_for(n_tasks, workers, [&](std::size_t task, std::size_t) {
    const std::size_t q_begin = task * kQueriesPerTask;
    const std::size_t q_end = std::min(n, q_begin + kQueriesPerTask);
    std::vector<TopK> best(q_end - q_begin, TopK(k));
    float scores[kQueryTile * kLanes];
    for (std::size_t b = 0; b < n_blocks; ++b) {
      const float* block = blocked.data() + b * dim * kLanes;
      const std::size_t c_begin = b * kLanes;
      const std::size_t lanes = std::min(kLanes, n - c_begin);
      for (std::size_t q = q_begin; q < q_end; q += kQueryTile) {
        const float* rows[kQueryTile];
        for (std::size_t t = 0; t < kQueryTile; ++t) {
          rows[t] = (q + t < q_end) ? m.row(q + t).data() : zero_row.data();
        }
        score_tile(rows[0], rows[1], rows[2], rows[3], block, dim, scores);
        for (std::size_t t = 0; t < kQueryTile && q + t < q_end; ++t) {
          auto& top = best[q + t - q_begin];
          for (std::size_t j = 0; j < lanes; ++j) {
            const std::size_t c = c_begin + j;
            if (c == q + t) continue;
            top.offer({scores[t * kLanes + j], rank[c], c});
          }
        }
      }
    }
    for (std::size_t q = q_begin; q < q_end; ++q) {
      auto& list = out[q];
      list.query_id = m.ids()[q];
      for (const auto& c : best[q - q_begin].items()) list.neighbors.push_back({m.ids()[c.row], c.sim});
    }
  });
  return out;
}

void write_neighbor_cache(const std::string& path, const std::vector<NeighborList>& lists) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(kModule, "cannot write '" + path + "'");
  for (const auto& l : lists) {
    nlohmann::ordered_json j;
    j["query"] = l.query_id;
    auto& arr = j["neighbors"] = nlohmann::ordered_json::array();
    for (const auto& nb : l.neighbors) arr.push_back({nb.id, nb.similarity});
    out << j.dump() << '\n';
  }
}

std::vector<NeighborList> load_neighbor_cache(const std::string& path) {
  std::vector<NeighborList> lists;
  const auto lines = text::read_lines(path, kModule);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (text::trim_ascii(lines[n]).empty()) continue;
    const auto j = nlohmann::json::parse(lines[n], nullptr, false);
    try {
      if (j.is_discarded()) throw Error(kModule, "malformed JSON");
      NeighborList l;
      l.query_id = j.at("query").get<std::string>();
      for (const auto& pair : j.at("neighbors")) {
        l.neighbors.push_back({pair.at(0).get<std::string>(), pair.at(1).get<float>()});
      }
      lists.push_back(std::move(l));
    } catch (const std::exception& ex) {
      throw Error(kModule, "invalid neighbor cache line " + path + ":" + std::to_string(n + 1) + ": " + ex.what());
    }
  }
  return lists;
}

}  // namespace geoeval
