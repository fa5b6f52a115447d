#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <unistd.h>

#include "geoeval/data_model.hpp"

namespace geoeval::testing {

namespace fs = std::filesystem;

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("geoeval_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline CountryId country(const std::string& code, const std::string& name) { return {code, name}; }

inline SampleRecord sample(const std::string& id, const CountryId& c, const std::string& ds = "fixture") {
  return {id, c, ds};
}

// Zero-padded ids so lexicographic and numeric order agree.
inline std::string padded_id(std::size_t i, const std::string& prefix = "s") {
  std::string n = std::to_string(i);
  return prefix + std::string(n.size() < 6 ? 6 - n.size() : 0, '0') + n;
}

inline EmbeddingMatrix random_matrix(std::mt19937_64& gen, std::size_t rows, std::size_t dim) {
  std::normal_distribution<float> nd(0.0f, 1.0f);
  std::vector<float> data(rows * dim);
  for (auto& v : data) v = nd(gen);
  std::vector<std::string> ids(rows);
  // Shuffled ids so row order and id order differ.
  std::vector<std::size_t> perm(rows);
  for (std::size_t i = 0; i < rows; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), gen);
  for (std::size_t i = 0; i < rows; ++i) ids[i] = padded_id(perm[i]);
  return EmbeddingMatrix(std::move(ids), dim, std::move(data));
}

}  // namespace geoeval::testing
