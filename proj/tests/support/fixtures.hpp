#pragma once

// Shared helpers for the unit and acceptance tests: scratch directories,
// seeded random embedding sets and brute-force oracles written without the
// library's fast paths.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "leakaudit/embedding_store.hpp"
#include "leakaudit/matcher.hpp"

namespace leakaudit::testing {

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "leakaudit-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Gaussian rows; labels cycle through `identities` folders (one per row when 0).
inline EmbeddingSet random_set(const std::string& dataset, std::size_t count, std::size_t dim, std::uint64_t seed,
                               std::size_t identities = 0, const std::string& prefix = "img") {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  EmbeddingSet s;
  s.dataset_id = dataset;
  s.dim = dim;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t id = identities == 0 ? i : i % identities;
    s.image_ids.push_back(fmt::format("{}_{:06d}", prefix, i));
    s.identity_labels.push_back(fmt::format("{}_id{:05d}", prefix, id));
  }
  s.vectors.resize(count * dim);
  for (auto& v : s.vectors) v = normal(rng);
  return s;
}

inline EmbeddingSet random_unit_set(const std::string& dataset, std::size_t count, std::size_t dim,
                                    std::uint64_t seed, std::size_t identities = 0,
                                    const std::string& prefix = "img") {
  return l2_normalize(random_set(dataset, count, dim, seed, identities, prefix));
}

// Plain left-to-right double sum.
inline double sequential_dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

// The documented canonical order, written out longhand: eight interleaved
// partial sums, folded pairwise, then the tail.
inline double canonical_dot(std::span<const float> a, std::span<const float> b) {
  const std::size_t n = a.size();
  const std::size_t body = n - n % 8;
  std::array<double, 8> lane{};
  for (std::size_t i = 0; i < body; ++i) lane[i % 8] += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  double s = ((lane[0] + lane[4]) + (lane[1] + lane[5])) + ((lane[2] + lane[6]) + (lane[3] + lane[7]));
  for (std::size_t i = body; i < n; ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

// Every pair scored, fully sorted by (similarity desc, gallery index asc).
inline std::vector<MatchResult> naive_top_k(const EmbeddingSet& probes, const EmbeddingSet& gallery, std::size_t k) {
  std::vector<MatchResult> out;
  std::vector<std::pair<double, std::size_t>> scored(gallery.count());
  for (std::size_t p = 0; p < probes.count(); ++p) {
    for (std::size_t g = 0; g < gallery.count(); ++g) {
      scored[g] = {std::clamp(canonical_dot(probes.row(p), gallery.row(g)), -1.0, 1.0), g};
    }
    std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
      return x.first != y.first ? x.first > y.first : x.second < y.second;
    });
    for (std::size_t r = 0; r < k; ++r) {
      const std::size_t g = scored[r].second;
      out.push_back(MatchResult{probes.image_ids[p], static_cast<std::uint32_t>(r + 1), gallery.image_ids[g],
                                gallery.identity_labels[g], scored[r].first});
    }
  }
  return out;
}

inline double norm_long(std::span<const float> row) {
  long double s = 0.0L;
  for (const float v : row) s += static_cast<long double>(v) * static_cast<long double>(v);
  return static_cast<double>(std::sqrt(s));
}

}  // namespace leakaudit::testing
