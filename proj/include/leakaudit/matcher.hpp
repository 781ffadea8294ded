#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "leakaudit/embedding_store.hpp"
#include "leakaudit/simd/kernels.hpp"

namespace leakaudit {

struct MatchResult {
  std::string probe_id;
  std::uint32_t rank = 0;  // 1-based
  std::string gallery_id;
  std::string gallery_label;
  double similarity = 0.0;

  friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

// One entry of a probe's ranked list, by gallery record index.
struct Neighbor {
  std::size_t gallery_index = 0;
  double similarity = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct MatchOptions {
  std::size_t k = 2;
  std::size_t workers = 1;
  // Working-set budget for one contiguous gallery block.
  std::size_t block_bytes = std::size_t{64} << 20;
  // Probes handled per parallel task.
  std::size_t probe_block = 32;
  // Kernel override; the best available ISA when unset.
  std::optional<simd::Isa> isa;
};

/// dot(a, b) clamped to [-1, 1]; both inputs are expected to be unit norm.
double cosine_similarity(std::span<const float> a, std::span<const float> b);

/// Exact top-k by cosine similarity for every probe, probe-major, k entries
/// per probe. Ties rank by ascending gallery index. Output does not depend on
/// workers, block size or ISA.
std::vector<Neighbor> top_k_neighbors(const EmbeddingSet& probes, const EmbeddingSet& gallery,
                                      const MatchOptions& options);

std::vector<MatchResult> top_k(const EmbeddingSet& probes, const EmbeddingSet& gallery,
                               const MatchOptions& options);

// Bins [-1 + i*w, -1 + (i+1)*w) with the last bin closed at 1. Scores outside
// [-1, 1] are clamped into the edge bins.
struct Histogram {
  double bin_width = 0.0;
  std::vector<std::uint64_t> counts;

  double lower(std::size_t bin) const noexcept { return -1.0 + static_cast<double>(bin) * bin_width; }
  double upper(std::size_t bin) const noexcept;
  std::uint64_t total() const noexcept;
};

Histogram histogram(std::span<const double> scores, double bin_width);

// Linear-interpolation quantiles (the "type 7" estimator). Empty input yields NaN.
std::vector<double> quantiles(std::span<const double> scores, std::span<const double> probabilities);

std::string format_histogram(const Histogram& hist, std::span<const double> probabilities,
                             std::span<const double> quantile_values);

// `probe_id<TAB>rank<TAB>gallery_id<TAB>gallery_label<TAB>similarity` with
// nine decimal digits.
std::string format_matches(std::span<const MatchResult> results);
std::vector<MatchResult> parse_matches(std::string_view text);
void write_matches(std::span<const MatchResult> results, const std::filesystem::path& path);
std::vector<MatchResult> load_matches(const std::filesystem::path& path);

}  // namespace leakaudit
