#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace leakaudit {

/// Identified, labeled, fixed-dimension embeddings for one dataset.
///
/// Rows are stored row-major as 32-bit floats. A set is treated as immutable
/// once loaded: the transforms below return new sets.
struct EmbeddingSet {
  std::string dataset_id;
  std::size_t dim = 0;
  std::vector<std::string> image_ids;
  std::vector<std::string> identity_labels;
  std::vector<float> vectors;

  std::size_t count() const noexcept { return image_ids.size(); }

  std::span<const float> row(std::size_t i) const noexcept {
    return {vectors.data() + i * dim, dim};
  }

  // Checks every type invariant except unit norm. Throws Error(data).
  void validate() const;

  // True when every row has norm within `tolerance` of 1.
  bool is_normalized(double tolerance = 1e-6) const;
};

// image_id -> record index.
using IdIndex = std::unordered_map<std::string, std::size_t>;
IdIndex index_by_id(const EmbeddingSet& set);

// Blob layout: "EMB1", u32 version (=1), u32 dim, u64 count, then count*dim
// little-endian float32 values, row-major, no padding.
inline constexpr std::uint32_t kBlobVersion = 1;
inline constexpr std::size_t kBlobHeaderBytes = 4 + 4 + 4 + 8;

/// Loads and validates a blob plus its text sidecar. Vectors are returned
/// exactly as stored; normalization is a separate step.
EmbeddingSet load_embeddings(const std::filesystem::path& blob_path,
                             const std::filesystem::path& sidecar_path);

void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& blob_path,
                      const std::filesystem::path& sidecar_path);

// `stem.emb` + `stem.tsv`, the pairing used by the command-line tool.
std::filesystem::path blob_path_for(const std::filesystem::path& stem);
std::filesystem::path sidecar_path_for(const std::filesystem::path& stem);

/// Scales every row to unit Euclidean norm.
///
/// Each row is first divided by its largest absolute component (in double),
/// then by the norm of the result, so exact positive multiples of a row
/// normalize to bit-identical output. A zero row is an error naming its
/// image_id.
EmbeddingSet l2_normalize(const EmbeddingSet& set);

/// Per record, normalize(original + flipped). Ids must match in order.
EmbeddingSet fuse_flip(const EmbeddingSet& original, const EmbeddingSet& flipped);

}  // namespace leakaudit
