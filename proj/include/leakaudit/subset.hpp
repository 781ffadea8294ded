#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "leakaudit/manifest.hpp"

namespace leakaudit {

/// SplitMix64 (Steele, Lea & Flood 2014): state += 0x9E3779B97F4A7C15, then
/// the xor-shift-multiply finalizer. Chosen for a portable, fully specified
/// stream; identical seeds give identical subsets on every platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound) by rejection: draws below 2^64 mod bound are
  // discarded. bound must be positive.
  std::uint64_t bounded(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (true) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

 private:
  std::uint64_t state_;
};

enum class SubsetVariant { id_disjoint, id_overlap_r, id_overlap_c };

std::string_view variant_name(SubsetVariant v) noexcept;  // "ID-Disjoint", ...
std::optional<SubsetVariant> parse_variant(std::string_view name) noexcept;

struct SubsetSpec {
  SubsetVariant variant = SubsetVariant::id_disjoint;
  std::uint64_t seed = 0;
  std::set<std::string> overlapped_folders;
  std::vector<std::vector<std::string>> accepted_merges;
};

struct MergeApplied {
  std::string label;  // lexicographic minimum of the group
  std::vector<std::string> members;
};

struct SubsetProvenance {
  SubsetVariant variant = SubsetVariant::id_disjoint;
  std::uint64_t seed = 0;
  std::string source_dataset;
  std::size_t source_folders = 0;
  std::vector<std::string> dropped_folders;  // sorted
  std::vector<MergeApplied> merges;
};

struct SubsetResult {
  DatasetManifest manifest;
  SubsetProvenance provenance;
};

/// Manifest minus every overlapped folder.
SubsetResult build_disjoint(const DatasetManifest& manifest, const SubsetSpec& spec);

/// Keeps every overlapped folder and drops |overlapped| non-overlapped
/// folders: partial Fisher-Yates over the sorted non-overlapped labels, the
/// first |overlapped| positions after shuffling are dropped.
SubsetResult build_overlap_r(const DatasetManifest& manifest, const SubsetSpec& spec);

/// Overlap-R output with each accepted merge group collapsed into its
/// smallest label; images concatenated in member-label order.
SubsetResult build_overlap_c(const DatasetManifest& manifest, const SubsetSpec& spec);

// Dispatches on spec.variant.
SubsetResult build_subset(const DatasetManifest& manifest, const SubsetSpec& spec);

// The folders build_overlap_r drops, in draw order.
std::vector<std::string> draw_dropped_folders(const std::vector<std::string>& sorted_candidates, std::size_t n_drop,
                                              std::uint64_t seed);

std::string provenance_json(const SubsetProvenance& provenance);

}  // namespace leakaudit
