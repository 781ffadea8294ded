#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "leakaudit/embedding_store.hpp"

namespace leakaudit {

// Identity folder label -> ordered image ids. Folders iterate in label order.
struct DatasetManifest {
  std::string dataset_id;
  std::map<std::string, std::vector<std::string>> identities;

  std::size_t folder_count() const noexcept { return identities.size(); }
  std::size_t image_count() const noexcept;

  // Each image under exactly one folder, no empty folder, no empty label.
  void validate() const;
};

struct CoverageSummary {
  std::vector<std::string> missing_embeddings;  // in manifest, no vector
  std::vector<std::string> missing_from_manifest;  // vector, not in manifest

  bool complete() const noexcept {
    return missing_embeddings.empty() && missing_from_manifest.empty();
  }
};

// Report-only comparison; lists follow manifest order and record order.
CoverageSummary validate_manifest(const DatasetManifest& manifest, const EmbeddingSet& set);

// Groups sidecar records by identity label, keeping record order per folder.
DatasetManifest manifest_from_embeddings(const EmbeddingSet& set);

// Text layout: `dataset_id<TAB>folders<TAB>images`, then one line per folder
// `label<TAB>image_id<TAB>...` in label order.
std::string format_manifest(const DatasetManifest& manifest);
DatasetManifest parse_manifest(std::string_view text);
DatasetManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace leakaudit
