#include "leakaudit/manifest.hpp"

#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "leakaudit/error.hpp"
#include "leakaudit/text_io.hpp"

namespace leakaudit {

std::size_t DatasetManifest::image_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [label, images] : identities) n += images.size();
  return n;
}

void DatasetManifest::validate() const {
  std::unordered_map<std::string_view, std::string_view> owner;
  for (const auto& [label, images] : identities) {
    if (label.empty()) throw_data("manifest: empty identity folder label");
    if (images.empty()) throw_data(fmt::format("manifest: identity folder '{}' is empty", label));
    for (const auto& image : images) {
      auto [it, inserted] = owner.emplace(image, label);
      if (!inserted) {
        throw_data(fmt::format("manifest: image '{}' listed under both '{}' and '{}'", image, it->second, label));
      }
    }
  }
}

CoverageSummary validate_manifest(const DatasetManifest& manifest, const EmbeddingSet& set) {
  CoverageSummary summary;
  const std::unordered_set<std::string_view> embedded(set.image_ids.begin(), set.image_ids.end());
  std::unordered_set<std::string_view> listed;
  for (const auto& [label, images] : manifest.identities) {
    for (const auto& image : images) {
      listed.insert(image);
      if (!embedded.contains(image)) summary.missing_embeddings.push_back(image);
    }
  }
  for (const auto& id : set.image_ids) {
    if (!listed.contains(id)) summary.missing_from_manifest.push_back(id);
  }
  return summary;
}

DatasetManifest manifest_from_embeddings(const EmbeddingSet& set) {
  DatasetManifest manifest;
  manifest.dataset_id = set.dataset_id;
  for (std::size_t i = 0; i < set.count(); ++i) {
    manifest.identities[set.identity_labels[i]].push_back(set.image_ids[i]);
  }
  return manifest;
}

std::string format_manifest(const DatasetManifest& manifest) {
  std::string out = fmt::format("{}\t{}\t{}\n", manifest.dataset_id, manifest.folder_count(), manifest.image_count());
  for (const auto& [label, images] : manifest.identities) {
    out += label;
    for (const auto& image : images) {
      out += '\t';
      out += image;
    }
    out += '\n';
  }
  return out;
}

DatasetManifest parse_manifest(std::string_view text) {
  DatasetManifest manifest;
  std::size_t line_no = 0;
  std::uint64_t want_folders = 0;
  std::uint64_t want_images = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(start, nl - start);
    start = nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    const auto fields = split_tabs(line);
    if (line_no == 1) {
      if (fields.size() != 3) throw_data("manifest: header must be dataset_id<TAB>folders<TAB>images");
      manifest.dataset_id = std::string(fields[0]);
      want_folders = parse_u64(fields[1], "manifest folder count");
      want_images = parse_u64(fields[2], "manifest image count");
      continue;
    }
    if (line.empty()) continue;
    auto [it, inserted] = manifest.identities.try_emplace(std::string(fields[0]));
    if (!inserted) throw_data(fmt::format("manifest line {}: folder '{}' repeated", line_no, fields[0]));
    for (std::size_t i = 1; i < fields.size(); ++i) it->second.emplace_back(fields[i]);
  }
  if (line_no == 0) throw_data("manifest: empty document");
  if (manifest.folder_count() != want_folders || manifest.image_count() != want_images) {
    throw_data(fmt::format("manifest: header says {} folders / {} images, body has {} / {}", want_folders,
                           want_images, manifest.folder_count(), manifest.image_count()));
  }
  manifest.validate();
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  try {
    return parse_manifest(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::io) throw;
    throw_data(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  write_file_atomic(path, format_manifest(manifest));
}

}  // namespace leakaudit
