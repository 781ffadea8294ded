#include "leakaudit/subset.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <json.hpp>

#include "leakaudit/error.hpp"

namespace leakaudit {

namespace {

void check_overlapped_present(const DatasetManifest& manifest, const SubsetSpec& spec) {
  std::vector<std::string> absent;
  for (const auto& folder : spec.overlapped_folders) {
    if (!manifest.identities.contains(folder)) absent.push_back(folder);
  }
  if (!absent.empty()) {
    throw_data(fmt::format("{} overlapped folder(s) not in manifest '{}': {}", absent.size(), manifest.dataset_id,
                           fmt::join(absent.begin(), absent.begin() + std::min<std::size_t>(absent.size(), 10), ", ")));
  }
}

SubsetProvenance base_provenance(const DatasetManifest& manifest, const SubsetSpec& spec, SubsetVariant variant) {
  SubsetProvenance p;
  p.variant = variant;
  p.seed = spec.seed;
  p.source_dataset = manifest.dataset_id;
  p.source_folders = manifest.folder_count();
  return p;
}

}  // namespace

std::string_view variant_name(SubsetVariant v) noexcept {
  switch (v) {
    case SubsetVariant::id_disjoint:
      return "ID-Disjoint";
    case SubsetVariant::id_overlap_r:
      return "ID-Overlap-R";
    case SubsetVariant::id_overlap_c:
      return "ID-Overlap-C";
  }
  return "ID-Disjoint";
}

std::optional<SubsetVariant> parse_variant(std::string_view name) noexcept {
  if (name == "ID-Disjoint" || name == "disjoint") return SubsetVariant::id_disjoint;
  if (name == "ID-Overlap-R" || name == "overlap-r") return SubsetVariant::id_overlap_r;
  if (name == "ID-Overlap-C" || name == "overlap-c") return SubsetVariant::id_overlap_c;
  return std::nullopt;
}

std::vector<std::string> draw_dropped_folders(const std::vector<std::string>& sorted_candidates, std::size_t n_drop,
                                              std::uint64_t seed) {
  std::vector<std::string> pool = sorted_candidates;
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < n_drop; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.bounded(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n_drop);
  return pool;
}

SubsetResult build_disjoint(const DatasetManifest& manifest, const SubsetSpec& spec) {
  check_overlapped_present(manifest, spec);
  SubsetResult result;
  result.provenance = base_provenance(manifest, spec, SubsetVariant::id_disjoint);
  result.manifest.dataset_id = manifest.dataset_id;
  for (const auto& [label, images] : manifest.identities) {
    if (spec.overlapped_folders.contains(label)) {
      result.provenance.dropped_folders.push_back(label);
    } else {
      result.manifest.identities.emplace(label, images);
    }
  }
  return result;
}

SubsetResult build_overlap_r(const DatasetManifest& manifest, const SubsetSpec& spec) {
  check_overlapped_present(manifest, spec);
  std::vector<std::string> candidates;
  candidates.reserve(manifest.folder_count());
  for (const auto& [label, images] : manifest.identities) {
    if (!spec.overlapped_folders.contains(label)) candidates.push_back(label);
  }
  const std::size_t n_drop = spec.overlapped_folders.size();
  if (candidates.size() < n_drop) {
    throw_data(fmt::format("cannot drop {} non-overlapped folders: only {} exist", n_drop, candidates.size()));
  }
  auto dropped = draw_dropped_folders(candidates, n_drop, spec.seed);
  std::sort(dropped.begin(), dropped.end());

  SubsetResult result;
  result.provenance = base_provenance(manifest, spec, SubsetVariant::id_overlap_r);
  result.manifest.dataset_id = manifest.dataset_id;
  for (const auto& [label, images] : manifest.identities) {
    if (!std::binary_search(dropped.begin(), dropped.end(), label)) result.manifest.identities.emplace(label, images);
  }
  result.provenance.dropped_folders = std::move(dropped);
  return result;
}

SubsetResult build_overlap_c(const DatasetManifest& manifest, const SubsetSpec& spec) {
  SubsetResult result = build_overlap_r(manifest, spec);
  result.provenance.variant = SubsetVariant::id_overlap_c;

  std::set<std::string> claimed;
  for (const auto& group : spec.accepted_merges) {
    if (group.empty()) throw_data("accepted merge group is empty");
    for (const auto& folder : group) {
      if (!claimed.insert(folder).second) {
        throw_data(fmt::format("folder '{}' appears in more than one merge group", folder));
      }
      if (!result.manifest.identities.contains(folder)) {
        const bool was_dropped = std::binary_search(result.provenance.dropped_folders.begin(),
                                                    result.provenance.dropped_folders.end(), folder);
        throw_data(fmt::format("merge group references {} folder '{}'", was_dropped ? "dropped" : "absent", folder));
      }
    }
  }

  for (const auto& group : spec.accepted_merges) {
    std::vector<std::string> members = group;
    std::sort(members.begin(), members.end());
    std::vector<std::string> images;
    for (const auto& folder : members) {
      auto node = result.manifest.identities.extract(folder);
      images.insert(images.end(), std::make_move_iterator(node.mapped().begin()),
                    std::make_move_iterator(node.mapped().end()));
    }
    result.manifest.identities.emplace(members.front(), std::move(images));
    result.provenance.merges.push_back(MergeApplied{members.front(), std::move(members)});
  }
  std::sort(result.provenance.merges.begin(), result.provenance.merges.end(),
            [](const MergeApplied& a, const MergeApplied& b) { return a.label < b.label; });
  return result;
}

SubsetResult build_subset(const DatasetManifest& manifest, const SubsetSpec& spec) {
  switch (spec.variant) {
    case SubsetVariant::id_disjoint:
      return build_disjoint(manifest, spec);
    case SubsetVariant::id_overlap_r:
      return build_overlap_r(manifest, spec);
    case SubsetVariant::id_overlap_c:
      return build_overlap_c(manifest, spec);
  }
  throw_usage("unknown subset variant");
}

std::string provenance_json(const SubsetProvenance& p) {
  nlohmann::ordered_json j;
  j["variant"] = std::string(variant_name(p.variant));
  j["seed"] = p.seed;
  j["prng"] = "splitmix64";
  j["source_dataset"] = p.source_dataset;
  j["source_folders"] = p.source_folders;
  j["dropped_folders"] = p.dropped_folders;
  auto merges = nlohmann::ordered_json::array();
  for (const auto& m : p.merges) merges.push_back({{"label", m.label}, {"members", m.members}});
  j["applied_merges"] = std::move(merges);
  return j.dump(2) + "\n";
}

}  // namespace leakaudit
