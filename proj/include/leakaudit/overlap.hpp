#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "leakaudit/annotation_record.hpp"
#include "leakaudit/matcher.hpp"

namespace leakaudit {

// Similarity cut points for automatic classification and review banding.
// Must satisfy review_low <= tau_id <= review_high <= tau_dup, all in [-1, 1].
struct ThresholdPolicy {
  double tau_dup = 0.9;
  double tau_id = 0.5;
  double review_low = 0.4;
  double review_high = 0.8;

  void validate() const;  // Error(usage) on violation
  bool in_review_band(double similarity) const noexcept {
    return similarity >= review_low && similarity <= review_high;
  }
};

enum class VerdictSource { automatic, human };

std::string_view source_name(VerdictSource s) noexcept;

struct PairVerdict {
  std::string probe_id;
  std::string gallery_id;
  double similarity = 0.0;
  Verdict verdict = Verdict::different;
  bool duplicate = false;
  VerdictSource source = VerdictSource::automatic;
  bool needs_review = false;

  std::string pair_id() const { return make_pair_id(probe_id, gallery_id); }

  friend bool operator==(const PairVerdict&, const PairVerdict&) = default;
};

/// >= tau_dup: same + duplicate; >= tau_id: same; otherwise different.
/// Pairs inside [review_low, review_high] are flagged for review.
std::vector<PairVerdict> auto_classify(std::span<const MatchResult> matches, const ThresholdPolicy& policy);

/// Human verdicts replace automatic ones; per pair the record with the latest
/// timestamp wins, later list position breaking ties. Throws Error(data)
/// listing every pair_id that does not resolve.
std::vector<PairVerdict> merge_annotations(std::span<const PairVerdict> verdicts,
                                           std::span<const AnnotationRecord> annotations);

struct DiscordantPairs {
  std::vector<PairVerdict> hsns;  // similarity >= review_high, judged different
  std::vector<PairVerdict> lsts;  // similarity <= review_low, judged same
};

DiscordantPairs flag_discordant(std::span<const PairVerdict> verdicts, const ThresholdPolicy& policy);

// Denominators for the report fractions; a zero total yields fraction 0.
struct OverlapTotals {
  std::size_t test_identities = 0;
  std::size_t audited_probes = 0;
  std::size_t test_images = 0;  // whole test set, may exceed audited_probes
  std::size_t train_folders = 0;
};

struct OverlapReport {
  std::set<std::string> overlapped_test_identities;
  std::set<std::string> matched_train_folders;
  std::vector<std::pair<std::string, std::string>> duplicate_images;  // (probe, gallery), sorted
  std::size_t duplicate_probe_count = 0;  // distinct probes with a duplicate
  OverlapTotals totals;
  double overlapped_identity_fraction = 0.0;
  double matched_folder_fraction = 0.0;
  double duplicate_fraction_of_audited = 0.0;
  double duplicate_fraction_of_test_images = 0.0;
  std::vector<PairVerdict> hsns;
  std::vector<PairVerdict> lsts;
};

using LabelMap = std::unordered_map<std::string, std::string>;

// gallery_id -> gallery_label, as recorded in the match file.
LabelMap gallery_labels_from(std::span<const MatchResult> matches);
// image_id -> identity label of an embedding set.
LabelMap labels_from(const EmbeddingSet& set);

/// Overlap summary. A test identity is overlapped when any of its probes has
/// a same verdict; "unsure" counts as different. Order-insensitive.
OverlapReport aggregate_overlap(std::span<const PairVerdict> verdicts, const LabelMap& probe_labels,
                                const LabelMap& gallery_labels, const OverlapTotals& totals,
                                const ThresholdPolicy& policy = {});

struct IdentityLinkGraph {
  std::set<std::pair<std::string, std::string>> edges;  // (test identity, train folder)
  // Train-folder groups linked through a shared test identity, >= 2 folders
  // each. Folders sorted within a group, groups sorted by first folder.
  std::vector<std::vector<std::string>> merge_proposals;

  std::size_t linked_test_identities() const;
  std::size_t linked_train_folders() const;
};

IdentityLinkGraph build_link_graph(std::span<const PairVerdict> verdicts, const LabelMap& probe_labels,
                                   const LabelMap& gallery_labels);

// Verdict table: `probe_id<TAB>gallery_id<TAB>similarity<TAB>verdict<TAB>
// duplicate<TAB>source<TAB>needs_review`.
std::string format_verdicts(std::span<const PairVerdict> verdicts);
std::vector<PairVerdict> parse_verdicts(std::string_view text);
std::vector<PairVerdict> load_verdicts(const std::filesystem::path& path);
void write_verdicts(std::span<const PairVerdict> verdicts, const std::filesystem::path& path);

std::string overlap_report_json(const OverlapReport& report);

// One group per line, labels tab-separated. Shared by merge proposals and
// accepted merges.
std::string format_groups(std::span<const std::vector<std::string>> groups);
std::vector<std::vector<std::string>> parse_groups(std::string_view text);
std::vector<std::vector<std::string>> load_groups(const std::filesystem::path& path);

// One label per line.
std::string format_label_list(const std::set<std::string>& labels);
std::set<std::string> load_label_list(const std::filesystem::path& path);

}  // namespace leakaudit
