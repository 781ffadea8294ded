#include "leakaudit/overlap.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>

#include "leakaudit/error.hpp"
#include "leakaudit/text_io.hpp"
#include "leakaudit/union_find.hpp"

namespace leakaudit {

namespace {

double fraction(std::size_t count, std::size_t total) {
  return total == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(total);
}

const std::string& resolve(const LabelMap& labels, const std::string& id, std::string_view side) {
  const auto it = labels.find(id);
  if (it == labels.end()) throw_data(fmt::format("{} image '{}' has no identity label", side, id));
  return it->second;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(start, nl - start);
    start = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    fn(line_no, line);
  }
}

nlohmann::json verdict_json(const PairVerdict& v) {
  return {{"probe_id", v.probe_id},     {"gallery_id", v.gallery_id},
          {"similarity", v.similarity}, {"verdict", std::string(verdict_name(v.verdict))},
          {"duplicate", v.duplicate},   {"source", std::string(source_name(v.source))}};
}

}  // namespace

void ThresholdPolicy::validate() const {
  for (double t : {tau_dup, tau_id, review_low, review_high}) {
    if (!(t >= -1.0 && t <= 1.0)) throw_usage(fmt::format("threshold {} outside [-1, 1]", t));
  }
  if (!(review_low <= tau_id && tau_id <= review_high && review_high <= tau_dup)) {
    throw_usage(fmt::format("thresholds must satisfy review_low ({}) <= tau_id ({}) <= review_high ({}) <= "
                            "tau_dup ({})",
                            review_low, tau_id, review_high, tau_dup));
  }
}

std::string_view source_name(VerdictSource s) noexcept {
  return s == VerdictSource::human ? "human" : "auto";
}

std::vector<PairVerdict> auto_classify(std::span<const MatchResult> matches, const ThresholdPolicy& policy) {
  policy.validate();
  std::vector<PairVerdict> out;
  out.reserve(matches.size());
  for (const auto& m : matches) {
    PairVerdict v;
    v.probe_id = m.probe_id;
    v.gallery_id = m.gallery_id;
    v.similarity = m.similarity;
    if (m.similarity >= policy.tau_dup) {
      v.verdict = Verdict::same;
      v.duplicate = true;
    } else if (m.similarity >= policy.tau_id) {
      v.verdict = Verdict::same;
    } else {
      v.verdict = Verdict::different;
    }
    v.source = VerdictSource::automatic;
    v.needs_review = policy.in_review_band(m.similarity);
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<PairVerdict> merge_annotations(std::span<const PairVerdict> verdicts,
                                           std::span<const AnnotationRecord> annotations) {
  std::unordered_map<std::string, std::size_t> by_pair;
  by_pair.reserve(verdicts.size());
  for (std::size_t i = 0; i < verdicts.size(); ++i) by_pair.emplace(verdicts[i].pair_id(), i);

  // Winning annotation per verdict index: (timestamp, position).
  std::unordered_map<std::size_t, std::pair<std::int64_t, std::size_t>> winner;
  std::vector<std::string> unknown;
  for (std::size_t a = 0; a < annotations.size(); ++a) {
    const auto& rec = annotations[a];
    const auto it = by_pair.find(rec.pair_id);
    if (it == by_pair.end()) {
      unknown.push_back(rec.pair_id);
      continue;
    }
    const auto ts = parse_utc_timestamp(rec.timestamp);
    if (!ts) throw_data(fmt::format("annotation for '{}' has malformed timestamp '{}'", rec.pair_id, rec.timestamp));
    auto [slot, inserted] = winner.try_emplace(it->second, *ts, a);
    if (!inserted && *ts >= slot->second.first) slot->second = {*ts, a};
  }
  if (!unknown.empty()) {
    std::sort(unknown.begin(), unknown.end());
    unknown.erase(std::unique(unknown.begin(), unknown.end()), unknown.end());
    throw_data(fmt::format("{} annotation(s) reference unknown pairs: {}", unknown.size(), fmt::join(unknown, ", ")));
  }

  std::vector<PairVerdict> out(verdicts.begin(), verdicts.end());
  for (const auto& [index, win] : winner) {
    const auto& rec = annotations[win.second];
    auto& v = out[index];
    v.verdict = rec.verdict;
    v.duplicate = rec.duplicate && rec.verdict == Verdict::same;
    v.source = VerdictSource::human;
    // "unsure" stays in the review queue.
    v.needs_review = rec.verdict == Verdict::unsure;
  }
  return out;
}

DiscordantPairs flag_discordant(std::span<const PairVerdict> verdicts, const ThresholdPolicy& policy) {
  DiscordantPairs out;
  for (const auto& v : verdicts) {
    if (v.similarity >= policy.review_high && v.verdict == Verdict::different) out.hsns.push_back(v);
    if (v.similarity <= policy.review_low && v.verdict == Verdict::same) out.lsts.push_back(v);
  }
  return out;
}

LabelMap gallery_labels_from(std::span<const MatchResult> matches) {
  LabelMap labels;
  for (const auto& m : matches) {
    auto [it, inserted] = labels.emplace(m.gallery_id, m.gallery_label);
    if (!inserted && it->second != m.gallery_label) {
      throw_data(fmt::format("gallery image '{}' carries labels '{}' and '{}'", m.gallery_id, it->second,
                             m.gallery_label));
    }
  }
  return labels;
}

LabelMap labels_from(const EmbeddingSet& set) {
  LabelMap labels;
  labels.reserve(set.count());
  for (std::size_t i = 0; i < set.count(); ++i) labels.emplace(set.image_ids[i], set.identity_labels[i]);
  return labels;
}

OverlapReport aggregate_overlap(std::span<const PairVerdict> verdicts, const LabelMap& probe_labels,
                                const LabelMap& gallery_labels, const OverlapTotals& totals,
                                const ThresholdPolicy& policy) {
  OverlapReport report;
  report.totals = totals;
  std::set<std::pair<std::string, std::string>> duplicates;
  for (const auto& v : verdicts) {
    const auto& test_identity = resolve(probe_labels, v.probe_id, "probe");
    const auto& train_folder = resolve(gallery_labels, v.gallery_id, "gallery");
    if (v.verdict != Verdict::same) continue;
    report.overlapped_test_identities.insert(test_identity);
    report.matched_train_folders.insert(train_folder);
    if (v.duplicate) duplicates.emplace(v.probe_id, v.gallery_id);
  }
  report.duplicate_images.assign(duplicates.begin(), duplicates.end());
  std::set<std::string_view> dup_probes;
  for (const auto& [probe, gallery] : report.duplicate_images) dup_probes.insert(probe);
  report.duplicate_probe_count = dup_probes.size();

  report.overlapped_identity_fraction = fraction(report.overlapped_test_identities.size(), totals.test_identities);
  report.matched_folder_fraction = fraction(report.matched_train_folders.size(), totals.train_folders);
  report.duplicate_fraction_of_audited = fraction(report.duplicate_probe_count, totals.audited_probes);
  report.duplicate_fraction_of_test_images = fraction(report.duplicate_probe_count, totals.test_images);

  auto discordant = flag_discordant(verdicts, policy);
  auto by_pair = [](const PairVerdict& a, const PairVerdict& b) {
    return std::tie(a.probe_id, a.gallery_id) < std::tie(b.probe_id, b.gallery_id);
  };
  std::sort(discordant.hsns.begin(), discordant.hsns.end(), by_pair);
  std::sort(discordant.lsts.begin(), discordant.lsts.end(), by_pair);
  report.hsns = std::move(discordant.hsns);
  report.lsts = std::move(discordant.lsts);
  return report;
}

std::size_t IdentityLinkGraph::linked_test_identities() const {
  std::set<std::string_view> ids;
  for (const auto& [test, folder] : edges) ids.insert(test);
  return ids.size();
}

std::size_t IdentityLinkGraph::linked_train_folders() const {
  std::set<std::string_view> folders;
  for (const auto& [test, folder] : edges) folders.insert(folder);
  return folders.size();
}

IdentityLinkGraph build_link_graph(std::span<const PairVerdict> verdicts, const LabelMap& probe_labels,
                                   const LabelMap& gallery_labels) {
  IdentityLinkGraph graph;
  for (const auto& v : verdicts) {
    if (v.verdict != Verdict::same) continue;
    graph.edges.emplace(resolve(probe_labels, v.probe_id, "probe"), resolve(gallery_labels, v.gallery_id, "gallery"));
  }

  std::map<std::string_view, std::size_t> folder_index;
  for (const auto& [test, folder] : graph.edges) folder_index.emplace(folder, 0);
  std::vector<std::string_view> folders;
  folders.reserve(folder_index.size());
  for (auto& [name, index] : folder_index) {
    index = folders.size();
    folders.push_back(name);
  }

  // Edges are ordered by test identity, so each identity's folders are a run.
  UnionFind sets(folders.size());
  std::string_view run_identity;
  std::size_t run_first = 0;
  bool in_run = false;
  for (const auto& [test, folder] : graph.edges) {
    const std::size_t idx = folder_index.at(folder);
    if (!in_run || test != run_identity) {
      run_identity = test;
      run_first = idx;
      in_run = true;
    } else {
      sets.unite(run_first, idx);
    }
  }

  std::map<std::size_t, std::vector<std::string>> components;
  for (std::size_t i = 0; i < folders.size(); ++i) components[sets.find(i)].emplace_back(folders[i]);
  for (auto& [root, members] : components) {
    if (members.size() >= 2) graph.merge_proposals.push_back(std::move(members));
  }
  // Members are already in label order; order groups by their first label.
  std::sort(graph.merge_proposals.begin(), graph.merge_proposals.end());
  return graph;
}

std::string format_verdicts(std::span<const PairVerdict> verdicts) {
  std::string out;
  for (const auto& v : verdicts) {
    out += fmt::format("{}\t{}\t{:.9f}\t{}\t{}\t{}\t{}\n", v.probe_id, v.gallery_id, v.similarity,
                       verdict_name(v.verdict), v.duplicate ? "true" : "false", source_name(v.source),
                       v.needs_review ? "true" : "false");
  }
  return out;
}

std::vector<PairVerdict> parse_verdicts(std::string_view text) {
  std::vector<PairVerdict> out;
  auto parse_bool = [](std::string_view f, std::size_t line_no) {
    if (f == "true") return true;
    if (f == "false") return false;
    throw_data(fmt::format("verdict line {}: expected true/false, got '{}'", line_no, f));
  };
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    const auto f = split_tabs(line);
    if (f.size() != 7) throw_data(fmt::format("verdict line {}: expected 7 tab-separated fields", line_no));
    PairVerdict v;
    v.probe_id = std::string(f[0]);
    v.gallery_id = std::string(f[1]);
    v.similarity = parse_double(f[2], "similarity");
    const auto verdict = parse_verdict(f[3]);
    if (!verdict) throw_data(fmt::format("verdict line {}: unknown verdict '{}'", line_no, f[3]));
    v.verdict = *verdict;
    v.duplicate = parse_bool(f[4], line_no);
    if (f[5] == "auto") {
      v.source = VerdictSource::automatic;
    } else if (f[5] == "human") {
      v.source = VerdictSource::human;
    } else {
      throw_data(fmt::format("verdict line {}: unknown source '{}'", line_no, f[5]));
    }
    v.needs_review = parse_bool(f[6], line_no);
    if (v.duplicate && v.verdict != Verdict::same) {
      throw_data(fmt::format("verdict line {}: duplicate pair must be judged same", line_no));
    }
    out.push_back(std::move(v));
  });
  return out;
}

std::vector<PairVerdict> load_verdicts(const std::filesystem::path& path) {
  try {
    return parse_verdicts(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::io) throw;
    throw_data(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_verdicts(std::span<const PairVerdict> verdicts, const std::filesystem::path& path) {
  write_file_atomic(path, format_verdicts(verdicts));
}

std::string overlap_report_json(const OverlapReport& r) {
  nlohmann::ordered_json j;
  j["counts"] = {
      {"overlapped_test_identities", r.overlapped_test_identities.size()},
      {"matched_train_folders", r.matched_train_folders.size()},
      {"duplicate_pairs", r.duplicate_images.size()},
      {"duplicate_probe_images", r.duplicate_probe_count},
      {"hsns", r.hsns.size()},
      {"lsts", r.lsts.size()},
  };
  j["totals"] = {
      {"test_identities", r.totals.test_identities},
      {"audited_probes", r.totals.audited_probes},
      {"test_images", r.totals.test_images},
      {"train_folders", r.totals.train_folders},
  };
  j["fractions"] = {
      {"overlapped_test_identities", r.overlapped_identity_fraction},
      {"matched_train_folders", r.matched_folder_fraction},
      {"duplicates_of_audited_probes", r.duplicate_fraction_of_audited},
      {"duplicates_of_test_images", r.duplicate_fraction_of_test_images},
  };
  j["overlapped_test_identities"] = r.overlapped_test_identities;
  j["matched_train_folders"] = r.matched_train_folders;
  auto dups = nlohmann::json::array();
  for (const auto& [probe, gallery] : r.duplicate_images) dups.push_back({probe, gallery});
  j["duplicate_images"] = std::move(dups);
  auto hsns = nlohmann::json::array();
  for (const auto& v : r.hsns) hsns.push_back(verdict_json(v));
  j["hsns"] = std::move(hsns);
  auto lsts = nlohmann::json::array();
  for (const auto& v : r.lsts) lsts.push_back(verdict_json(v));
  j["lsts"] = std::move(lsts);
  return j.dump(2) + "\n";
}

std::string format_groups(std::span<const std::vector<std::string>> groups) {
  std::string out;
  for (const auto& g : groups) out += fmt::format("{}\n", fmt::join(g, "\t"));
  return out;
}

std::vector<std::vector<std::string>> parse_groups(std::string_view text) {
  std::vector<std::vector<std::string>> groups;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    std::vector<std::string> group;
    for (auto f : split_tabs(line)) {
      if (f.empty()) throw_data(fmt::format("group line {}: empty folder label", line_no));
      group.emplace_back(f);
    }
    groups.push_back(std::move(group));
  });
  return groups;
}

std::vector<std::vector<std::string>> load_groups(const std::filesystem::path& path) {
  return parse_groups(read_file(path));
}

std::string format_label_list(const std::set<std::string>& labels) {
  std::string out;
  for (const auto& l : labels) {
    out += l;
    out += '\n';
  }
  return out;
}

std::set<std::string> load_label_list(const std::filesystem::path& path) {
  std::set<std::string> labels;
  for (auto& line : read_lines(path)) {
    if (!line.empty()) labels.insert(std::move(line));
  }
  return labels;
}

}  // namespace leakaudit
