// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <string>

#include <fmt/format.h>

#include "leakaudit/embedding_store.hpp"
#include "leakaudit/manifest.hpp"
#include "leakaudit/matcher.hpp"
#include "leakaudit/overlap.hpp"
#include "leakaudit/report.hpp"
#include "leakaudit/subset.hpp"
#include "leakaudit/verifier.hpp"
#include "support/fixtures.hpp"
#include "support/verifier_fixture.hpp"

using namespace leakaudit;
using namespace leakaudit::testing;

namespace {

int failures = 0;

void verdict(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s  %s  (%s)\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void matcher_oracle() {
  const auto probes = random_unit_set("test", 1000, 128, 101, 0, "p");
  const auto gallery = random_unit_set("train", 10000, 128, 202, 0, "g");
  MatchOptions opt;
  opt.k = 2;
  const auto t0 = std::chrono::steady_clock::now();
  const auto got = top_k(probes, gallery, opt);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto want = naive_top_k(probes, gallery, 2);
  const bool equal = got == want;
  verdict(equal && secs < 10.0, "matcher oracle equivalence 1000x10000 dim 128 k=2",
          fmt::format("{} results, exact={}, top_k {:.2f}s < 10s", got.size(), equal, secs));
}

void planted_overlap() {
  constexpr std::size_t dim = 512, train_ids = 200, test_ids = 50, shared = 20;
  constexpr std::size_t train_per = 5, test_per = 2;
  std::mt19937_64 rng(7);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  const float sigma = 0.2f / std::sqrt(static_cast<float>(dim));
  auto unit_center = [&] {
    std::vector<float> c(dim);
    double n = 0;
    for (auto& v : c) {
      v = normal(rng);
      n += static_cast<double>(v) * v;
    }
    for (auto& v : c) v = static_cast<float>(v / std::sqrt(n));
    return c;
  };
  std::vector<std::vector<float>> train_centers(train_ids), test_centers(test_ids);
  for (auto& c : train_centers) c = unit_center();
  for (std::size_t i = 0; i < test_ids; ++i) test_centers[i] = i < shared ? train_centers[i * 7] : unit_center();
  std::set<std::string> planted;
  for (std::size_t i = 0; i < shared; ++i) planted.insert(fmt::format("test_id{:03d}", i));

  auto make_set = [&](const std::string& ds, const std::vector<std::vector<float>>& centers, std::size_t per,
                      const std::string& prefix) {
    EmbeddingSet s;
    s.dataset_id = ds;
    s.dim = dim;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      for (std::size_t j = 0; j < per; ++j) {
        s.image_ids.push_back(fmt::format("{}_id{:03d}/{}.jpg", prefix, c, j));
        s.identity_labels.push_back(fmt::format("{}_id{:03d}", prefix, c));
        for (float v : centers[c]) s.vectors.push_back(v + sigma * normal(rng));
      }
    }
    return l2_normalize(s);
  };
  const auto train = make_set("train", train_centers, train_per, "train");
  const auto test = make_set("test", test_centers, test_per, "test");

  // construction check: same center > 0.9, different center < 0.5
  double min_same = 2, max_cross = -2;
  for (std::size_t p = 0; p < test.count(); ++p) {
    const std::size_t tc = p / test_per;
    for (std::size_t g = 0; g < train.count(); ++g) {
      const std::size_t gc = g / train_per;
      const double s = cosine_similarity(test.row(p), train.row(g));
      if (tc < shared && gc == tc * 7) {
        min_same = std::min(min_same, s);
      } else {
        max_cross = std::max(max_cross, s);
      }
    }
  }

  const auto matches = top_k(test, train, {});
  const ThresholdPolicy policy;
  const auto verdicts = auto_classify(matches, policy);
  OverlapTotals totals{test_ids, test.count(), test.count(), train_ids};
  const auto report = aggregate_overlap(verdicts, labels_from(test), gallery_labels_from(matches), totals, policy);
  std::size_t tp = 0;
  for (const auto& id : report.overlapped_test_identities) tp += planted.contains(id) ? 1 : 0;
  const double precision = report.overlapped_test_identities.empty()
                               ? 0.0
                               : static_cast<double>(tp) / report.overlapped_test_identities.size();
  const double recall = static_cast<double>(tp) / planted.size();
  verdict(min_same > 0.9 && max_cross < 0.5 && precision == 1.0 && recall == 1.0,
          "planted-overlap recovery 200 train / 50 test / 20 shared",
          fmt::format("intra min {:.3f}, cross max {:.3f}, found {}, precision {:.3f}, recall {:.3f}", min_same,
                      max_cross, report.overlapped_test_identities.size(), precision, recall));
}

void subset_invariants() {
  std::size_t seeds = 0, violations = 0;
  std::string first;
  auto check = [&](bool ok, const std::string& what, std::uint64_t seed) {
    if (!ok) {
      ++violations;
      if (first.empty()) first = fmt::format("seed {}: {}", seed, what);
    }
  };
  for (std::uint64_t seed = 0; seed < 120; ++seed, ++seeds) {
    std::mt19937_64 rng(seed * 1000003 + 1);
    const std::size_t n = 10 + rng() % 991;
    DatasetManifest m;
    m.dataset_id = "ms1m";
    for (std::size_t f = 0; f < n; ++f) {
      const auto label = fmt::format("m.{:07x}", (f * 2654435761u + seed) % 0xFFFFFFFu);
      const std::size_t imgs = 1 + rng() % 5;
      for (std::size_t i = 0; i < imgs; ++i) m.identities[label].push_back(fmt::format("{}/{}.jpg", label, i));
    }
    std::vector<std::string> labels;
    for (const auto& [l, imgs] : m.identities) labels.push_back(l);
    SubsetSpec spec;
    spec.seed = rng();
    const std::size_t n_over = rng() % (labels.size() / 2 + 1);
    while (spec.overlapped_folders.size() < n_over) spec.overlapped_folders.insert(labels[rng() % labels.size()]);
    std::vector<std::string> over(spec.overlapped_folders.begin(), spec.overlapped_folders.end());
    std::shuffle(over.begin(), over.end(), rng);
    std::size_t pos = 0, reduction = 0;
    while (pos + 2 <= over.size() && rng() % 4 != 0) {
      const std::size_t len = std::min<std::size_t>(2 + rng() % 3, over.size() - pos);
      spec.accepted_merges.emplace_back(over.begin() + pos, over.begin() + pos + len);
      reduction += len - 1;
      pos += len;
    }
    const auto d = build_disjoint(m, spec);
    const auto r = build_overlap_r(m, spec);
    const auto c = build_overlap_c(m, spec);
    check(d.manifest.folder_count() == r.manifest.folder_count(), "|Disjoint| != |Overlap-R|", seed);
    for (const auto& f : spec.overlapped_folders) {
      check(!d.manifest.identities.contains(f), "Disjoint keeps an overlapped folder", seed);
      check(r.manifest.identities.contains(f), "Overlap-R misses an overlapped folder", seed);
    }
    std::multiset<std::string> ri, ci;
    for (const auto& [l, imgs] : r.manifest.identities) ri.insert(imgs.begin(), imgs.end());
    for (const auto& [l, imgs] : c.manifest.identities) ci.insert(imgs.begin(), imgs.end());
    check(ri == ci, "Overlap-C image multiset differs", seed);
    check(c.manifest.folder_count() + reduction == r.manifest.folder_count(), "Overlap-C folder count", seed);
    const auto again = build_overlap_c(m, spec);
    check(format_manifest(again.manifest) == format_manifest(c.manifest) &&
              format_manifest(build_overlap_r(m, spec).manifest) == format_manifest(r.manifest),
          "same seed, different bytes", seed);
  }
  verdict(violations == 0, "subset invariants over randomized specs",
          fmt::format("{} seeds, 10-1000 folders, {} violations{}", seeds, violations,
                      first.empty() ? "" : "; first: " + first));
}

void verifier_oracle() {
  std::size_t runs = 0, mismatched = 0, metric_diff = 0, scale_diff = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed, ++runs) {
    const auto fx = quantized_protocol(10, 30, seed);
    const auto set = l2_normalize(fx.raw);
    const auto cos = evaluate(set, fx.protocol, {Metric::cosine, 1});
    if (cos.fold_accuracy != grid_oracle_accuracy(fx.raw, fx.protocol)) ++mismatched;
    const auto euc = evaluate(set, fx.protocol, {Metric::euclidean, 1});
    if (cos.fold_accuracy != euc.fold_accuracy || cos.mean_accuracy != euc.mean_accuracy ||
        cos.stddev != euc.stddev) {
      ++metric_diff;
    }
    const auto scaled = quantized_protocol(10, 30, seed, 3.7f);
    if (!(evaluate(l2_normalize(scaled.raw), scaled.protocol, {Metric::cosine, 1}) == cos)) ++scale_diff;
  }
  verdict(mismatched == 0 && metric_diff == 0 && scale_diff == 0,
          "verifier oracle equivalence, 10 folds x 60 pairs",
          fmt::format("{} protocols: grid-oracle mismatches {}, cosine/euclidean differences {}, x3.7 differences {}",
                      runs, mismatched, metric_diff, scale_diff));
}

void published_table() {
  const char* records =
      "CosFace,ID-Overlap-C,LFW,99.78\nCosFace,ID-Overlap-C,CPLFW,93.27\nCosFace,ID-Overlap-C,CALFW,96.18\n"
      "CosFace,ID-Overlap-C,MLFW,90.38\nCosFace,ID-Overlap-C,TALFW,62.48\n"
      "CosFace,ID-Disjoint,LFW,99.75\nCosFace,ID-Disjoint,CPLFW,93.20\nCosFace,ID-Disjoint,CALFW,96.07\n"
      "CosFace,ID-Disjoint,MLFW,89.37\nCosFace,ID-Disjoint,TALFW,61.53\n";
  const auto report = compute_bias(parse_records(records));
  const auto& m = report.methods.at(0);
  const std::vector<std::pair<std::string, double>> published = {
      {"LFW", 0.04}, {"CPLFW", 0.07}, {"CALFW", 0.11}, {"MLFW", 1.01}, {"TALFW", 0.95}};
  bool ok = true;
  std::string detail;
  double talfw_difficulty = 0;
  for (const auto& [set, want] : published) {
    for (const auto& c : m.cells) {
      if (c.test_set != set) continue;
      const double got = c.importance.to_double();
      const bool cell_ok = std::abs(got - want) <= 0.005 + 1e-12;
      ok = ok && cell_ok;
      detail += fmt::format("{} {}{} ", set, c.importance.to_string(2), cell_ok ? "" : fmt::format("!={:.2f}", want));
      if (set == "TALFW") talfw_difficulty = c.difficulty.to_double();
    }
  }
  const bool avg_ok = std::abs(m.bias.to_double() - 0.44) <= 0.005 + 1e-12;
  const bool diff_ok = std::abs(talfw_difficulty - 62.005) <= 1e-9;
  detail += fmt::format("AVG {}; TALFW difficulty {:.3f}", m.bias.to_string(2), talfw_difficulty);
  verdict(ok && avg_ok && diff_ok, "published-table reproduction (CosFace rows -> optimistic bias)", detail);

  // The published LFW cell 0.04 is the AVG-FOR-ALL row difference (99.79 - 99.75).
  const auto all = compute_bias(parse_records("all,overlap-c,LFW,99.79\nall,disjoint,LFW,99.75\n"));
  std::printf("INFO  AVG-FOR-ALL LFW rows give %s; the CosFace LFW rows give 0.03\n",
              all.methods[0].cells[0].importance.to_string(2).c_str());
}

}  // namespace

int main() {
  matcher_oracle();
  planted_overlap();
  subset_invariants();
  verifier_oracle();
  published_table();
  verdict(true, "not desk-reproducible, stated explicitly",
          "headline verification accuracies need ResNet100 trained on MS1MV2 variants; this toolkit consumes "
          "externally produced embeddings, is validated by the suites above, and ran with no secondary "
          "component built");
  std::printf("%s  %d criteria failed\n", failures == 0 ? "ALL PASS" : "SUMMARY", failures);
  return failures == 0 ? 0 : 1;
}
