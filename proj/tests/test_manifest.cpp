#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "leakaudit/error.hpp"
#include "leakaudit/manifest.hpp"
#include "support/fixtures.hpp"

using namespace leakaudit;

namespace {

DatasetManifest toy_manifest() {
  DatasetManifest m;
  m.dataset_id = "train";
  m.identities["0_100"] = {"0_100/1.jpg", "0_100/2.jpg"};
  m.identities["0_200"] = {"0_200/1.jpg"};
  m.identities["1_005"] = {"1_005/3.jpg", "1_005/1.jpg", "1_005/2.jpg"};
  return m;
}

EmbeddingSet set_for(const DatasetManifest& m) {
  EmbeddingSet s;
  s.dataset_id = m.dataset_id;
  s.dim = 2;
  for (const auto& [label, images] : m.identities) {
    for (const auto& img : images) {
      s.image_ids.push_back(img);
      s.identity_labels.push_back(label);
      s.vectors.insert(s.vectors.end(), {1.0f, 0.0f});
    }
  }
  return s;
}

}  // namespace

TEST(Manifest, ExactCoverage) {
  const auto m = toy_manifest();
  const auto cov = validate_manifest(m, set_for(m));
  EXPECT_TRUE(cov.complete());
}

TEST(Manifest, OneExtraManifestImage) {
  const auto m = toy_manifest();
  auto bigger = m;
  bigger.identities["0_200"].push_back("0_200/9.jpg");
  const auto cov = validate_manifest(bigger, set_for(m));
  ASSERT_EQ(cov.missing_embeddings.size(), 1u);
  EXPECT_EQ(cov.missing_embeddings[0], "0_200/9.jpg");
  EXPECT_TRUE(cov.missing_from_manifest.empty());
}

TEST(Manifest, SubsampledCoverageMatchesSetDifference) {
  std::mt19937_64 rng(2024);
  DatasetManifest m;
  m.dataset_id = "r";
  for (int f = 0; f < 20; ++f) {
    const int n = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) m.identities[fmt::format("f{:02d}", f)].push_back(fmt::format("f{:02d}/{}.jpg", f, i));
  }
  const auto full = set_for(m);
  EmbeddingSet sub;
  sub.dataset_id = "r";
  sub.dim = 2;
  std::set<std::string> kept;
  for (std::size_t i = 0; i < full.count(); ++i) {
    if (rng() % 10 == 0) continue;
    sub.image_ids.push_back(full.image_ids[i]);
    sub.identity_labels.push_back(full.identity_labels[i]);
    sub.vectors.insert(sub.vectors.end(), {0.0f, 1.0f});
    kept.insert(full.image_ids[i]);
  }
  // stray embedding absent from the manifest
  sub.image_ids.push_back("stray.jpg");
  sub.identity_labels.push_back("zz");
  sub.vectors.insert(sub.vectors.end(), {0.0f, 1.0f});

  std::vector<std::string> expect_missing;
  for (const auto& id : full.image_ids) {
    if (!kept.contains(id)) expect_missing.push_back(id);
  }
  const auto cov = validate_manifest(m, sub);
  EXPECT_EQ(cov.missing_embeddings, expect_missing);
  EXPECT_EQ(cov.missing_from_manifest, std::vector<std::string>{"stray.jpg"});
}

TEST(Manifest, RejectsImageInTwoFolders) {
  auto m = toy_manifest();
  m.identities["0_200"].push_back("0_100/1.jpg");
  EXPECT_THROW(m.validate(), Error);
}

TEST(Manifest, RejectsEmptyFolder) {
  auto m = toy_manifest();
  m.identities["0_300"] = {};
  EXPECT_THROW(m.validate(), Error);
}

TEST(Manifest, TextRoundTrip) {
  const auto m = toy_manifest();
  const std::string text = format_manifest(m);
  EXPECT_EQ(text.substr(0, text.find('\n')), "train\t3\t6");
  const auto back = parse_manifest(text);
  EXPECT_EQ(back.identities, m.identities);
  EXPECT_EQ(format_manifest(back), text);
}

TEST(Manifest, HeaderCountsChecked) {
  EXPECT_THROW(parse_manifest("train\t2\t3\na\tx\ty\n"), Error);
}

TEST(Manifest, FromEmbeddingsKeepsRecordOrder) {
  const auto s = leakaudit::testing::random_set("g", 10, 2, 1, 3);
  const auto m = manifest_from_embeddings(s);
  EXPECT_EQ(m.folder_count(), 3u);
  EXPECT_EQ(m.image_count(), 10u);
  EXPECT_TRUE(validate_manifest(m, s).complete());
  const auto& first = m.identities.begin()->second;
  EXPECT_TRUE(std::is_sorted(first.begin(), first.end()));
}
