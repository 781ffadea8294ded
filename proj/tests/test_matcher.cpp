#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "leakaudit/error.hpp"
#include "leakaudit/matcher.hpp"
#include "leakaudit/simd/kernels.hpp"
#include "leakaudit/text_io.hpp"
#include "support/fixtures.hpp"

using namespace leakaudit;
namespace lt = leakaudit::testing;

namespace {

EmbeddingSet axis_set(std::size_t dim, std::initializer_list<std::vector<float>> rows) {
  EmbeddingSet s;
  s.dataset_id = "axis";
  s.dim = dim;
  std::size_t i = 0;
  for (const auto& r : rows) {
    s.image_ids.push_back(fmt::format("r{}", i));
    s.identity_labels.push_back(fmt::format("L{}", i++));
    s.vectors.insert(s.vectors.end(), r.begin(), r.end());
  }
  return s;
}

}  // namespace

TEST(Cosine, Identities) {
  const auto s = axis_set(3, {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}});
  EXPECT_EQ(cosine_similarity(s.row(0), s.row(0)), 1.0);
  EXPECT_EQ(cosine_similarity(s.row(0), s.row(1)), -1.0);
  EXPECT_EQ(cosine_similarity(s.row(0), s.row(2)), 0.0);
}

TEST(Cosine, SymmetricExactly) {
  const auto s = lt::random_unit_set("s", 40, 37, 11);
  for (std::size_t i = 0; i < s.count(); ++i) {
    for (std::size_t j = 0; j < s.count(); ++j) {
      EXPECT_EQ(cosine_similarity(s.row(i), s.row(j)), cosine_similarity(s.row(j), s.row(i)));
    }
  }
}

TEST(Cosine, ClampedToUnitRange) {
  const auto s = lt::random_unit_set("s", 200, 64, 12);
  for (std::size_t i = 0; i < s.count(); ++i) {
    const double c = cosine_similarity(s.row(i), s.row(i));
    EXPECT_LE(c, 1.0);
    EXPECT_NEAR(c, 1.0, 1e-6);
  }
}

TEST(Cosine, DimensionMismatch) {
  const std::vector<float> a(3, 0.5f), b(4, 0.5f);
  EXPECT_THROW(cosine_similarity(a, b), Error);
}

TEST(TopK, ResultCountIsProbesTimesK) {
  const auto probes = lt::random_unit_set("p", 120, 16, 1);
  const auto gallery = lt::random_unit_set("g", 300, 16, 2);
  MatchOptions o;
  o.k = 2;
  const auto r = top_k(probes, gallery, o);
  EXPECT_EQ(r.size(), 240u);
  for (std::size_t i = 0; i < r.size(); i += 2) {
    EXPECT_EQ(r[i].rank, 1u);
    EXPECT_EQ(r[i + 1].rank, 2u);
    EXPECT_EQ(r[i].probe_id, r[i + 1].probe_id);
    EXPECT_GE(r[i].similarity, r[i + 1].similarity);
  }
}

TEST(TopK, ExactCopyRanksFirst) {
  const auto probes = lt::random_unit_set("p", 10, 24, 3);
  auto gallery = lt::random_unit_set("g", 50, 24, 4);
  std::copy(probes.row(6).begin(), probes.row(6).end(), gallery.vectors.begin() + 31 * 24);
  const auto r = top_k(probes, gallery, MatchOptions{});
  EXPECT_EQ(r[12].gallery_id, gallery.image_ids[31]);
  EXPECT_EQ(r[12].rank, 1u);
  EXPECT_NEAR(r[12].similarity, 1.0, 1e-6);
}

TEST(TopK, EqualsBruteForceOracle) {
  const auto probes = lt::random_unit_set("p", 50, 8, 5);
  const auto gallery = lt::random_unit_set("g", 200, 8, 6, 40, "gal");
  MatchOptions o;
  o.k = 3;
  EXPECT_EQ(top_k(probes, gallery, o), lt::naive_top_k(probes, gallery, 3));
}

TEST(TopK, TiesGoToLowerGalleryIndex) {
  // four identical gallery rows; the probe must see indices 0,1,2 in order
  const auto probes = axis_set(2, {{1, 0}});
  const auto gallery = axis_set(2, {{0, 1}, {1, 0}, {1, 0}, {1, 0}, {1, 0}});
  MatchOptions o;
  o.k = 3;
  o.block_bytes = 8;  // one row per block
  const auto r = top_k(probes, gallery, o);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].gallery_id, "r1");
  EXPECT_EQ(r[1].gallery_id, "r2");
  EXPECT_EQ(r[2].gallery_id, "r3");
}

TEST(TopK, QuantizedTiesMatchOracle) {
  // many exact ties from a tiny lattice of directions
  std::mt19937_64 rng(77);
  EmbeddingSet g;
  g.dataset_id = "g";
  g.dim = 4;
  for (int i = 0; i < 400; ++i) {
    g.image_ids.push_back(fmt::format("g{}", i));
    g.identity_labels.push_back("x");
    for (int j = 0; j < 4; ++j) g.vectors.push_back(static_cast<float>(rng() % 3) - 1.0f);
    if (g.vectors[g.vectors.size() - 4] == 0 && g.vectors[g.vectors.size() - 3] == 0 &&
        g.vectors[g.vectors.size() - 2] == 0 && g.vectors.back() == 0) {
      g.vectors.back() = 1.0f;
    }
  }
  g = l2_normalize(g);
  const auto p = lt::random_unit_set("p", 30, 4, 78);
  for (std::size_t k : {1u, 2u, 5u}) {
    MatchOptions o;
    o.k = k;
    o.block_bytes = 16 * 37;
    EXPECT_EQ(top_k(p, g, o), lt::naive_top_k(p, g, k)) << k;
  }
}

TEST(TopK, IndependentOfWorkersBlocksAndIsa) {
  const auto probes = lt::random_unit_set("p", 97, 33, 7);
  const auto gallery = lt::random_unit_set("g", 503, 33, 8);
  MatchOptions base;
  base.k = 4;
  base.isa = simd::Isa::scalar;
  const auto want = format_matches(top_k(probes, gallery, base));
  for (const auto isa : simd::available_isas()) {
    for (std::size_t workers : {1u, 3u, 8u}) {
      for (std::size_t block : {std::size_t{132}, std::size_t{4096}, std::size_t{64} << 20}) {
        MatchOptions o = base;
        o.isa = isa;
        o.workers = workers;
        o.block_bytes = block;
        o.probe_block = 5;
        EXPECT_EQ(format_matches(top_k(probes, gallery, o)), want)
            << simd::isa_name(isa) << " workers " << workers << " block " << block;
      }
    }
  }
}

TEST(TopK, PreconditionErrors) {
  const auto p = lt::random_unit_set("p", 4, 8, 1);
  const auto g = lt::random_unit_set("g", 3, 8, 2);
  MatchOptions o;
  o.k = 4;
  EXPECT_THROW(top_k(p, g, o), Error);
  o.k = 0;
  EXPECT_THROW(top_k(p, g, o), Error);
  o.k = 1;
  const auto g9 = lt::random_unit_set("g", 3, 9, 2);
  EXPECT_THROW(top_k(p, g9, o), Error);
  EXPECT_THROW(top_k(lt::random_set("raw", 4, 8, 1), g, o), Error);
}

TEST(Histogram, EmptyInputAllZero) {
  const auto h = histogram({}, 0.1);
  EXPECT_EQ(h.counts.size(), 20u);
  EXPECT_EQ(h.total(), 0u);
}

TEST(Histogram, HalfWidthBins) {
  const std::vector<double> s = {0.25, 0.25, 0.75};
  const auto h = histogram(s, 0.5);
  ASSERT_EQ(h.counts.size(), 4u);
  EXPECT_EQ(h.counts[2], 2u);  // [0, 0.5)
  EXPECT_EQ(h.counts[3], 1u);  // [0.5, 1]
  EXPECT_EQ(h.lower(2), 0.0);
  EXPECT_EQ(h.upper(3), 1.0);
}

TEST(Histogram, EndpointsAndCountsSum) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> s(5000);
  for (auto& x : s) x = u(rng);
  s.push_back(1.0);
  s.push_back(-1.0);
  const auto h = histogram(s, 0.03);
  EXPECT_EQ(h.total(), s.size());
  EXPECT_EQ(h.upper(h.counts.size() - 1), 1.0);
}

TEST(Histogram, QuantilesMatchSortOracle) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> d(0.3, 0.2);
  std::vector<double> s(24000);
  for (auto& x : s) x = std::clamp(d(rng), -1.0, 1.0);
  const std::vector<double> probs = {0.0, 0.01, 0.1, 0.5, 0.9, 0.99, 1.0};
  const auto q = quantiles(s, probs);
  auto sorted = s;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double h = (sorted.size() - 1) * probs[i];
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    EXPECT_DOUBLE_EQ(q[i], sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo])) << probs[i];
  }
}

TEST(MatchFile, FormatAndParseRoundTrip) {
  const auto p = lt::random_unit_set("p", 5, 8, 1);
  const auto g = lt::random_unit_set("g", 9, 8, 2);
  const auto r = top_k(p, g, MatchOptions{});
  const std::string text = format_matches(r);
  const auto first = text.substr(0, text.find('\n'));
  EXPECT_EQ(std::count(first.begin(), first.end(), '\t'), 4);
  EXPECT_EQ(first.size() - first.rfind('.') - 1, 9u);  // nine decimal digits
  const auto back = parse_matches(text);
  ASSERT_EQ(back.size(), r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_EQ(back[i].gallery_id, r[i].gallery_id);
    EXPECT_NEAR(back[i].similarity, r[i].similarity, 5e-10);
  }
  EXPECT_EQ(format_matches(back), text);
}
