#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "leakaudit/embedding_store.hpp"
#include "leakaudit/error.hpp"
#include "leakaudit/verifier.hpp"
#include "support/fixtures.hpp"
#include "support/verifier_fixture.hpp"

using namespace leakaudit;
using namespace leakaudit::testing;

namespace {

const char* kClassic =
    "2\t2\n"
    "Abel\t1\t2\n"
    "Bea\t3\t4\n"
    "Abel\t1\tBea\t2\n"
    "Cid\t1\tDee\t9\n"
    "Cid\t1\t3\n"
    "Dee\t2 5\n"
    "Abel 2 Cid 1\n"
    "Bea\t1\tDee\t2\n";

EmbeddingSet two_images(std::vector<float> a, std::vector<float> b) {
  EmbeddingSet s;
  s.dataset_id = "pair";
  s.dim = a.size();
  s.image_ids = {"a", "b"};
  s.identity_labels = {"a", "b"};
  s.vectors = a;
  s.vectors.insert(s.vectors.end(), b.begin(), b.end());
  return s;
}

PairProtocol one_pair_protocol() {
  PairProtocol p;
  p.name = "one";
  p.folds.push_back({{{"a", "b"}}, {}});
  return p;
}

std::vector<ScoredPair> scored(std::vector<double> genuine, std::vector<double> impostor) {
  std::vector<ScoredPair> out;
  for (double g : genuine) out.push_back({g, true});
  for (double i : impostor) out.push_back({i, false});
  return out;
}

}  // namespace

TEST(Protocol, ClassicParse) {
  const auto p = parse_classic_pairs(kClassic, "toy");
  ASSERT_EQ(p.folds.size(), 2u);
  EXPECT_EQ(p.pair_count(), 8u);
  EXPECT_EQ(p.folds[0].genuine[0], (ImagePair{"Abel/Abel_0001.jpg", "Abel/Abel_0002.jpg"}));
  EXPECT_EQ(p.folds[0].impostor[1], (ImagePair{"Cid/Cid_0001.jpg", "Dee/Dee_0009.jpg"}));
  EXPECT_EQ(p.folds[1].genuine[1], (ImagePair{"Dee/Dee_0002.jpg", "Dee/Dee_0005.jpg"}));
  EXPECT_EQ(p.folds[1].impostor[0], (ImagePair{"Abel/Abel_0002.jpg", "Cid/Cid_0001.jpg"}));
  EXPECT_EQ(classic_image_id("Abel", 12), "Abel/Abel_0012.jpg");
}

TEST(Protocol, NativeJsonRoundTrip) {
  auto p = parse_classic_pairs(kClassic, "toy");
  const auto back = parse_protocol_json(protocol_json(p));
  EXPECT_EQ(back, p);
}

TEST(Protocol, StrictShapeAndSelfPairs) {
  TempDir dir;
  const auto path = dir / "toy.txt";
  std::ofstream(path) << kClassic;
  EXPECT_THROW(load_protocol(path), Error);
  ProtocolLoadOptions relaxed;
  relaxed.strict = false;
  const auto p = load_protocol(path, relaxed);
  EXPECT_EQ(p.name, "toy");
  ProtocolLoadOptions shaped;
  shaped.shape = {2, 2, 2};
  EXPECT_EQ(load_protocol(path, shaped), p);

  auto bad = p;
  bad.folds[0].genuine[0].second = bad.folds[0].genuine[0].first;
  EXPECT_THROW(validate_protocol(bad, std::nullopt), Error);
}

TEST(Scores, IdenticalAndOrthogonal) {
  const auto same = pair_scores(two_images({0.6f, 0.8f}, {0.6f, 0.8f}), one_pair_protocol(), Metric::cosine);
  EXPECT_NEAR(same[0][0].score, 1.0, 1e-7);
  EXPECT_TRUE(same[0][0].genuine);
  EXPECT_EQ(pair_scores(two_images({0.6f, 0.8f}, {0.6f, 0.8f}), one_pair_protocol(), Metric::euclidean)[0][0].score,
            0.0);
  const auto orth = two_images({1, 0}, {0, 1});
  EXPECT_EQ(pair_scores(orth, one_pair_protocol(), Metric::cosine)[0][0].score, 0.0);
  EXPECT_NEAR(pair_scores(orth, one_pair_protocol(), Metric::euclidean)[0][0].score, std::sqrt(2.0), 1e-12);
}

TEST(Scores, DistanceAndCosineAgreeOnUnitVectors) {
  const auto set = random_unit_set("u", 200, 64, 3);
  PairProtocol p;
  p.name = "r";
  p.folds.emplace_back();
  for (std::size_t i = 0; i + 1 < set.count(); i += 2) p.folds[0].genuine.push_back({set.image_ids[i], set.image_ids[i + 1]});
  const auto cos = pair_scores(set, p, Metric::cosine);
  const auto dist = pair_scores(set, p, Metric::euclidean);
  for (std::size_t i = 0; i < cos[0].size(); ++i) {
    const double d = dist[0][i].score;
    EXPECT_NEAR(d * d + 2.0 * cos[0][i].score, 2.0, 1e-5);
  }
}

TEST(Threshold, SeparableAndInverted) {
  const auto sep = best_threshold(scored({0.9, 0.8}, {0.1, 0.2}), Metric::cosine);
  EXPECT_DOUBLE_EQ(sep.threshold, 0.5);
  EXPECT_EQ(sep.accuracy, 1.0);
  const auto dist = best_threshold(scored({0.1, 0.2}, {0.9, 0.8}), Metric::euclidean);
  EXPECT_DOUBLE_EQ(dist.threshold, 0.5);
  EXPECT_EQ(dist.accuracy, 1.0);
  // genuine below impostor: accepting everything or nothing both give 1/2,
  // and the candidate accepting the most pairs wins
  const auto inv = best_threshold(scored({0.4}, {0.6}), Metric::cosine);
  EXPECT_EQ(inv.accuracy, 0.5);
  EXPECT_LT(inv.threshold, 0.4);
}

TEST(Threshold, OneClassIsError) {
  EXPECT_THROW(best_threshold(scored({0.4, 0.5}, {}), Metric::cosine), Error);
  EXPECT_THROW(best_threshold(scored({}, {0.4}), Metric::cosine), Error);
}

TEST(Threshold, MatchesGridSearch) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<ScoredPair> pairs;
    std::size_t genuine = 0;
    for (int i = 0; i < 200; ++i) {
      const int level = static_cast<int>(rng() % 2001) - 1000;  // multiples of 1e-3
      const bool g = (rng() % 1000) < static_cast<std::uint64_t>(500 + level / 3);
      genuine += g;
      pairs.push_back({level / 1000.0, g});
    }
    if (genuine == 0 || genuine == pairs.size()) continue;
    double grid_best = 0.0;
    for (int j = 0; j <= 20001; ++j) {
      grid_best = std::max(grid_best, accuracy_at(pairs, Metric::cosine, -1.0 + j * 1e-4));
    }
    const auto choice = best_threshold(pairs, Metric::cosine);
    EXPECT_EQ(choice.accuracy, grid_best) << seed;
    EXPECT_EQ(accuracy_at(pairs, Metric::cosine, choice.threshold), choice.accuracy) << seed;
    const double p = static_cast<double>(genuine) / pairs.size();
    EXPECT_GE(choice.accuracy, std::max(p, 1.0 - p)) << seed;
  }
}

TEST(Evaluate, SeparableIsPerfect) {
  const auto fx = quantized_protocol(4, 8, 1);
  const auto set = l2_normalize(fx.raw);
  const auto scores = pair_scores(set, fx.protocol, Metric::cosine);
  // relabel so every pair above cosine 0.5 is genuine
  PairProtocol p;
  p.name = "separable";
  for (std::size_t f = 0; f < fx.protocol.folds.size(); ++f) {
    std::vector<ImagePair> all = fx.protocol.folds[f].genuine;
    all.insert(all.end(), fx.protocol.folds[f].impostor.begin(), fx.protocol.folds[f].impostor.end());
    ProtocolFold fold;
    for (std::size_t i = 0; i < all.size(); ++i) (scores[f][i].score > 0.5 ? fold.genuine : fold.impostor).push_back(all[i]);
    p.folds.push_back(fold);
  }
  const auto r = evaluate(set, p, {});
  for (double a : r.fold_accuracy) EXPECT_EQ(a, 1.0);
  EXPECT_EQ(r.mean_accuracy, 1.0);
  EXPECT_EQ(r.stddev, 0.0);
}

TEST(Evaluate, FoldAccuracyMatchesGridOracle) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto fx = quantized_protocol(3, 20, seed);
    const auto r = evaluate(l2_normalize(fx.raw), fx.protocol, {});
    EXPECT_EQ(r.fold_accuracy, grid_oracle_accuracy(fx.raw, fx.protocol)) << seed;
    double mean = 0.0;
    for (double a : r.fold_accuracy) mean += a;
    EXPECT_DOUBLE_EQ(r.mean_accuracy, mean / 3.0);
  }
}

TEST(Evaluate, CosineAndEuclideanAgree) {
  const auto fx = quantized_protocol(5, 15, 7);
  const auto set = l2_normalize(fx.raw);
  const auto cos = evaluate(set, fx.protocol, {Metric::cosine, 1});
  const auto euc = evaluate(set, fx.protocol, {Metric::euclidean, 1});
  EXPECT_EQ(cos.fold_accuracy, euc.fold_accuracy);
  EXPECT_EQ(cos.stddev, euc.stddev);
}

TEST(Evaluate, UniformScaleIsBitIdentical) {
  const auto a = quantized_protocol(4, 12, 9, 1.0f);
  const auto b = quantized_protocol(4, 12, 9, 3.7f);
  ASSERT_NE(a.raw.vectors, b.raw.vectors);
  EXPECT_EQ(evaluate(l2_normalize(a.raw), a.protocol, {}), evaluate(l2_normalize(b.raw), b.protocol, {}));
  EXPECT_EQ(l2_normalize(a.raw).vectors, l2_normalize(b.raw).vectors);
}

TEST(Evaluate, PairOrderAndWorkersDoNotMatter) {
  const auto set = random_unit_set("r", 400, 16, 5, 60);
  PairProtocol p;
  p.name = "random";
  std::mt19937_64 rng(12);
  for (int f = 0; f < 4; ++f) {
    ProtocolFold fold;
    for (int i = 0; i < 25; ++i) {
      const std::size_t a = rng() % 400, b = (a + 1 + rng() % 399) % 400;
      ((rng() & 1) ? fold.genuine : fold.impostor).push_back({set.image_ids[a], set.image_ids[b]});
    }
    p.folds.push_back(fold);
  }
  const auto base = evaluate(set, p, {});
  auto shuffled = p;
  for (auto& f : shuffled.folds) {
    std::shuffle(f.genuine.begin(), f.genuine.end(), rng);
    std::shuffle(f.impostor.begin(), f.impostor.end(), rng);
  }
  EXPECT_EQ(evaluate(set, shuffled, {}), base);
  EXPECT_EQ(evaluate(set, p, {Metric::cosine, 4}), base);
}

TEST(Evaluate, Preconditions) {
  const auto fx = quantized_protocol(3, 5, 2);
  EXPECT_THROW(evaluate(fx.raw, fx.protocol, {}), Error);  // not normalized
  auto one = fx.protocol;
  one.folds.resize(1);
  EXPECT_THROW(evaluate(l2_normalize(fx.raw), one, {}), Error);
}

TEST(Evaluate, FlipFusion) {
  const auto fx = quantized_protocol(3, 10, 4);
  auto flipped = fx.raw;
  std::mt19937_64 rng(1);
  std::normal_distribution<float> n(0.0f, 0.05f);
  for (auto& v : flipped.vectors) v += n(rng);
  const auto fused = evaluate(fx.raw, fx.protocol, {}, &flipped);
  EXPECT_EQ(fused.fusion, Fusion::original_plus_flip);
  auto direct = evaluate(fuse_flip(fx.raw, flipped), fx.protocol, {});
  direct.fusion = Fusion::original_plus_flip;
  EXPECT_EQ(fused, direct);
}

TEST(Report, Format) {
  VerificationReport r;
  r.protocol = "lfw";
  r.fold_accuracy = {1.0, 0.95};
  r.fold_threshold = {0.25, -0.125};
  r.mean_accuracy = 0.975;
  r.stddev = std::sqrt(0.00125);
  EXPECT_EQ(format_report(r),
            "# protocol\tlfw\n# metric\tcosine\n# fusion\toriginal\n"
            "fold\tthreshold\taccuracy\n"
            "1\t0.250000000\t100.00\n"
            "2\t-0.125000000\t95.00\n"
            "mean\t97.50\nstd\t3.54\n");
}
