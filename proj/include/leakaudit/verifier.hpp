#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "leakaudit/embedding_store.hpp"

namespace leakaudit {

struct ImagePair {
  std::string first;
  std::string second;

  friend bool operator==(const ImagePair&, const ImagePair&) = default;
};

struct ProtocolFold {
  std::vector<ImagePair> genuine;
  std::vector<ImagePair> impostor;

  friend bool operator==(const ProtocolFold&, const ProtocolFold&) = default;
};

// Fold-structured genuine/impostor pairs, e.g. 10 x (300 + 300) for LFW.
struct PairProtocol {
  std::string name;
  std::vector<ProtocolFold> folds;

  std::size_t pair_count() const noexcept;

  friend bool operator==(const PairProtocol&, const PairProtocol&) = default;
};

struct ProtocolShape {
  std::size_t folds = 10;
  std::size_t genuine_per_fold = 300;
  std::size_t impostor_per_fold = 300;
};

// Rejects pairs of an image with itself and empty folds; with a shape, also
// enforces the exact fold layout.
void validate_protocol(const PairProtocol& protocol, const std::optional<ProtocolShape>& shape);

/// Classic pairs list: header `folds<TAB>n` (or a single `n` for one fold),
/// then per fold n lines `name<TAB>i<TAB>j` followed by n lines
/// `name1<TAB>i<TAB>name2<TAB>j`. Spaces are accepted as separators.
PairProtocol parse_classic_pairs(std::string_view text, std::string name);

// LFW relative path for the n-th image of a person: `name/name_0001.jpg`.
std::string classic_image_id(std::string_view person, std::uint64_t number);

// {"name": ..., "folds": [{"genuine": [[a, b], ...], "impostor": [...]}]}
PairProtocol parse_protocol_json(std::string_view text);
std::string protocol_json(const PairProtocol& protocol);

struct ProtocolLoadOptions {
  bool strict = true;  // require `shape`
  ProtocolShape shape;
  std::string name;  // for classic files; defaults to the file stem
};

// Detects the native JSON document by its leading '{'.
PairProtocol load_protocol(const std::filesystem::path& path, const ProtocolLoadOptions& options = {});

enum class Metric { cosine, euclidean };
enum class Fusion { original, original_plus_flip };

std::string_view metric_name(Metric m) noexcept;
std::optional<Metric> parse_metric(std::string_view name) noexcept;
std::string_view fusion_name(Fusion f) noexcept;

struct ScoredPair {
  double score = 0.0;
  bool genuine = false;
};

double euclidean_distance(std::span<const float> a, std::span<const float> b);

// Scores per fold, genuine pairs first. Cosine is clamped to [-1, 1];
// euclidean is computed directly on the (normalized) vectors.
std::vector<std::vector<ScoredPair>> pair_scores(const EmbeddingSet& set, const PairProtocol& protocol,
                                                 Metric metric);

// cosine accepts score >= t; euclidean accepts score <= t.
bool accepts(Metric metric, double score, double threshold) noexcept;
double accuracy_at(std::span<const ScoredPair> pairs, Metric metric, double threshold);

struct ThresholdChoice {
  double threshold = 0.0;
  double accuracy = 0.0;
};

/// Exact accuracy maximizer. Candidates are midpoints between adjacent
/// distinct scores plus one sentinel beyond each end. Among equal accuracies
/// the candidate accepting the most pairs wins: the smallest cosine
/// threshold, the largest euclidean one.
ThresholdChoice best_threshold(std::span<const ScoredPair> pairs, Metric metric);

struct VerificationReport {
  std::string protocol;
  Metric metric = Metric::cosine;
  Fusion fusion = Fusion::original;
  std::vector<double> fold_accuracy;  // fractions in [0, 1]
  std::vector<double> fold_threshold;
  double mean_accuracy = 0.0;
  double stddev = 0.0;  // sample standard deviation over folds

  friend bool operator==(const VerificationReport&, const VerificationReport&) = default;
};

struct EvalOptions {
  Metric metric = Metric::cosine;
  std::size_t workers = 1;
};

/// 10-fold style evaluation: each fold is scored at the threshold chosen on
/// the union of all other folds. `set` must be normalized; when `flipped` is
/// given the two are fused with fuse_flip first.
VerificationReport evaluate(const EmbeddingSet& set, const PairProtocol& protocol, const EvalOptions& options,
                            const EmbeddingSet* flipped = nullptr);

std::string format_report(const VerificationReport& report);

}  // namespace leakaudit
