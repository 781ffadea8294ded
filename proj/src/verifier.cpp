#include "leakaudit/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "leakaudit/error.hpp"
#include "leakaudit/matcher.hpp"
#include "leakaudit/parallel.hpp"
#include "leakaudit/text_io.hpp"

namespace leakaudit {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::vector<std::string_view> non_empty_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(start, nl - start);
    start = nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) lines.push_back(line);
  }
  return lines;
}

// Similarity orientation: larger means more alike for both metrics.
double oriented(Metric metric, double score) { return metric == Metric::cosine ? score : -score; }

}  // namespace

std::size_t PairProtocol::pair_count() const noexcept {
  std::size_t n = 0;
  for (const auto& f : folds) n += f.genuine.size() + f.impostor.size();
  return n;
}

void validate_protocol(const PairProtocol& protocol, const std::optional<ProtocolShape>& shape) {
  if (protocol.folds.empty()) throw_data(fmt::format("protocol '{}' has no folds", protocol.name));
  for (std::size_t i = 0; i < protocol.folds.size(); ++i) {
    const auto& fold = protocol.folds[i];
    if (fold.genuine.empty() || fold.impostor.empty()) {
      throw_data(fmt::format("protocol '{}' fold {} lacks genuine or impostor pairs", protocol.name, i + 1));
    }
    for (const auto* pairs : {&fold.genuine, &fold.impostor}) {
      for (const auto& p : *pairs) {
        if (p.first.empty() || p.second.empty()) {
          throw_data(fmt::format("protocol '{}' fold {}: empty image id", protocol.name, i + 1));
        }
        if (p.first == p.second) {
          throw_data(fmt::format("protocol '{}' fold {}: pair of '{}' with itself", protocol.name, i + 1, p.first));
        }
      }
    }
  }
  if (!shape) return;
  if (protocol.folds.size() != shape->folds) {
    throw_data(fmt::format("protocol '{}' has {} folds, expected {}", protocol.name, protocol.folds.size(),
                           shape->folds));
  }
  for (std::size_t i = 0; i < protocol.folds.size(); ++i) {
    const auto& fold = protocol.folds[i];
    if (fold.genuine.size() != shape->genuine_per_fold || fold.impostor.size() != shape->impostor_per_fold) {
      throw_data(fmt::format("protocol '{}' fold {} has {}+{} pairs, expected {}+{}", protocol.name, i + 1,
                             fold.genuine.size(), fold.impostor.size(), shape->genuine_per_fold,
                             shape->impostor_per_fold));
    }
  }
}

std::string classic_image_id(std::string_view person, std::uint64_t number) {
  return fmt::format("{}/{}_{:04}.jpg", person, person, number);
}

PairProtocol parse_classic_pairs(std::string_view text, std::string name) {
  const auto lines = non_empty_lines(text);
  if (lines.empty()) throw_data("pairs list is empty");
  const auto header = split_ws(lines[0]);
  std::uint64_t n_folds = 1;
  std::uint64_t per_class = 0;
  if (header.size() == 1) {
    per_class = parse_u64(header[0], "pairs per class");
  } else if (header.size() == 2) {
    n_folds = parse_u64(header[0], "fold count");
    per_class = parse_u64(header[1], "pairs per class");
  } else {
    throw_data("pairs list header must be `folds<TAB>n` or `n`");
  }
  if (lines.size() - 1 != n_folds * per_class * 2) {
    throw_data(fmt::format("pairs list header promises {} pairs, found {} lines", n_folds * per_class * 2,
                           lines.size() - 1));
  }
  PairProtocol protocol;
  protocol.name = std::move(name);
  protocol.folds.resize(n_folds);
  std::size_t line = 1;
  for (auto& fold : protocol.folds) {
    for (std::uint64_t g = 0; g < per_class; ++g, ++line) {
      const auto f = split_ws(lines[line]);
      if (f.size() != 3) throw_data(fmt::format("pairs line {}: genuine pair needs `name i j`", line + 1));
      fold.genuine.push_back({classic_image_id(f[0], parse_u64(f[1], "image number")),
                              classic_image_id(f[0], parse_u64(f[2], "image number"))});
    }
    for (std::uint64_t m = 0; m < per_class; ++m, ++line) {
      const auto f = split_ws(lines[line]);
      if (f.size() != 4) throw_data(fmt::format("pairs line {}: impostor pair needs `name1 i name2 j`", line + 1));
      fold.impostor.push_back({classic_image_id(f[0], parse_u64(f[1], "image number")),
                               classic_image_id(f[2], parse_u64(f[3], "image number"))});
    }
  }
  return protocol;
}

PairProtocol parse_protocol_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw_data(fmt::format("protocol JSON: {}", e.what()));
  }
  PairProtocol protocol;
  try {
    protocol.name = doc.value("name", std::string{});
    for (const auto& jf : doc.at("folds")) {
      ProtocolFold fold;
      for (const auto& p : jf.at("genuine")) {
        if (p.size() != 2) throw_data("protocol JSON: pairs must have exactly two ids");
        fold.genuine.push_back({p.at(0).get<std::string>(), p.at(1).get<std::string>()});
      }
      for (const auto& p : jf.at("impostor")) {
        if (p.size() != 2) throw_data("protocol JSON: pairs must have exactly two ids");
        fold.impostor.push_back({p.at(0).get<std::string>(), p.at(1).get<std::string>()});
      }
      protocol.folds.push_back(std::move(fold));
    }
  } catch (const nlohmann::json::exception& e) {
    throw_data(fmt::format("protocol JSON: {}", e.what()));
  }
  return protocol;
}

std::string protocol_json(const PairProtocol& protocol) {
  nlohmann::ordered_json doc;
  doc["name"] = protocol.name;
  auto folds = nlohmann::ordered_json::array();
  for (const auto& fold : protocol.folds) {
    nlohmann::ordered_json jf;
    auto genuine = nlohmann::ordered_json::array();
    for (const auto& p : fold.genuine) genuine.push_back({p.first, p.second});
    auto impostor = nlohmann::ordered_json::array();
    for (const auto& p : fold.impostor) impostor.push_back({p.first, p.second});
    jf["genuine"] = std::move(genuine);
    jf["impostor"] = std::move(impostor);
    folds.push_back(std::move(jf));
  }
  doc["folds"] = std::move(folds);
  return doc.dump(1) + "\n";
}

PairProtocol load_protocol(const std::filesystem::path& path, const ProtocolLoadOptions& options) {
  const std::string text = read_file(path);
  PairProtocol protocol;
  try {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
      protocol = parse_protocol_json(text);
      if (protocol.name.empty()) protocol.name = options.name.empty() ? path.stem().string() : options.name;
    } else {
      protocol = parse_classic_pairs(text, options.name.empty() ? path.stem().string() : options.name);
    }
    validate_protocol(protocol, options.strict ? std::optional(options.shape) : std::nullopt);
  } catch (const Error& e) {
    throw_data(fmt::format("{}: {}", path.string(), e.what()));
  }
  return protocol;
}

std::string_view metric_name(Metric m) noexcept { return m == Metric::cosine ? "cosine" : "euclidean"; }

std::optional<Metric> parse_metric(std::string_view name) noexcept {
  if (name == "cosine") return Metric::cosine;
  if (name == "euclidean") return Metric::euclidean;
  return std::nullopt;
}

std::string_view fusion_name(Fusion f) noexcept { return f == Fusion::original ? "original" : "original+flip"; }

double euclidean_distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw_usage(fmt::format("euclidean_distance: dimension mismatch {} vs {}", a.size(), b.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

std::vector<std::vector<ScoredPair>> pair_scores(const EmbeddingSet& set, const PairProtocol& protocol,
                                                 Metric metric) {
  const auto index = index_by_id(set);
  auto lookup = [&](const std::string& id) {
    const auto it = index.find(id);
    if (it == index.end()) {
      throw_data(fmt::format("protocol '{}' references image '{}' missing from '{}'", protocol.name, id,
                             set.dataset_id));
    }
    return set.row(it->second);
  };
  auto score = [&](const ImagePair& p) {
    const auto a = lookup(p.first);
    const auto b = lookup(p.second);
    return metric == Metric::cosine ? cosine_similarity(a, b) : euclidean_distance(a, b);
  };
  std::vector<std::vector<ScoredPair>> folds;
  folds.reserve(protocol.folds.size());
  for (const auto& fold : protocol.folds) {
    std::vector<ScoredPair> scored;
    scored.reserve(fold.genuine.size() + fold.impostor.size());
    for (const auto& p : fold.genuine) scored.push_back({score(p), true});
    for (const auto& p : fold.impostor) scored.push_back({score(p), false});
    folds.push_back(std::move(scored));
  }
  return folds;
}

bool accepts(Metric metric, double score, double threshold) noexcept {
  return metric == Metric::cosine ? score >= threshold : score <= threshold;
}

double accuracy_at(std::span<const ScoredPair> pairs, Metric metric, double threshold) {
  if (pairs.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& p : pairs) {
    if (accepts(metric, p.score, threshold) == p.genuine) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

ThresholdChoice best_threshold(std::span<const ScoredPair> pairs, Metric metric) {
  struct Item {
    double x;
    bool genuine;
  };
  std::vector<Item> items;
  items.reserve(pairs.size());
  std::size_t n_genuine = 0;
  for (const auto& p : pairs) {
    if (std::isnan(p.score)) throw_data("best_threshold: NaN score");
    items.push_back({oriented(metric, p.score), p.genuine});
    n_genuine += p.genuine ? 1 : 0;
  }
  const std::size_t n = items.size();
  if (n_genuine == 0 || n_genuine == n) throw_data("best_threshold: needs at least one genuine and one impostor score");
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.x < b.x; });

  // Sweep candidates in ascending oriented order. Before any group is
  // rejected every pair is accepted: correct = genuine count.
  std::size_t correct = n_genuine;
  std::size_t best_correct = correct;
  double best_theta = items.front().x - 1.0;
  std::size_t i = 0;
  while (i < n) {
    const double value = items[i].x;
    while (i < n && items[i].x == value) {
      // This group moves from accepted to rejected.
      if (items[i].genuine) {
        --correct;
      } else {
        ++correct;
      }
      ++i;
    }
    double theta;
    if (i < n) {
      theta = value + (items[i].x - value) / 2.0;
      if (!(theta > value)) theta = items[i].x;
    } else {
      theta = value + 1.0;
    }
    if (correct > best_correct) {
      best_correct = correct;
      best_theta = theta;
    }
  }
  const double threshold = metric == Metric::cosine ? best_theta : -best_theta;
  return {threshold, static_cast<double>(best_correct) / static_cast<double>(n)};
}

VerificationReport evaluate(const EmbeddingSet& set, const PairProtocol& protocol, const EvalOptions& options,
                            const EmbeddingSet* flipped) {
  validate_protocol(protocol, std::nullopt);
  if (protocol.folds.size() < 2) throw_data("evaluation needs at least two folds");

  VerificationReport report;
  report.protocol = protocol.name;
  report.metric = options.metric;
  report.fusion = flipped ? Fusion::original_plus_flip : Fusion::original;

  std::vector<std::vector<ScoredPair>> scores;
  if (flipped) {
    scores = pair_scores(fuse_flip(set, *flipped), protocol, options.metric);
  } else {
    if (!set.is_normalized()) throw_usage(fmt::format("embedding set '{}' is not L2-normalized", set.dataset_id));
    scores = pair_scores(set, protocol, options.metric);
  }

  const std::size_t n_folds = scores.size();
  report.fold_accuracy.resize(n_folds);
  report.fold_threshold.resize(n_folds);
  parallel_for(n_folds, options.workers, [&](std::size_t test_fold) {
    std::vector<ScoredPair> validation;
    for (std::size_t f = 0; f < n_folds; ++f) {
      if (f != test_fold) validation.insert(validation.end(), scores[f].begin(), scores[f].end());
    }
    const auto choice = best_threshold(validation, options.metric);
    report.fold_threshold[test_fold] = choice.threshold;
    report.fold_accuracy[test_fold] = accuracy_at(scores[test_fold], options.metric, choice.threshold);
  });

  double sum = 0.0;
  for (double a : report.fold_accuracy) sum += a;
  report.mean_accuracy = sum / static_cast<double>(n_folds);
  double ss = 0.0;
  for (double a : report.fold_accuracy) ss += (a - report.mean_accuracy) * (a - report.mean_accuracy);
  report.stddev = std::sqrt(ss / static_cast<double>(n_folds - 1));
  return report;
}

std::string format_report(const VerificationReport& r) {
  std::string out;
  out += fmt::format("# protocol\t{}\n# metric\t{}\n# fusion\t{}\n", r.protocol, metric_name(r.metric),
                     fusion_name(r.fusion));
  out += "fold\tthreshold\taccuracy\n";
  for (std::size_t i = 0; i < r.fold_accuracy.size(); ++i) {
    out += fmt::format("{}\t{:.9f}\t{:.2f}\n", i + 1, r.fold_threshold[i], 100.0 * r.fold_accuracy[i]);
  }
  out += fmt::format("mean\t{:.2f}\nstd\t{:.2f}\n", 100.0 * r.mean_accuracy, 100.0 * r.stddev);
  return out;
}

}  // namespace leakaudit
