#include "leakaudit/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "leakaudit/error.hpp"
#include "leakaudit/parallel.hpp"
#include "leakaudit/text_io.hpp"

namespace leakaudit {

namespace {

double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

// Fixed-capacity ranked list; entries sorted by similarity descending, then
// gallery index ascending. Candidates must arrive in ascending index order.
class RankedBuffer {
 public:
  explicit RankedBuffer(std::span<Neighbor> storage) : slots_(storage) {}

  void offer(std::size_t gallery_index, double similarity) {
    if (size_ == slots_.size()) {
      // An equal score with a larger index never displaces the tail.
      if (!(similarity > slots_[size_ - 1].similarity)) return;
      --size_;
    }
    std::size_t pos = size_;
    while (pos > 0 && slots_[pos - 1].similarity < similarity) {
      slots_[pos] = slots_[pos - 1];
      --pos;
    }
    slots_[pos] = Neighbor{gallery_index, similarity};
    ++size_;
  }

 private:
  std::span<Neighbor> slots_;
  std::size_t size_ = 0;
};

void check_inputs(const EmbeddingSet& probes, const EmbeddingSet& gallery, std::size_t k) {
  if (probes.dim != gallery.dim) {
    throw_usage(fmt::format("probe dim {} does not match gallery dim {}", probes.dim, gallery.dim));
  }
  if (k == 0) throw_usage("k must be positive");
  if (k > gallery.count()) {
    throw_usage(fmt::format("k = {} exceeds gallery size {}", k, gallery.count()));
  }
  if (!probes.is_normalized()) throw_usage(fmt::format("probe set '{}' is not L2-normalized", probes.dataset_id));
  if (!gallery.is_normalized()) {
    throw_usage(fmt::format("gallery set '{}' is not L2-normalized", gallery.dataset_id));
  }
}

}  // namespace

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw_usage(fmt::format("cosine_similarity: dimension mismatch {} vs {}", a.size(), b.size()));
  }
  return clamp_unit(simd::default_kernels().dot(a.data(), b.data(), a.size()));
}

std::vector<Neighbor> top_k_neighbors(const EmbeddingSet& probes, const EmbeddingSet& gallery,
                                      const MatchOptions& options) {
  check_inputs(probes, gallery, options.k);
  const auto& kern = options.isa ? simd::kernels_for(*options.isa) : simd::default_kernels();

  const std::size_t k = options.k;
  const std::size_t dim = gallery.dim;
  const std::size_t n_gallery = gallery.count();
  const std::size_t block_rows =
      std::clamp<std::size_t>(options.block_bytes / (dim * sizeof(float)), 1, std::max<std::size_t>(n_gallery, 1));
  const std::size_t probe_block = std::max<std::size_t>(1, options.probe_block);
  const std::size_t n_tasks = (probes.count() + probe_block - 1) / probe_block;

  std::vector<Neighbor> result(probes.count() * k);
  parallel_for(n_tasks, options.workers, [&](std::size_t task) {
    const std::size_t p_begin = task * probe_block;
    const std::size_t p_end = std::min(probes.count(), p_begin + probe_block);
    std::vector<RankedBuffer> buffers;
    buffers.reserve(p_end - p_begin);
    for (std::size_t p = p_begin; p < p_end; ++p) {
      buffers.emplace_back(std::span<Neighbor>(result.data() + p * k, k));
    }
    std::vector<double> scores(block_rows);
    for (std::size_t g_begin = 0; g_begin < n_gallery; g_begin += block_rows) {
      const std::size_t rows = std::min(block_rows, n_gallery - g_begin);
      const float* block = gallery.vectors.data() + g_begin * dim;
      for (std::size_t p = p_begin; p < p_end; ++p) {
        kern.dot_rows(probes.vectors.data() + p * dim, block, rows, dim, scores.data());
        auto& buffer = buffers[p - p_begin];
        for (std::size_t r = 0; r < rows; ++r) buffer.offer(g_begin + r, clamp_unit(scores[r]));
      }
    }
  });
  return result;
}

std::vector<MatchResult> top_k(const EmbeddingSet& probes, const EmbeddingSet& gallery,
                               const MatchOptions& options) {
  const auto neighbors = top_k_neighbors(probes, gallery, options);
  std::vector<MatchResult> results;
  results.reserve(neighbors.size());
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    const std::size_t p = i / options.k;
    const auto& n = neighbors[i];
    results.push_back(MatchResult{probes.image_ids[p], static_cast<std::uint32_t>(i % options.k + 1),
                                  gallery.image_ids[n.gallery_index], gallery.identity_labels[n.gallery_index],
                                  n.similarity});
  }
  return results;
}

double Histogram::upper(std::size_t bin) const noexcept {
  return bin + 1 == counts.size() ? 1.0 : lower(bin + 1);
}

std::uint64_t Histogram::total() const noexcept {
  std::uint64_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

Histogram histogram(std::span<const double> scores, double bin_width) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
    throw_usage(fmt::format("bin width must be positive, got {}", bin_width));
  }
  Histogram hist;
  hist.bin_width = bin_width;
  const auto n_bins = static_cast<std::size_t>(std::max(1.0, std::ceil(2.0 / bin_width - 1e-9)));
  hist.counts.assign(n_bins, 0);
  for (double s : scores) {
    // NaN lands in bin 0.
    const double shifted = std::isnan(s) ? 0.0 : clamp_unit(s) + 1.0;
    auto bin = static_cast<std::size_t>(std::floor(shifted / bin_width));
    hist.counts[std::min(bin, n_bins - 1)] += 1;
  }
  return hist;
}

std::vector<double> quantiles(std::span<const double> scores, std::span<const double> probabilities) {
  std::vector<double> out;
  out.reserve(probabilities.size());
  std::vector<double> work(scores.begin(), scores.end());
  for (double p : probabilities) {
    if (!(p >= 0.0 && p <= 1.0)) throw_usage(fmt::format("quantile probability {} outside [0, 1]", p));
    if (work.empty()) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double h = static_cast<double>(work.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(lo), work.end());
    const double x_lo = work[lo];
    double x_hi = x_lo;
    if (lo + 1 < work.size()) {
      x_hi = *std::min_element(work.begin() + static_cast<std::ptrdiff_t>(lo) + 1, work.end());
    }
    out.push_back(x_lo + (h - static_cast<double>(lo)) * (x_hi - x_lo));
  }
  return out;
}

std::string format_histogram(const Histogram& hist, std::span<const double> probabilities,
                             std::span<const double> quantile_values) {
  std::string out = "lower\tupper\tcount\n";
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    out += fmt::format("{:.6f}\t{:.6f}\t{}\n", hist.lower(i), hist.upper(i), hist.counts[i]);
  }
  for (std::size_t i = 0; i < probabilities.size() && i < quantile_values.size(); ++i) {
    out += fmt::format("# quantile\t{:.4f}\t{:.9f}\n", probabilities[i], quantile_values[i]);
  }
  return out;
}

std::string format_matches(std::span<const MatchResult> results) {
  std::string out;
  out.reserve(results.size() * 64);
  for (const auto& r : results) {
    out += fmt::format("{}\t{}\t{}\t{}\t{:.9f}\n", r.probe_id, r.rank, r.gallery_id, r.gallery_label, r.similarity);
  }
  return out;
}

std::vector<MatchResult> parse_matches(std::string_view text) {
  std::vector<MatchResult> results;
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
    const auto f = split_tabs(line);
    if (f.size() != 5) throw_data(fmt::format("match line {}: expected 5 tab-separated fields", line_no));
    MatchResult r;
    r.probe_id = std::string(f[0]);
    const auto rank = parse_u64(f[1], "rank");
    if (rank == 0 || rank > std::numeric_limits<std::uint32_t>::max()) {
      throw_data(fmt::format("match line {}: invalid rank {}", line_no, rank));
    }
    r.rank = static_cast<std::uint32_t>(rank);
    r.gallery_id = std::string(f[2]);
    r.gallery_label = std::string(f[3]);
    r.similarity = parse_double(f[4], "similarity");
    if (!std::isfinite(r.similarity)) throw_data(fmt::format("match line {}: non-finite similarity", line_no));
    results.push_back(std::move(r));
  }
  return results;
}

void write_matches(std::span<const MatchResult> results, const std::filesystem::path& path) {
  write_file_atomic(path, format_matches(results));
}

std::vector<MatchResult> load_matches(const std::filesystem::path& path) {
  try {
    return parse_matches(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::io) throw;
    throw_data(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace leakaudit
