#include "leakaudit/embedding_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "leakaudit/error.hpp"
#include "leakaudit/text_io.hpp"

namespace leakaudit {

namespace {

template <typename T>
T read_le(const unsigned char* p) {
  T value{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(p[i]) << (8 * i);
  }
  return value;
}

template <typename T>
void append_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
}

float float_from_le(const unsigned char* p) {
  return std::bit_cast<float>(read_le<std::uint32_t>(p));
}

// Row scaled by 1/max|x| then 1/norm, computed in double.
bool normalize_row(std::span<const double> row, std::span<float> out) {
  double max_abs = 0.0;
  for (double x : row) max_abs = std::max(max_abs, std::fabs(x));
  if (max_abs == 0.0) return false;
  double sum_sq = 0.0;
  for (double x : row) {
    const double w = x / max_abs;
    sum_sq += w * w;
  }
  const double norm = std::sqrt(sum_sq);
  for (std::size_t i = 0; i < row.size(); ++i) {
    out[i] = static_cast<float>((row[i] / max_abs) / norm);
  }
  return true;
}

}  // namespace

void EmbeddingSet::validate() const {
  if (dim == 0) throw_data(fmt::format("dataset '{}': dim must be positive", dataset_id));
  if (identity_labels.size() != image_ids.size()) {
    throw_data(fmt::format("dataset '{}': {} image ids but {} labels", dataset_id, image_ids.size(),
                           identity_labels.size()));
  }
  if (vectors.size() != image_ids.size() * dim) {
    throw_data(fmt::format("dataset '{}': {} floats for {} records of dim {}", dataset_id, vectors.size(),
                           image_ids.size(), dim));
  }
  IdIndex seen;
  seen.reserve(image_ids.size());
  for (std::size_t i = 0; i < image_ids.size(); ++i) {
    if (image_ids[i].empty()) throw_data(fmt::format("record {}: empty image_id", i));
    if (identity_labels[i].empty()) {
      throw_data(fmt::format("record {} ('{}'): empty identity label", i, image_ids[i]));
    }
    auto [it, inserted] = seen.emplace(image_ids[i], i);
    if (!inserted) {
      throw_data(fmt::format("record {}: duplicate image_id '{}' (first at record {})", i, image_ids[i],
                             it->second));
    }
    for (float x : row(i)) {
      if (!std::isfinite(x)) {
        throw_data(fmt::format("record {} ('{}'): non-finite component", i, image_ids[i]));
      }
    }
  }
}

bool EmbeddingSet::is_normalized(double tolerance) const {
  for (std::size_t i = 0; i < count(); ++i) {
    double sum_sq = 0.0;
    for (float x : row(i)) sum_sq += static_cast<double>(x) * x;
    if (std::fabs(std::sqrt(sum_sq) - 1.0) > tolerance) return false;
  }
  return true;
}

IdIndex index_by_id(const EmbeddingSet& set) {
  IdIndex index;
  index.reserve(set.count());
  for (std::size_t i = 0; i < set.count(); ++i) index.emplace(set.image_ids[i], i);
  return index;
}

std::filesystem::path blob_path_for(const std::filesystem::path& stem) {
  auto p = stem;
  p += ".emb";
  return p;
}

std::filesystem::path sidecar_path_for(const std::filesystem::path& stem) {
  auto p = stem;
  p += ".tsv";
  return p;
}

EmbeddingSet load_embeddings(const std::filesystem::path& blob_path,
                             const std::filesystem::path& sidecar_path) {
  EmbeddingSet set;

  const auto lines = read_lines(sidecar_path);
  if (lines.empty()) throw_data(fmt::format("sidecar '{}' is empty", sidecar_path.string()));
  const auto header = split_tabs(lines[0]);
  if (header.size() != 3) {
    throw_data(fmt::format("sidecar '{}': header must be dataset_id<TAB>dim<TAB>count", sidecar_path.string()));
  }
  set.dataset_id = std::string(header[0]);
  set.dim = parse_u64(header[1], "sidecar dim");
  const std::uint64_t sidecar_count = parse_u64(header[2], "sidecar count");
  if (set.dim == 0) throw_data(fmt::format("sidecar '{}': dim must be positive", sidecar_path.string()));

  std::size_t n_records = lines.size() - 1;
  // A single trailing empty line is the normal end-of-file newline artefact.
  while (n_records > 0 && lines[n_records].empty()) --n_records;
  if (n_records != sidecar_count) {
    throw_data(fmt::format("sidecar '{}': header count {} but {} records", sidecar_path.string(), sidecar_count,
                           n_records));
  }
  set.image_ids.reserve(n_records);
  set.identity_labels.reserve(n_records);
  for (std::size_t i = 0; i < n_records; ++i) {
    const auto fields = split_tabs(lines[i + 1]);
    if (fields.size() != 2) {
      throw_data(fmt::format("sidecar '{}': record {} must be image_id<TAB>identity_label", sidecar_path.string(), i));
    }
    set.image_ids.emplace_back(fields[0]);
    set.identity_labels.emplace_back(fields[1]);
  }

  const std::string blob = read_file(blob_path);
  const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
  if (blob.size() < kBlobHeaderBytes || std::memcmp(bytes, "EMB1", 4) != 0) {
    throw_data(fmt::format("blob '{}': missing EMB1 magic", blob_path.string()));
  }
  const auto version = read_le<std::uint32_t>(bytes + 4);
  if (version != kBlobVersion) {
    throw_data(fmt::format("blob '{}': unsupported version {}", blob_path.string(), version));
  }
  const auto blob_dim = read_le<std::uint32_t>(bytes + 8);
  const auto blob_count = read_le<std::uint64_t>(bytes + 12);
  if (blob_dim != set.dim || blob_count != sidecar_count) {
    throw_data(fmt::format("blob '{}' is {}x{} but sidecar is {}x{}", blob_path.string(), blob_count, blob_dim,
                           sidecar_count, set.dim));
  }
  const std::size_t payload = blob.size() - kBlobHeaderBytes;
  const std::size_t row_bytes = std::size_t{blob_dim} * 4;
  if (payload % row_bytes != 0 || payload / row_bytes != blob_count) {
    throw_data(fmt::format("blob '{}': payload is {} bytes, expected {} rows of {} bytes", blob_path.string(),
                           payload, blob_count, row_bytes));
  }
  set.vectors.resize(blob_count * blob_dim);
  const unsigned char* p = bytes + kBlobHeaderBytes;
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(set.vectors.data(), p, payload);
  } else {
    for (std::size_t i = 0; i < set.vectors.size(); ++i) set.vectors[i] = float_from_le(p + 4 * i);
  }

  set.validate();
  return set;
}

void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& blob_path,
                      const std::filesystem::path& sidecar_path) {
  set.validate();
  std::string blob;
  blob.reserve(kBlobHeaderBytes + set.vectors.size() * 4);
  blob.append("EMB1");
  append_le<std::uint32_t>(blob, kBlobVersion);
  append_le<std::uint32_t>(blob, static_cast<std::uint32_t>(set.dim));
  append_le<std::uint64_t>(blob, set.count());
  for (float x : set.vectors) append_le<std::uint32_t>(blob, std::bit_cast<std::uint32_t>(x));
  write_file_atomic(blob_path, blob);

  std::string sidecar = fmt::format("{}\t{}\t{}\n", set.dataset_id, set.dim, set.count());
  for (std::size_t i = 0; i < set.count(); ++i) {
    sidecar += set.image_ids[i];
    sidecar += '\t';
    sidecar += set.identity_labels[i];
    sidecar += '\n';
  }
  write_file_atomic(sidecar_path, sidecar);
}

EmbeddingSet l2_normalize(const EmbeddingSet& set) {
  EmbeddingSet out = set;
  std::vector<double> row(set.dim);
  for (std::size_t i = 0; i < set.count(); ++i) {
    const auto src = set.row(i);
    std::copy(src.begin(), src.end(), row.begin());
    if (!normalize_row(row, {out.vectors.data() + i * set.dim, set.dim})) {
      throw_data(fmt::format("zero-norm embedding for image '{}'", set.image_ids[i]));
    }
  }
  return out;
}

EmbeddingSet fuse_flip(const EmbeddingSet& original, const EmbeddingSet& flipped) {
  if (original.dim != flipped.dim) {
    throw_data(fmt::format("fuse_flip: dim {} vs {}", original.dim, flipped.dim));
  }
  if (original.count() != flipped.count()) {
    throw_data(fmt::format("fuse_flip: {} original records vs {} flipped", original.count(), flipped.count()));
  }
  for (std::size_t i = 0; i < original.count(); ++i) {
    if (original.image_ids[i] != flipped.image_ids[i]) {
      throw_data(fmt::format("fuse_flip: record {} is '{}' in original but '{}' in flipped", i,
                             original.image_ids[i], flipped.image_ids[i]));
    }
  }
  EmbeddingSet out = original;
  std::vector<double> sum(original.dim);
  for (std::size_t i = 0; i < original.count(); ++i) {
    const auto a = original.row(i);
    const auto b = flipped.row(i);
    for (std::size_t j = 0; j < original.dim; ++j) sum[j] = static_cast<double>(a[j]) + b[j];
    if (!normalize_row(sum, {out.vectors.data() + i * original.dim, original.dim})) {
      throw_data(fmt::format("fuse_flip: original and flipped embeddings of '{}' sum to zero",
                             original.image_ids[i]));
    }
  }
  return out;
}

}  // namespace leakaudit
