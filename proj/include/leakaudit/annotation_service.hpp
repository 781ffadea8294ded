#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "leakaudit/annotation_record.hpp"
#include "leakaudit/matcher.hpp"
#include "leakaudit/overlap.hpp"

namespace leakaudit {

struct VerdictLogContents {
  std::vector<AnnotationRecord> records;  // file order
  std::size_t discarded_partial = 0;      // unterminated final line
  std::size_t discarded_malformed = 0;    // terminated but unparseable lines
};

// Missing file reads as empty.
VerdictLogContents read_verdict_log(const std::filesystem::path& path);

/// Append-only verdict file with a single writer. Opening drops an
/// unterminated tail left by a crash; every append is fsync'ed before
/// append() returns.
class VerdictLog {
 public:
  explicit VerdictLog(std::filesystem::path path);
  ~VerdictLog();
  VerdictLog(const VerdictLog&) = delete;
  VerdictLog& operator=(const VerdictLog&) = delete;

  const VerdictLogContents& recovered() const noexcept { return recovered_; }
  void append(const AnnotationRecord& record);

 private:
  std::filesystem::path path_;
  int fd_ = -1;
  VerdictLogContents recovered_;
};

struct QueueFilter {
  double band_low = -1.0;
  double band_high = 1.0;
  bool unannotated_only = true;

  bool in_band(double similarity) const noexcept { return similarity >= band_low && similarity <= band_high; }
};

struct PairDescriptor {
  std::string pair_id;
  std::string probe_id;
  std::string gallery_id;
  std::string gallery_label;
  std::uint32_t rank = 0;
  double similarity = 0.0;
  std::string probe_image;    // service route, e.g. /images/lfw/<probe_id>
  std::string gallery_image;
  bool review_band = false;   // inside [review_low, review_high]
  bool high_similarity = false;
  bool low_similarity = false;
  std::optional<AnnotationRecord> current;
};

struct Progress {
  std::size_t annotated = 0;
  std::size_t total = 0;
  std::map<std::string, std::size_t> per_verdict;  // same / different / unsure
};

enum class AckStatus { recorded, unknown_pair, rule_violation };

struct Ack {
  AckStatus status = AckStatus::recorded;
  std::string message;
};

struct SessionConfig {
  std::string probe_dataset = "probe";
  std::string gallery_dataset = "gallery";
  ThresholdPolicy policy;
  QueueFilter default_filter;
};

/// The human review queue over one match file. The queue universe is every
/// pair in the match file; queues are ordered by descending similarity, match
/// file order breaking ties. Reads may run concurrently; verdict writes are
/// serialized and acknowledged only after they reach the disk.
class AnnotationSession {
 public:
  AnnotationSession(std::vector<MatchResult> matches, const std::filesystem::path& verdict_file,
                    SessionConfig config);

  const SessionConfig& config() const noexcept { return config_; }
  const VerdictLogContents& recovery() const noexcept { return log_.recovered(); }

  std::vector<PairDescriptor> queue(const QueueFilter& filter) const;
  std::optional<PairDescriptor> next_pair(const QueueFilter& filter) const;
  std::optional<PairDescriptor> next_pair() const { return next_pair(config_.default_filter); }

  Ack record_verdict(const AnnotationRecord& record);

  // total = pairs inside the filter band; annotated = those with a verdict.
  Progress progress(const QueueFilter& filter) const;
  Progress progress() const { return progress(config_.default_filter); }

  std::optional<AnnotationRecord> effective(const std::string& pair_id) const;

 private:
  struct Effective {
    std::int64_t micros;
    AnnotationRecord record;
  };

  PairDescriptor describe(std::size_t index) const;
  void apply(const AnnotationRecord& record);

  std::vector<MatchResult> matches_;
  std::vector<std::size_t> order_;  // indices by descending similarity
  std::unordered_map<std::string, std::size_t> by_pair_;
  SessionConfig config_;
  VerdictLog log_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, Effective> state_;
};

std::unique_ptr<AnnotationSession> open_session(const std::filesystem::path& match_file,
                                                const std::filesystem::path& verdict_file, SessionConfig config);

struct ServerConfig {
  // dataset_id -> directory holding that dataset's images by image_id.
  std::map<std::string, std::filesystem::path> image_roots;
};

/// HTTP front end over an AnnotationSession:
///   GET  /api/queue/next?band=LO,HI&unannotated=true  -> descriptor | 204
///   POST /api/verdict                                  -> 201 | 404 | 409
///   GET  /api/progress[?band=LO,HI]
///   GET  /images/{dataset_id}/{image_id}
class AnnotationServer {
 public:
  AnnotationServer(AnnotationSession& session, ServerConfig config);
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  // Binds; port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  // Blocks serving until stop().
  bool serve();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string descriptor_json(const PairDescriptor& descriptor);
std::string progress_json(const Progress& progress);

}  // namespace leakaudit
