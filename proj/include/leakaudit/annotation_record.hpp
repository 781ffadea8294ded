#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace leakaudit {

enum class Verdict { same, different, unsure };

std::string_view verdict_name(Verdict v) noexcept;
std::optional<Verdict> parse_verdict(std::string_view name) noexcept;

// Stable pair identifier: probe_id + "|" + gallery_id.
std::string make_pair_id(std::string_view probe_id, std::string_view gallery_id);

/// One human verdict as stored in the append-only verdict log.
struct AnnotationRecord {
  std::string pair_id;
  Verdict verdict = Verdict::unsure;
  bool duplicate = false;
  std::string annotator;
  std::string timestamp;  // ISO-8601 UTC, e.g. 2024-03-01T12:00:00Z

  // duplicate=true only with verdict=same; well-formed timestamp; no tabs.
  // Returns the violated rule, or nullopt.
  std::optional<std::string> rule_violation() const;

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

/// Microseconds since the Unix epoch for `YYYY-MM-DDTHH:MM:SS[.f{1,9}]Z`
/// (a `+00:00` suffix is also accepted). nullopt when malformed.
std::optional<std::int64_t> parse_utc_timestamp(std::string_view text) noexcept;

std::string format_utc_timestamp(std::int64_t micros_since_epoch);
std::string current_utc_timestamp();

// `pair_id<TAB>verdict<TAB>duplicate<TAB>annotator<TAB>timestamp` where
// duplicate is `true` or `false`. No trailing newline.
std::string format_annotation(const AnnotationRecord& record);
std::optional<AnnotationRecord> parse_annotation(std::string_view line);

}  // namespace leakaudit
