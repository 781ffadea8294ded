#include "leakaudit/annotation_record.hpp"

#include <chrono>
#include <charconv>

#include <fmt/format.h>

#include "leakaudit/text_io.hpp"

namespace leakaudit {

namespace {

bool read_digits(std::string_view text, std::size_t pos, std::size_t n, int& out) {
  if (pos + n > text.size()) return false;
  int value = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (text[i] < '0' || text[i] > '9') return false;
    value = value * 10 + (text[i] - '0');
  }
  out = value;
  return true;
}

}  // namespace

std::string_view verdict_name(Verdict v) noexcept {
  switch (v) {
    case Verdict::same:
      return "same";
    case Verdict::different:
      return "different";
    case Verdict::unsure:
      return "unsure";
  }
  return "unsure";
}

std::optional<Verdict> parse_verdict(std::string_view name) noexcept {
  if (name == "same") return Verdict::same;
  if (name == "different") return Verdict::different;
  if (name == "unsure") return Verdict::unsure;
  return std::nullopt;
}

std::string make_pair_id(std::string_view probe_id, std::string_view gallery_id) {
  std::string id;
  id.reserve(probe_id.size() + gallery_id.size() + 1);
  id.append(probe_id);
  id.push_back('|');
  id.append(gallery_id);
  return id;
}

std::optional<std::string> AnnotationRecord::rule_violation() const {
  if (pair_id.empty()) return "pair_id is empty";
  if (duplicate && verdict != Verdict::same) return "duplicate=true requires verdict=same";
  if (!parse_utc_timestamp(timestamp)) return fmt::format("timestamp '{}' is not ISO-8601 UTC", timestamp);
  for (const auto* field : {&pair_id, &annotator}) {
    if (field->find_first_of("\t\n\r") != std::string::npos) return "fields may not contain tabs or newlines";
  }
  return std::nullopt;
}

std::optional<std::int64_t> parse_utc_timestamp(std::string_view t) noexcept {
  int year, month, day, hour, minute, second;
  if (!read_digits(t, 0, 4, year) || t.size() < 20 || t[4] != '-' || !read_digits(t, 5, 2, month) || t[7] != '-' ||
      !read_digits(t, 8, 2, day) || t[10] != 'T' || !read_digits(t, 11, 2, hour) || t[13] != ':' ||
      !read_digits(t, 14, 2, minute) || t[16] != ':' || !read_digits(t, 17, 2, second)) {
    return std::nullopt;
  }
  std::size_t pos = 19;
  std::int64_t micros = 0;
  if (pos < t.size() && t[pos] == '.') {
    ++pos;
    std::size_t digits = 0;
    std::int64_t frac = 0;
    while (pos < t.size() && t[pos] >= '0' && t[pos] <= '9') {
      if (digits < 6) frac = frac * 10 + (t[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0 || digits > 9) return std::nullopt;
    for (std::size_t d = digits; d < 6; ++d) frac *= 10;
    micros = frac;
  }
  const auto zone = t.substr(pos);
  if (zone != "Z" && zone != "+00:00") return std::nullopt;
  if (month < 1 || month > 12 || hour > 23 || minute > 59 || second > 60) return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok()) return std::nullopt;
  const auto days_since = sys_days{ymd}.time_since_epoch().count();
  const std::int64_t seconds = static_cast<std::int64_t>(days_since) * 86400 + hour * 3600 + minute * 60 + second;
  return seconds * 1'000'000 + micros;
}

std::string format_utc_timestamp(std::int64_t micros) {
  using namespace std::chrono;
  std::int64_t secs = micros / 1'000'000;
  std::int64_t frac = micros % 1'000'000;
  if (frac < 0) {
    frac += 1'000'000;
    secs -= 1;
  }
  std::int64_t days = secs / 86400;
  std::int64_t rem = secs % 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:06}Z", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), rem / 3600,
                     (rem / 60) % 60, rem % 60, frac);
}

std::string current_utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(now.time_since_epoch()).count();
  return format_utc_timestamp(micros);
}

std::string format_annotation(const AnnotationRecord& r) {
  return fmt::format("{}\t{}\t{}\t{}\t{}", r.pair_id, verdict_name(r.verdict), r.duplicate ? "true" : "false",
                     r.annotator, r.timestamp);
}

std::optional<AnnotationRecord> parse_annotation(std::string_view line) {
  const auto f = split_tabs(line);
  if (f.size() != 5) return std::nullopt;
  AnnotationRecord r;
  r.pair_id = std::string(f[0]);
  const auto verdict = parse_verdict(f[1]);
  if (!verdict) return std::nullopt;
  r.verdict = *verdict;
  if (f[2] == "true") {
    r.duplicate = true;
  } else if (f[2] != "false") {
    return std::nullopt;
  }
  r.annotator = std::string(f[3]);
  r.timestamp = std::string(f[4]);
  if (r.pair_id.empty() || !parse_utc_timestamp(r.timestamp)) return std::nullopt;
  return r;
}

}  // namespace leakaudit
