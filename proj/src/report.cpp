#include "leakaudit/report.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "leakaudit/error.hpp"
#include "leakaudit/subset.hpp"
#include "leakaudit/text_io.hpp"

namespace leakaudit {

namespace {

// num / den rounded half away from zero; den > 0.
std::int64_t div_round(std::int64_t num, std::int64_t den) {
  const std::int64_t q = (std::llabs(num) * 2 + den) / (2 * den);
  return num < 0 ? -q : q;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

constexpr std::string_view kOverlapC = "ID-Overlap-C";
constexpr std::string_view kDisjoint = "ID-Disjoint";

}  // namespace

Percent Percent::parse(std::string_view text) {
  const auto t = trim(text);
  const auto dot = t.find('.');
  const auto whole = t.substr(0, dot);
  const auto frac = dot == std::string_view::npos ? std::string_view{} : t.substr(dot + 1);
  if (whole.empty() || frac.size() > 3 || (dot != std::string_view::npos && frac.empty())) {
    throw_data(fmt::format("accuracy '{}' must be a decimal with at most three places", text));
  }
  std::int64_t milli = static_cast<std::int64_t>(parse_u64(whole, "accuracy")) * 1000;
  std::int64_t scale = 100;
  for (char c : frac) {
    if (c < '0' || c > '9') throw_data(fmt::format("accuracy '{}' is not a decimal number", text));
    milli += (c - '0') * scale;
    scale /= 10;
  }
  if (milli > 100'000) throw_data(fmt::format("accuracy '{}' exceeds 100", text));
  return Percent(milli);
}

std::string Percent::to_string(int decimals) const {
  decimals = std::clamp(decimals, 0, 3);
  std::int64_t step = 1;
  for (int d = decimals; d < 3; ++d) step *= 10;
  const std::int64_t units = div_round(milli_, step);
  const std::int64_t mag = std::llabs(units);
  std::int64_t pow10 = 1;
  for (int d = 0; d < decimals; ++d) pow10 *= 10;
  const std::string sign = units < 0 ? "-" : "";
  if (decimals == 0) return fmt::format("{}{}", sign, mag);
  return fmt::format("{}{}.{:0{}}", sign, mag / pow10, mag % pow10, decimals);
}

Percent midpoint(Percent a, Percent b) { return Percent::from_milli(div_round(a.milli() + b.milli(), 2)); }

Percent mean_hundredths(std::span<const Percent> values) {
  if (values.empty()) return {};
  std::int64_t sum = 0;
  for (auto v : values) sum += v.milli();
  return Percent::from_milli(div_round(sum, 10 * static_cast<std::int64_t>(values.size())) * 10);
}

std::vector<AccuracyRecord> parse_records(std::string_view text) {
  std::vector<AccuracyRecord> records;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(start, nl - start);
    start = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    if (line_no == 1 && line.starts_with("method,")) continue;
    const auto f = split_commas(line);
    if (f.size() != 4) throw_data(fmt::format("records line {}: expected method,variant,test_set,accuracy", line_no));
    AccuracyRecord r;
    r.method = std::string(f[0]);
    const auto variant = parse_variant(f[1]);
    r.variant = variant ? std::string(variant_name(*variant)) : std::string(f[1]);
    r.test_set = std::string(f[2]);
    if (r.method.empty() || r.variant.empty() || r.test_set.empty()) {
      throw_data(fmt::format("records line {}: empty field", line_no));
    }
    try {
      r.accuracy = Percent::parse(f[3]);
    } catch (const Error& e) {
      throw_data(fmt::format("records line {}: {}", line_no, e.what()));
    }
    if (!seen.emplace(r.method, r.variant, r.test_set).second) {
      throw_data(fmt::format("records line {}: duplicate record for ({}, {}, {})", line_no, r.method, r.variant,
                             r.test_set));
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<AccuracyRecord> load_records(const std::filesystem::path& path) {
  try {
    return parse_records(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::io) throw;
    throw_data(fmt::format("{}: {}", path.string(), e.what()));
  }
}

BiasReport compute_bias(std::span<const AccuracyRecord> records) {
  // method -> test set -> (overlap_c, disjoint)
  std::map<std::string, std::map<std::string, std::pair<const Percent*, const Percent*>>> table;
  for (const auto& r : records) {
    const bool is_c = r.variant == kOverlapC;
    const bool is_d = r.variant == kDisjoint;
    if (!is_c && !is_d) continue;
    auto& slot = table[r.method][r.test_set];
    auto*& target = is_c ? slot.first : slot.second;
    if (target != nullptr) {
      throw_data(fmt::format("duplicate {} record for ({}, {})", r.variant, r.method, r.test_set));
    }
    target = &r.accuracy;
  }

  BiasReport report;
  std::map<std::string, std::pair<std::vector<Percent>, std::vector<Percent>>> by_test_set;
  for (const auto& [method, sets] : table) {
    MethodBias row;
    row.method = method;
    std::vector<Percent> cs;
    std::vector<Percent> ds;
    for (const auto& [test_set, pair] : sets) {
      if (pair.first == nullptr || pair.second == nullptr) {
        throw_data(fmt::format("({}, {}) has no {} record to pair with", method, test_set,
                               pair.first == nullptr ? kOverlapC : kDisjoint));
      }
      const Percent c = *pair.first;
      const Percent d = *pair.second;
      row.cells.push_back(BiasCell{test_set, c, d, c - d, midpoint(c, d)});
      cs.push_back(c);
      ds.push_back(d);
      by_test_set[test_set].first.push_back(c);
      by_test_set[test_set].second.push_back(d);
    }
    row.avg_overlap_c = mean_hundredths(cs);
    row.avg_disjoint = mean_hundredths(ds);
    row.bias = row.avg_overlap_c - row.avg_disjoint;
    report.methods.push_back(std::move(row));
  }

  auto& all = report.across_methods;
  all.method = "ALL";
  std::vector<Percent> cs;
  std::vector<Percent> ds;
  for (const auto& [test_set, lists] : by_test_set) {
    const Percent c = mean_hundredths(lists.first);
    const Percent d = mean_hundredths(lists.second);
    all.cells.push_back(BiasCell{test_set, c, d, c - d, midpoint(c, d)});
    cs.push_back(c);
    ds.push_back(d);
  }
  all.avg_overlap_c = mean_hundredths(cs);
  all.avg_disjoint = mean_hundredths(ds);
  all.bias = all.avg_overlap_c - all.avg_disjoint;
  return report;
}

std::map<std::string, std::vector<CurvePoint>> importance_curve(const BiasReport& report) {
  std::map<std::string, std::vector<CurvePoint>> curves;
  for (const auto& m : report.methods) {
    auto& points = curves[m.method];
    for (const auto& c : m.cells) points.push_back(CurvePoint{c.test_set, c.difficulty, c.importance});
    std::sort(points.begin(), points.end(), [](const CurvePoint& a, const CurvePoint& b) {
      return std::tie(a.difficulty, a.test_set) < std::tie(b.difficulty, b.test_set);
    });
  }
  return curves;
}

std::string format_bias_ledger(const BiasReport& report) {
  std::string out = "method\ttest_set\toverlap_c\tdisjoint\timportance\tdifficulty\n";
  auto emit = [&out](const MethodBias& m) {
    for (const auto& c : m.cells) {
      out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", m.method, c.test_set, c.overlap_c.to_string(2),
                         c.disjoint.to_string(2), c.importance.to_string(2), c.difficulty.to_string(3));
    }
    out += fmt::format("{}\tAVG\t{}\t{}\t{}\t{}\n", m.method, m.avg_overlap_c.to_string(2),
                       m.avg_disjoint.to_string(2), m.bias.to_string(2),
                       midpoint(m.avg_overlap_c, m.avg_disjoint).to_string(3));
  };
  for (const auto& m : report.methods) emit(m);
  if (!report.methods.empty()) emit(report.across_methods);
  return out;
}

std::string format_curve_series(const std::map<std::string, std::vector<CurvePoint>>& curves) {
  std::string out = "method,test_set,difficulty,importance\n";
  for (const auto& [method, points] : curves) {
    for (const auto& p : points) {
      out += fmt::format("{},{},{},{}\n", method, p.test_set, p.difficulty.to_string(3), p.importance.to_string(2));
    }
  }
  return out;
}

}  // namespace leakaudit
