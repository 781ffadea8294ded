#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace leakaudit {

/// Exact decimal percentage in thousandths of a point (99.78 -> 99780).
/// Published tables carry two decimals; the third holds exact half-sums.
class Percent {
 public:
  constexpr Percent() = default;
  static constexpr Percent from_milli(std::int64_t milli) { return Percent(milli); }
  // Up to three decimals, e.g. "99.78". Throws Error(data).
  static Percent parse(std::string_view text);

  constexpr std::int64_t milli() const noexcept { return milli_; }
  double to_double() const noexcept { return static_cast<double>(milli_) / 1000.0; }
  // Rounded half away from zero to `decimals` (0..3) places.
  std::string to_string(int decimals) const;

  friend constexpr Percent operator+(Percent a, Percent b) { return Percent(a.milli_ + b.milli_); }
  friend constexpr Percent operator-(Percent a, Percent b) { return Percent(a.milli_ - b.milli_); }
  friend constexpr auto operator<=>(Percent, Percent) = default;

 private:
  constexpr explicit Percent(std::int64_t milli) : milli_(milli) {}
  std::int64_t milli_ = 0;
};

// (a + b) / 2, exact for two-decimal inputs; otherwise half away from zero.
Percent midpoint(Percent a, Percent b);
// Arithmetic mean rounded half away from zero to two decimals.
Percent mean_hundredths(std::span<const Percent> values);

struct AccuracyRecord {
  std::string method;
  std::string variant;  // "ID-Disjoint", "ID-Overlap-R", "ID-Overlap-C" or free-form
  std::string test_set;
  Percent accuracy;
};

// `method,variant,test_set,accuracy`; an optional header line starting with
// "method," is skipped. Variant aliases (disjoint, overlap-c, ...) are
// normalized. Duplicate (method, variant, test set) keys are errors.
std::vector<AccuracyRecord> parse_records(std::string_view text);
std::vector<AccuracyRecord> load_records(const std::filesystem::path& path);

struct BiasCell {
  std::string test_set;
  Percent overlap_c;
  Percent disjoint;
  Percent importance;  // overlap_c - disjoint
  Percent difficulty;  // (overlap_c + disjoint) / 2
};

struct MethodBias {
  std::string method;
  std::vector<BiasCell> cells;  // test-set name order
  Percent avg_overlap_c;        // two-decimal means
  Percent avg_disjoint;
  Percent bias;  // avg_overlap_c - avg_disjoint
};

struct BiasReport {
  std::vector<MethodBias> methods;  // method name order
  // Per test set, two-decimal means over methods; `bias` row as above.
  MethodBias across_methods;
};

/// Optimistic-bias ledger from ID-Overlap-C / ID-Disjoint records. Records of
/// other variants are ignored; a (method, test set) with only one of the two
/// variants is an error naming the hole. Independent of record order.
BiasReport compute_bias(std::span<const AccuracyRecord> records);

struct CurvePoint {
  std::string test_set;
  Percent difficulty;
  Percent importance;
};

// Per method, one point per test set sorted by ascending difficulty.
std::map<std::string, std::vector<CurvePoint>> importance_curve(const BiasReport& report);

std::string format_bias_ledger(const BiasReport& report);
// `method,test_set,difficulty,importance` with a header line.
std::string format_curve_series(const std::map<std::string, std::vector<CurvePoint>>& curves);

}  // namespace leakaudit
