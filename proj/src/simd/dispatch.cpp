#include <cstdlib>

#include <fmt/format.h>

#include "leakaudit/error.hpp"
#include "leakaudit/simd/kernels.hpp"

namespace leakaudit::simd {

namespace {

constexpr DotKernels kScalar{Isa::scalar, &dot_scalar, &dot_rows_scalar};
#if defined(LEAKAUDIT_HAVE_AVX2)
constexpr DotKernels kAvx2{Isa::avx2, &dot_avx2, &dot_rows_avx2};
#endif
#if defined(LEAKAUDIT_HAVE_NEON)
constexpr DotKernels kNeon{Isa::neon, &dot_neon, &dot_rows_neon};
#endif

const DotKernels& select_default() {
  if (const char* forced = std::getenv("LEAKAUDIT_ISA"); forced != nullptr && *forced != '\0') {
    const auto isa = parse_isa(forced);
    if (!isa) throw_usage(fmt::format("LEAKAUDIT_ISA: unknown ISA '{}'", forced));
    return kernels_for(*isa);
  }
  const auto isas = available_isas();
  return kernels_for(isas.back());
}

}  // namespace

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(LEAKAUDIT_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::neon:
#if defined(LEAKAUDIT_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

std::vector<Isa> available_isas() {
  std::vector<Isa> isas;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
    if (isa_available(isa)) isas.push_back(isa);
  }
  return isas;
}

const DotKernels& kernels_for(Isa isa) {
  if (!isa_available(isa)) throw_usage(fmt::format("ISA '{}' is not available on this build/CPU", isa_name(isa)));
  switch (isa) {
#if defined(LEAKAUDIT_HAVE_AVX2)
    case Isa::avx2:
      return kAvx2;
#endif
#if defined(LEAKAUDIT_HAVE_NEON)
    case Isa::neon:
      return kNeon;
#endif
    default:
      return kScalar;
  }
}

const DotKernels& default_kernels() {
  static const DotKernels& chosen = select_default();
  return chosen;
}

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

std::optional<Isa> parse_isa(std::string_view name) noexcept {
  if (name == "scalar") return Isa::scalar;
  if (name == "avx2") return Isa::avx2;
  if (name == "neon") return Isa::neon;
  return std::nullopt;
}

}  // namespace leakaudit::simd
