#pragma once

// Dot-product kernels for the matcher inner loop.
//
// Every variant computes the same canonical sum, so results are
// bit-identical across ISAs:
//   - products are formed in double from float32 inputs (exact: 24+24 bits);
//   - elements [0, dim & ~7) accumulate into 8 lanes, lane j = index mod 8;
//   - lanes fold as m_j = l_j + l_{j+4}, then (m0 + m1) + (m2 + m3);
//   - the tail [dim & ~7, dim) is added sequentially afterwards.

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace leakaudit::simd {

enum class Isa { scalar, avx2, neon };

using DotFn = double (*)(const float* x, const float* y, std::size_t dim);
// out[r] = dot(query, rows + r * dim) for r in [0, n_rows).
using DotRowsFn = void (*)(const float* query, const float* rows, std::size_t n_rows, std::size_t dim,
                           double* out);

struct DotKernels {
  Isa isa;
  DotFn dot;
  DotRowsFn dot_rows;
};

double dot_scalar(const float* x, const float* y, std::size_t dim);
void dot_rows_scalar(const float* query, const float* rows, std::size_t n_rows, std::size_t dim, double* out);

#if defined(LEAKAUDIT_HAVE_AVX2)
double dot_avx2(const float* x, const float* y, std::size_t dim);
void dot_rows_avx2(const float* query, const float* rows, std::size_t n_rows, std::size_t dim, double* out);
#endif

#if defined(LEAKAUDIT_HAVE_NEON)
double dot_neon(const float* x, const float* y, std::size_t dim);
void dot_rows_neon(const float* query, const float* rows, std::size_t n_rows, std::size_t dim, double* out);
#endif

// Compiled in and supported by the running CPU.
bool isa_available(Isa isa) noexcept;
std::vector<Isa> available_isas();

// Throws Error(usage) when the ISA is unavailable.
const DotKernels& kernels_for(Isa isa);

// Best available ISA, unless LEAKAUDIT_ISA=scalar|avx2|neon overrides it.
const DotKernels& default_kernels();

std::string_view isa_name(Isa isa) noexcept;
std::optional<Isa> parse_isa(std::string_view name) noexcept;

}  // namespace leakaudit::simd
