#pragma once
// Dense double-precision inner-loop kernels with a scalar reference
// implementation and ISA-specific variants chosen at runtime.
//
// Elementwise kernels (axpy, scale, lincomb) round identically in every
// variant. Reductions (dot, gemv) may associate differently and are only
// equivalent to within a few ulps of the scalar result.

#include <cstddef>
#include <string_view>
#include <vector>

namespace cpx::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);

struct KernelTable {
    Isa isa;
    // sum_i x[i] * y[i]
    double (*dot)(const double* x, const double* y, std::size_t n);
    // y += a * x
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // x *= a
    void (*scale)(double a, double* x, std::size_t n);
    // out = a * x + b * y (out may alias x or y)
    void (*lincomb)(double a, const double* x, double b, const double* y, double* out, std::size_t n);
    // y = A x, A row-major rows x cols
    void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
    // y += A^T v, A row-major rows x cols
    void (*gemv_t_acc)(const double* a, std::size_t rows, std::size_t cols, const double* v, double* y);
};

const KernelTable& scalar_table();
#if defined(CPX_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(CPX_HAVE_NEON)
const KernelTable& neon_table();
#endif

/// ISAs compiled in and supported by the running CPU, scalar first.
std::vector<Isa> available_isas();

/// Table for a specific ISA; throws std::invalid_argument when unavailable.
const KernelTable& table_for(Isa isa);

/// The active table. On first use it honours CPX_KERNELS
/// (scalar|avx2|neon|auto) and otherwise picks the widest available ISA.
const KernelTable& active();

/// Overrides the active table for the rest of the process.
void select(Isa isa);

/// Parses "scalar", "avx2", "neon"; throws std::invalid_argument otherwise.
Isa parse_isa(std::string_view name);

}  // namespace cpx::kernels
