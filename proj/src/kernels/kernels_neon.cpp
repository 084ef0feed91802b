#include <arm_neon.h>

#include "cpx/kernels.hpp"

namespace cpx::kernels {
namespace {

double dot_neon(const double* x, const double* y, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
    }
    for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

void scale_neon(double a, double* x, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
    for (; i < n; ++i) x[i] = a * x[i];
}

void lincomb_neon(double a, const double* x, double b, const double* y, double* out, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    const float64x2_t vb = vdupq_n_f64(b);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t ax = vmulq_f64(va, vld1q_f64(x + i));
        float64x2_t by = vmulq_f64(vb, vld1q_f64(y + i));
        vst1q_f64(out + i, vaddq_f64(ax, by));
    }
    for (; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void gemv_neon(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
    for (std::size_t r = 0; r < rows; ++r) y[r] = dot_neon(a + r * cols, x, cols);
}

void gemv_t_acc_neon(const double* a, std::size_t rows, std::size_t cols, const double* v, double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        if (v[r] != 0.0) axpy_neon(v[r], a + r * cols, y, cols);
    }
}

}  // namespace

const KernelTable& neon_table() {
    static const KernelTable table{Isa::neon, dot_neon,  axpy_neon,      scale_neon,
                                   lincomb_neon, gemv_neon, gemv_t_acc_neon};
    return table;
}

}  // namespace cpx::kernels
