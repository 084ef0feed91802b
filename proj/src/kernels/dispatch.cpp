#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "cpx/kernels.hpp"

namespace cpx::kernels {
namespace {

bool cpu_supports(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return true;
        case Isa::avx2:
#if defined(CPX_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Isa::neon:
#if defined(CPX_HAVE_NEON)
            return true;  // mandatory on aarch64
#else
            return false;
#endif
    }
    return false;
}

const KernelTable* pick_initial() {
    if (const char* env = std::getenv("CPX_KERNELS")) {
        std::string_view want{env};
        if (!want.empty() && want != "auto") return &table_for(parse_isa(want));
    }
    return &table_for(available_isas().back());
}

std::atomic<const KernelTable*>& slot() {
    static std::atomic<const KernelTable*> current{pick_initial()};
    return current;
}

}  // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
        case Isa::neon: return "neon";
    }
    return "unknown";
}

Isa parse_isa(std::string_view name) {
    if (name == "scalar") return Isa::scalar;
    if (name == "avx2") return Isa::avx2;
    if (name == "neon") return Isa::neon;
    throw std::invalid_argument("unknown kernel ISA '" + std::string(name) + "'");
}

std::vector<Isa> available_isas() {
    std::vector<Isa> out{Isa::scalar};
    for (Isa isa : {Isa::avx2, Isa::neon}) {
        if (cpu_supports(isa)) out.push_back(isa);
    }
    return out;
}

const KernelTable& table_for(Isa isa) {
    if (!cpu_supports(isa)) {
        throw std::invalid_argument("kernel ISA '" + std::string(isa_name(isa)) + "' is not available");
    }
    switch (isa) {
#if defined(CPX_HAVE_AVX2)
        case Isa::avx2: return avx2_table();
#endif
#if defined(CPX_HAVE_NEON)
        case Isa::neon: return neon_table();
#endif
        default: return scalar_table();
    }
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

void select(Isa isa) { slot().store(&table_for(isa), std::memory_order_release); }

}  // namespace cpx::kernels
