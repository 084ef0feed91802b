#include "cpx/rng.hpp"

#include <cmath>
#include <numbers>

namespace cpx::rng {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

Block draw(std::uint64_t seed, std::uint32_t stream, Role role, std::uint64_t index) {
    const Block ctr{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), stream,
                    static_cast<std::uint32_t>(role)};
    return philox4x32(ctr, {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
}

}  // namespace

Block philox4x32(Block c, std::array<std::uint32_t, 2> k) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, c[0], hi0, lo0);
        mulhilo(kMul1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return c;
}

double uniform(std::uint64_t seed, std::uint32_t stream, Role role, std::uint64_t index, int which) {
    const Block b = draw(seed, stream, role, index);
    return which == 0 ? to_open_unit(b[0], b[1]) : to_open_unit(b[2], b[3]);
}

double normal(std::uint64_t seed, std::uint32_t stream, Role role, std::uint64_t index) {
    const Block b = draw(seed, stream, role, index);
    const double u1 = to_open_unit(b[0], b[1]);
    const double u2 = to_open_unit(b[2], b[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace cpx::rng
