#include "byzagg/rng.hpp"

#include <cmath>
#include <numbers>

namespace byzagg {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

} // namespace

RngState RngState::substream(std::uint64_t tag) const {
    return RngState{seed, mix64(stream + kGolden * (tag + 1))};
}

RngState RngState::substream(std::uint64_t tag_a, std::uint64_t tag_b) const {
    return substream(tag_a).substream(tag_b);
}

CounterRng::CounterRng(RngState state)
    : key_(mix64(state.seed + kGolden) ^ mix64(state.stream)) {}

std::uint64_t CounterRng::next_u64() {
    return mix64(key_ + kGolden * ++counter_);
}

double CounterRng::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t CounterRng::next_below(std::uint64_t bound) {
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t draw;
    do {
        draw = next_u64();
    } while (draw >= limit);
    return draw % bound;
}

double CounterRng::next_gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = next_unit();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

} // namespace byzagg
