#pragma once

#include <cstdint>

namespace byzagg {

// Identifies one deterministic random stream. The same (seed, stream) pair
// reproduces the identical byte sequence on every platform; derived
// substreams let each client, round and shuffle own an independent stream.
struct RngState {
    std::uint64_t seed{0};
    std::uint64_t stream{0};

    [[nodiscard]] RngState substream(std::uint64_t tag) const;
    [[nodiscard]] RngState substream(std::uint64_t tag_a, std::uint64_t tag_b) const;
};

// Counter-based generator: output i is a pure function of (seed, stream, i),
// so replay never depends on how many values other components consumed.
class CounterRng {
public:
    explicit CounterRng(RngState state);

    std::uint64_t next_u64();

    // Uniform in [0, 1).
    double next_unit();

    // Uniform integer in [0, bound), bound >= 1. Rejection sampled, unbiased.
    std::uint64_t next_below(std::uint64_t bound);

    // Standard normal via Box-Muller on the counter stream.
    double next_gaussian();

private:
    std::uint64_t key_;
    std::uint64_t counter_{0};
    bool have_spare_{false};
    double spare_{0.0};
};

} // namespace byzagg
