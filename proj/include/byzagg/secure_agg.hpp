#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "byzagg/rng.hpp"
#include "byzagg/types.hpp"

namespace byzagg {

using FieldElem = std::uint64_t;
using FieldVector = std::vector<FieldElem>;

inline constexpr FieldElem kDefaultModulus = (1ULL << 61) - 1; // Mersenne prime
inline constexpr std::uint64_t kDefaultLevels = 1ULL << 16;

struct SecureAggConfig {
    FieldElem modulus{kDefaultModulus};
    std::uint64_t levels{kDefaultLevels};
    double clip{1.0};              // coordinates clipped to [-clip, clip]
    bool stochastic_rounding{false};
};

// Clip 3 * sigma * eta_t * sqrt(d), sized so honest updates rarely saturate.
double default_clip(double sigma, double eta_t, std::size_t d);

struct MaskShare {
    std::size_t i{0}; // i < j, client indices within the bucket
    std::size_t j{0};
    FieldVector mask; // u_ij; u_ji is the field negation
};

struct SecureAggTranscript {
    std::size_t bucket_id{0};
    std::vector<FieldVector> quantized_plain; // retained for audit only
    std::vector<FieldVector> masked_uploads;
    FieldVector bucket_sum;
};

// Guard against wraparound of the true (unmasked) sum.
void check_capacity(const SecureAggConfig& cfg, std::size_t bucket_size);

FieldVector quantize(const SecureAggConfig& cfg, const ParamVector& v, RngState rng = {});
ParamVector dequantize(const SecureAggConfig& cfg, const FieldVector& codes);

std::vector<MaskShare> gen_masks(const std::vector<std::size_t>& members, std::size_t d,
                                 FieldElem modulus, RngState rng);

FieldVector masked_upload(std::size_t member, const FieldVector& quantized,
                          const std::vector<MaskShare>& shares, FieldElem modulus);

// Field-sum the uploads (masks cancel), then invert the affine code map and
// divide by the bucket size.
ParamVector bucket_sum_and_dequantize(const SecureAggConfig& cfg,
                                      const std::vector<FieldVector>& uploads,
                                      std::size_t bucket_size);

// Full in-bucket protocol round; the returned transcript's bucket_sum is the
// only value the server-side path may consume.
SecureAggTranscript run_bucket(const SecureAggConfig& cfg, std::size_t bucket_id,
                               const std::vector<std::size_t>& members,
                               const SampleMatrix& updates, RngState rng);

} // namespace byzagg
