#include "byzagg/secure_agg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace byzagg {

namespace {

FieldElem mod_add(FieldElem a, FieldElem b, FieldElem q) {
    // a, b < q < 2^62, so the sum fits in 64 bits.
    const FieldElem s = a + b;
    return s >= q ? s - q : s;
}

FieldElem mod_neg(FieldElem a, FieldElem q) {
    return a == 0 ? 0 : q - a;
}

void validate(const SecureAggConfig& cfg) {
    if (cfg.modulus < 2) throw std::invalid_argument("secure_agg: modulus must be >= 2");
    if (cfg.levels < 2 || cfg.levels >= cfg.modulus) {
        throw std::invalid_argument("secure_agg: levels must be in [2, modulus)");
    }
    if (!(cfg.clip > 0.0)) throw std::invalid_argument("secure_agg: clip must be > 0");
}

} // namespace

double default_clip(double sigma, double eta_t, std::size_t d) {
    return 3.0 * sigma * std::abs(eta_t) * std::sqrt(static_cast<double>(d));
}

void check_capacity(const SecureAggConfig& cfg, std::size_t bucket_size) {
    validate(cfg);
    if (bucket_size == 0) throw std::invalid_argument("secure_agg: empty bucket");
    const long double max_sum = static_cast<long double>(cfg.levels) *
                                static_cast<long double>(bucket_size);
    if (max_sum >= static_cast<long double>(cfg.modulus)) {
        throw std::invalid_argument(
            "secure_agg: levels * bucket_size reaches the modulus; sums would wrap");
    }
}

FieldVector quantize(const SecureAggConfig& cfg, const ParamVector& v, RngState rng) {
    validate(cfg);
    require_finite(v, "quantize");
    const double span = 2.0 * cfg.clip;
    const double top = static_cast<double>(cfg.levels - 1);
    CounterRng gen(rng.substream(0x71726e64u));
    FieldVector codes(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double x = std::clamp(v[i], -cfg.clip, cfg.clip);
        const double pos = (x + cfg.clip) / span * top;
        double code;
        if (cfg.stochastic_rounding) {
            const double lo = std::floor(pos);
            code = lo + ((gen.next_unit() < pos - lo) ? 1.0 : 0.0);
        } else {
            code = std::nearbyint(pos);
        }
        code = std::clamp(code, 0.0, top);
        codes[i] = static_cast<FieldElem>(code);
    }
    return codes;
}

ParamVector dequantize(const SecureAggConfig& cfg, const FieldVector& codes) {
    validate(cfg);
    const double step = 2.0 * cfg.clip / static_cast<double>(cfg.levels - 1);
    ParamVector out(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) {
        out[i] = static_cast<double>(codes[i]) * step - cfg.clip;
    }
    return out;
}

std::vector<MaskShare> gen_masks(const std::vector<std::size_t>& members, std::size_t d,
                                 FieldElem modulus, RngState rng) {
    std::vector<MaskShare> shares;
    for (std::size_t a = 0; a < members.size(); ++a) {
        for (std::size_t b = a + 1; b < members.size(); ++b) {
            MaskShare share;
            share.i = members[a];
            share.j = members[b];
            CounterRng gen(rng.substream(share.i, share.j));
            share.mask.resize(d);
            for (std::size_t c = 0; c < d; ++c) {
                share.mask[c] = static_cast<FieldElem>(gen.next_below(modulus));
            }
            shares.push_back(std::move(share));
        }
    }
    return shares;
}

FieldVector masked_upload(std::size_t member, const FieldVector& quantized,
                          const std::vector<MaskShare>& shares, FieldElem modulus) {
    FieldVector out = quantized;
    for (const MaskShare& share : shares) {
        if (share.i != member && share.j != member) continue;
        if (share.mask.size() != out.size()) {
            throw std::invalid_argument("masked_upload: mask dimension mismatch");
        }
        for (std::size_t c = 0; c < out.size(); ++c) {
            const FieldElem u = (share.i == member) ? share.mask[c]
                                                    : mod_neg(share.mask[c], modulus);
            out[c] = mod_add(out[c], u, modulus);
        }
    }
    return out;
}

ParamVector bucket_sum_and_dequantize(const SecureAggConfig& cfg,
                                      const std::vector<FieldVector>& uploads,
                                      std::size_t bucket_size) {
    check_capacity(cfg, bucket_size);
    if (uploads.empty()) throw std::invalid_argument("bucket_sum_and_dequantize: no uploads");
    const std::size_t d = uploads.front().size();
    FieldVector sum(d, 0);
    for (const FieldVector& up : uploads) {
        if (up.size() != d) {
            throw std::invalid_argument("bucket_sum_and_dequantize: ragged uploads");
        }
        for (std::size_t c = 0; c < d; ++c) sum[c] = mod_add(sum[c], up[c], cfg.modulus);
    }
    const double step = 2.0 * cfg.clip / static_cast<double>(cfg.levels - 1);
    const double size = static_cast<double>(bucket_size);
    ParamVector out(d);
    for (std::size_t c = 0; c < d; ++c) {
        out[c] = (static_cast<double>(sum[c]) * step - size * cfg.clip) / size;
    }
    return out;
}

SecureAggTranscript run_bucket(const SecureAggConfig& cfg, std::size_t bucket_id,
                               const std::vector<std::size_t>& members,
                               const SampleMatrix& updates, RngState rng) {
    check_capacity(cfg, members.size());
    SecureAggTranscript transcript;
    transcript.bucket_id = bucket_id;

    const auto shares = gen_masks(members, updates.dim, cfg.modulus,
                                  rng.substream(0x6d61736bu, bucket_id));
    for (std::size_t idx = 0; idx < members.size(); ++idx) {
        const std::size_t member = members[idx];
        if (member >= updates.row_count) {
            throw std::invalid_argument("run_bucket: member index out of range");
        }
        FieldVector codes = quantize(cfg, updates.row_copy(member),
                                     rng.substream(0x71636c74u, member));
        transcript.masked_uploads.push_back(
            masked_upload(member, codes, shares, cfg.modulus));
        transcript.quantized_plain.push_back(std::move(codes));
    }
    const std::size_t d = updates.dim;
    transcript.bucket_sum.assign(d, 0);
    for (const FieldVector& up : transcript.masked_uploads) {
        for (std::size_t c = 0; c < d; ++c) {
            transcript.bucket_sum[c] = mod_add(transcript.bucket_sum[c], up[c], cfg.modulus);
        }
    }
    return transcript;
}

} // namespace byzagg
