#include "byzagg/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "byzagg/estimators.hpp"

namespace byzagg {

namespace {

SampleMatrix honest_rows(const SampleMatrix& benign,
                         const std::vector<std::size_t>& malicious_ids) {
    std::vector<bool> is_mal(benign.row_count, false);
    for (std::size_t id : malicious_ids) {
        if (id >= benign.row_count) {
            throw std::invalid_argument("apply_attack: malicious id out of range");
        }
        is_mal[id] = true;
    }
    std::size_t honest_count = 0;
    for (std::size_t i = 0; i < benign.row_count; ++i) {
        if (!is_mal[i]) ++honest_count;
    }
    SampleMatrix out(honest_count, benign.dim);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < benign.row_count; ++i) {
        if (!is_mal[i]) out.set_row(pos++, benign.row(i));
    }
    return out;
}

} // namespace

ParamVector ima_row(const SampleMatrix& honest, double strength) {
    if (honest.row_count == 0) return {};
    return scale(mean(honest), -strength);
}

ParamVector tma_row(const SampleMatrix& honest, double margin) {
    const std::size_t d = honest.dim;
    ParamVector out(d, 0.0);
    if (honest.row_count == 0) return out;
    for (std::size_t j = 0; j < d; ++j) {
        double lo = honest.row(0)[j];
        double hi = lo;
        double sum = 0.0;
        for (std::size_t i = 0; i < honest.row_count; ++i) {
            const double v = honest.row(i)[j];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            sum += v;
        }
        const double range = hi - lo;
        const double mean_j = sum / static_cast<double>(honest.row_count);
        // Push past the hull on the side that drags the trimmed mean away
        // from the honest mean's sign.
        out[j] = (mean_j > 0.0) ? lo - margin * range : hi + margin * range;
    }
    return out;
}

ParamVector ka_row(const SampleMatrix& benign, const std::vector<std::size_t>& malicious_ids,
                   std::size_t f) {
    const std::size_t d = benign.dim;
    if (malicious_ids.empty()) return ParamVector(d, 0.0);

    const SampleMatrix honest = honest_rows(benign, malicious_ids);
    ParamVector dir = mean(honest);
    const double norm = l2_norm(dir);
    if (norm > 0.0) {
        for (double& v : dir) v /= -norm; // oppose the honest mean direction
    } else {
        dir.assign(d, 0.0);
        dir[0] = -1.0;
    }

    auto selected_malicious = [&](double lambda) {
        SampleMatrix candidate = benign;
        for (std::size_t id : malicious_ids) {
            ParamVector row = scale(dir, lambda);
            candidate.set_row(id, row);
        }
        const std::size_t pick = krum_select(candidate, f);
        return std::find(malicious_ids.begin(), malicious_ids.end(), pick) !=
               malicious_ids.end();
    };

    if (!selected_malicious(0.0)) return ParamVector(d, 0.0);

    double lo = 0.0;
    double hi = 1.0;
    int doublings = 0;
    while (selected_malicious(hi) && doublings < 40) {
        lo = hi;
        hi *= 2.0;
        ++doublings;
    }
    for (int step = 0; step < 40; ++step) {
        const double mid = 0.5 * (lo + hi);
        if (selected_malicious(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return scale(dir, lo);
}

ParamVector mra_row(const ParamVector& global, const ParamVector& target, double boost) {
    return scale(subtract(target, global), boost);
}

SampleMatrix lower_bound_rows(const AttackSpec& spec, const RoundContext& ctx) {
    if (ctx.task == nullptr || ctx.global == nullptr) {
        throw std::invalid_argument("lower_bound_rows: round context incomplete");
    }
    if (spec.epsilon <= 0.0) {
        throw std::invalid_argument("lower_bound_rows: epsilon must be > 0");
    }
    const std::size_t n = std::max<std::size_t>(ctx.samples_per_client, 1);
    const double eps_prime = lower_bound_eps_prime(spec.epsilon, n);
    const double atom = lower_bound_atom(spec.epsilon, n, ctx.task->sigma);

    SampleMatrix rows(spec.malicious_ids.size(), ctx.task->param_dim());
    CounterRng gen(ctx.rng.substream(0x6c627264u));
    for (std::size_t r = 0; r < rows.row_count; ++r) {
        // Fake dataset from the two-point law, conditioned on >= 1 atom: the
        // unconditioned all-zero draws are what the honest clients look like.
        SampleMatrix fake(n, ctx.task->sample_dim());
        bool has_atom = false;
        for (int attempt = 0; attempt < 10000 && !has_atom; ++attempt) {
            for (std::size_t i = 0; i < n; ++i) {
                const bool hit = gen.next_unit() < eps_prime;
                fake.row(i)[0] = hit ? atom : 0.0;
                has_atom = has_atom || hit;
            }
        }
        if (!has_atom) fake.row(0)[0] = atom;

        ParamVector w = *ctx.global;
        const std::size_t steps = std::max<std::size_t>(ctx.local_steps, 1);
        for (std::size_t h = 0; h < steps; ++h) {
            const ParamVector g = local_gradient(*ctx.task, w, fake);
            axpy(-ctx.eta_t, g, w);
        }
        rows.set_row(r, subtract(w, *ctx.global));
    }
    return rows;
}

SampleMatrix apply_attack(const AttackSpec& spec, const SampleMatrix& benign,
                          const RoundContext& ctx) {
    if (!benign.all_finite()) throw std::invalid_argument("apply_attack: non-finite input");
    SampleMatrix out = benign;
    if (spec.kind == AttackKind::None || spec.malicious_ids.empty()) return out;

    const SampleMatrix honest = honest_rows(benign, spec.malicious_ids);

    switch (spec.kind) {
    case AttackKind::SignFlip:
    case AttackKind::Ima: {
        const ParamVector row =
            honest.row_count > 0 ? scale(mean(honest), -spec.scale)
                                 : ParamVector(benign.dim, 0.0);
        for (std::size_t id : spec.malicious_ids) out.set_row(id, row);
        break;
    }
    case AttackKind::Tma: {
        const ParamVector row = tma_row(honest, spec.margin);
        for (std::size_t id : spec.malicious_ids) out.set_row(id, row);
        break;
    }
    case AttackKind::Ka: {
        const ParamVector row = ka_row(benign, spec.malicious_ids, ctx.krum_f);
        for (std::size_t id : spec.malicious_ids) out.set_row(id, row);
        break;
    }
    case AttackKind::Mra: {
        if (ctx.global == nullptr) {
            throw std::invalid_argument("apply_attack: mra needs the global model");
        }
        ParamVector target = spec.mra_target;
        if (target.empty()) target.assign(benign.dim, 0.0);
        require_same_dim(target.size(), ctx.global->size(), "apply_attack: mra target");
        const ParamVector row = mra_row(*ctx.global, target, spec.boost);
        for (std::size_t id : spec.malicious_ids) out.set_row(id, row);
        break;
    }
    case AttackKind::LabelNoise: {
        CounterRng gen(ctx.rng.substream(0x6c626c6eu));
        for (std::size_t id : spec.malicious_ids) {
            if (gen.next_unit() < spec.flip_prob) {
                out.set_row(id, scale(benign.row(id), -1.0));
            }
        }
        break;
    }
    case AttackKind::LowerBound: {
        const SampleMatrix rows = lower_bound_rows(spec, ctx);
        for (std::size_t r = 0; r < spec.malicious_ids.size(); ++r) {
            out.set_row(spec.malicious_ids[r], rows.row(r));
        }
        break;
    }
    case AttackKind::None:
        break;
    }
    if (!out.all_finite()) throw std::runtime_error("apply_attack: produced non-finite row");
    return out;
}

std::vector<std::size_t> pick_malicious_ids(double epsilon, std::size_t m, RngState rng) {
    if (epsilon < 0.0 || epsilon >= 0.5) {
        throw std::invalid_argument("pick_malicious_ids: epsilon must be in [0, 1/2)");
    }
    const std::size_t count =
        static_cast<std::size_t>(epsilon * static_cast<double>(m));
    std::vector<std::size_t> pool(m);
    std::iota(pool.begin(), pool.end(), 0);
    CounterRng gen(rng);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(gen.next_below(m - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

AttackKind attack_kind_from_string(const std::string& name) {
    if (name == "none") return AttackKind::None;
    if (name == "sign-flip") return AttackKind::SignFlip;
    if (name == "ima") return AttackKind::Ima;
    if (name == "tma") return AttackKind::Tma;
    if (name == "ka") return AttackKind::Ka;
    if (name == "mra") return AttackKind::Mra;
    if (name == "label-noise") return AttackKind::LabelNoise;
    if (name == "lower-bound") return AttackKind::LowerBound;
    throw std::invalid_argument("unknown attack kind: " + name);
}

std::string to_string(AttackKind kind) {
    switch (kind) {
    case AttackKind::None: return "none";
    case AttackKind::SignFlip: return "sign-flip";
    case AttackKind::Ima: return "ima";
    case AttackKind::Tma: return "tma";
    case AttackKind::Ka: return "ka";
    case AttackKind::Mra: return "mra";
    case AttackKind::LabelNoise: return "label-noise";
    case AttackKind::LowerBound: return "lower-bound";
    }
    return "unknown";
}

} // namespace byzagg
