#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "byzagg/rng.hpp"
#include "byzagg/task.hpp"
#include "byzagg/types.hpp"

namespace byzagg {

enum class AttackKind {
    None,
    SignFlip,   // malicious row = -scale * mean(honest rows)
    Ima,        // inner-product manipulation, same template as sign-flip
    Tma,        // per-coordinate placement just outside the honest hull
    Ka,         // common vector tuned so Krum still selects it
    Mra,        // boost * (target - global), model replacement
    LabelNoise, // each malicious client negates its own update w.p. flip_prob
    LowerBound  // honest-shaped update drawn from the confusable two-point law
};

struct AttackSpec {
    AttackKind kind{AttackKind::None};
    double epsilon{0.0};
    std::vector<std::size_t> malicious_ids; // |ids| = floor(epsilon * m), fixed per run
    double scale{1.0};       // sign-flip / ima
    double margin{0.1};      // tma
    ParamVector mra_target;  // mra
    double boost{1.0};       // mra
    double flip_prob{1.0};   // label-noise
};

struct RoundContext {
    const ParamVector* global{nullptr};
    double eta_t{1.0};
    std::size_t round{0};
    const TaskSpec* task{nullptr};
    std::size_t local_steps{1};
    std::size_t samples_per_client{1};
    RngState rng;      // per-round attack stream
    std::size_t krum_f{0};
};

// Full-knowledge static adversary: rows at malicious_ids are replaced, honest
// rows pass through untouched.
SampleMatrix apply_attack(const AttackSpec& spec, const SampleMatrix& benign,
                          const RoundContext& ctx);

ParamVector ima_row(const SampleMatrix& honest, double scale);
ParamVector tma_row(const SampleMatrix& honest, double margin);
ParamVector ka_row(const SampleMatrix& benign, const std::vector<std::size_t>& malicious_ids,
                   std::size_t f);
ParamVector mra_row(const ParamVector& global, const ParamVector& target, double boost);

// One honest-shaped update per malicious client, computed from a fake local
// dataset drawn along coordinate 0 from the two-point law the indistinguishable
// alternative world would produce, conditioned on carrying at least one atom.
SampleMatrix lower_bound_rows(const AttackSpec& spec, const RoundContext& ctx);

std::vector<std::size_t> pick_malicious_ids(double epsilon, std::size_t m, RngState rng);

AttackKind attack_kind_from_string(const std::string& name);
std::string to_string(AttackKind kind);

} // namespace byzagg
