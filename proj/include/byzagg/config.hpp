#pragma once

#include <cstdint>
#include <string>

#include "byzagg/attacks.hpp"
#include "byzagg/estimators.hpp"
#include "byzagg/secure_agg.hpp"
#include "byzagg/task.hpp"

namespace byzagg {

enum class StepSchedule {
    Auto,     // constant when H = 1, decaying when H >= 2
    Constant, // eta_t = 1/L
    Decaying  // eta_t = a / (L (t + a)), a = (L + lambda) / lambda
};

struct ExperimentConfig {
    // [experiment]
    std::size_t m{100};
    std::size_t n{20};
    std::size_t d{32};
    double epsilon{0.0};
    std::size_t local_steps{1};       // H
    std::size_t bucket_count{0};      // k; 0 = auto
    std::size_t rounds{50};           // T
    double delta{0.05};
    StepSchedule schedule{StepSchedule::Auto};
    std::uint64_t seed{0};
    double init_dist{10.0};           // ||w0 - w*||
    double space_radius{0.0};         // 0 = auto (2 * init_dist + 1)
    bool resample_malicious{false};   // re-draw the Byzantine set each round

    // [task]
    TaskKind task{TaskKind::MeanEstimation};
    double sigma{1.0};

    // [estimator]
    EstimatorConfig estimator;

    // [attack]
    AttackSpec attack;

    // [secure]
    bool secure{false};
    SecureAggConfig secure_cfg;
    bool auto_clip{true}; // derive clip from sigma, eta_t, d each run

    void validate() const; // throws std::invalid_argument with the failing key
};

// Flat INI-style text: [section] headers, `key = value` lines, `#` comments,
// "auto" accepted where a derived default exists.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Canonical key-sorted rendering; equal configs serialize identically, which
// makes the content-hash run id stable.
std::string canonical_config(const ExperimentConfig& cfg);

std::string default_config_text();

} // namespace byzagg
