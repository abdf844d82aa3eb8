#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "byzagg/rng.hpp"
#include "byzagg/spectral.hpp"
#include "byzagg/types.hpp"

namespace byzagg {

enum class EstimatorKind {
    Mean,
    CoordMedian,
    CoordTrimmedMean,
    GeometricMedian,
    Krum,
    Bulyan,
    Filtering,
    NoRegret,
    Bucketing
};

enum class ThresholdVariant {
    Eq1,    // no-regret, (2eta+7)^2 / (3(1-(3+eta)eps))^2 scaling
    Eq1Alt, // same with the (1-(6+2eta)eps) denominator; both forms circulate
    Eq2,    // filtering, 2(1-eps)/(1-2eps)^2 scaling
    Eq4,    // no-regret, C1/(1-C2(eps+log(1/delta)/n)^2) scaling
    Eq5,    // filtering, C3/(1-C4(...)^2) scaling
    Eq6,    // bucketed no-regret, C*(d+k) scaling
    Eq7,    // bucketed filtering, C*(d+k) scaling
    Manual
};

struct ThresholdSpec {
    double xi{0.0};
};

struct EstimatorConfig {
    EstimatorKind kind{EstimatorKind::Mean};
    double epsilon{0.0};
    double eta{0.5};           // multiplicative-weights step constant, in (0,1)
    double beta{0.1};          // trim fraction per side
    std::size_t krum_f{0};
    EstimatorKind bulyan_inner{EstimatorKind::Krum};
    EstimatorKind bucketing_inner{EstimatorKind::Filtering};
    ThresholdVariant threshold_variant{ThresholdVariant::Eq2};
    double manual_xi{0.0};
    std::size_t interval_size{0}; // 0 means no coordinate splitting
    std::size_t max_iter{200};
    double delta{0.05};
    // Threshold inputs shared with the simulator.
    double sigma{1.0};
    double eta_t{1.0};
    std::size_t samples_per_client{1};
    double c1{2.0};
    double c2{2.0};
    double c3{2.0};
    double c4{2.0};
    double bucket_c{2.0};          // constant in the (d+k)-scaled thresholds
    double prefilter_c0{4.0};      // no-regret naive pre-filter cutoff constant
    bool bucket_count_alt{false};  // use the floor(eps*m + log(1/delta)) variant
    std::size_t bucket_count_override{0}; // 0 means derive from epsilon, m, delta
};

struct RobustResult {
    ParamVector estimate;
    std::vector<double> weights; // over input rows; zero for removed rows
    int iterations{0};
    bool converged{true};
};

ParamVector mean(const SampleMatrix& updates);
ParamVector coord_median(const SampleMatrix& updates);
ParamVector coord_trimmed_mean(const SampleMatrix& updates, double beta);
// Trim a fixed count per side instead of a fraction.
ParamVector coord_trimmed_mean_count(const SampleMatrix& updates, std::size_t trim);

ParamVector geometric_median(const SampleMatrix& updates, double tol = 1e-9,
                             std::size_t max_iter = 1000, bool* converged = nullptr);

// Index of the row with minimal sum of its m-f-2 smallest squared distances.
std::size_t krum_select(const SampleMatrix& updates, std::size_t f);
ParamVector krum(const SampleMatrix& updates, std::size_t f);
ParamVector bulyan(const SampleMatrix& updates, std::size_t f,
                   EstimatorKind inner = EstimatorKind::Krum);

RobustResult filtering(const SampleMatrix& updates, const std::vector<double>& q0,
                       ThresholdSpec xi, std::size_t max_iter, RngState rng);

RobustResult no_regret(const SampleMatrix& updates, double epsilon, double sigma2,
                       ThresholdSpec xi, double eta, std::size_t max_iter,
                       RngState rng, double prefilter_c0 = 4.0);

// Exact KL projection onto {q : sum q = 1, q_i <= cap}.
std::vector<double> kl_project_capped_simplex(const std::vector<double>& q_tilde,
                                              double cap);

struct ThresholdInputs {
    double epsilon{0.0};
    double eta{0.5};
    double sigma{1.0};
    std::size_t d{1};
    std::size_t m{1};
    std::size_t n{1};
    double delta{0.05};
    double eta_t{1.0};
    std::size_t k{0};   // bucket count, used by the (d+k)-scaled variants
    double c1{2.0}, c2{2.0}, c3{2.0}, c4{2.0};
    double bucket_c{2.0};
    double manual_xi{0.0};
};

ThresholdSpec compute_threshold(ThresholdVariant variant, const ThresholdInputs& in);

std::vector<std::vector<std::size_t>> bucketize(std::size_t m, std::size_t k, RngState rng);

std::size_t default_bucket_count(double epsilon, std::size_t m, double delta,
                                 bool alt_variant = false);

ParamVector bucketed_aggregate(const EstimatorConfig& cfg, const SampleMatrix& updates,
                               RngState rng);

// Inner stage of bucketed_aggregate: robust-aggregate already-computed bucket
// means with the (d+k)-scaled thresholds. m_total is the pre-bucketing row
// count. The secure path feeds dequantized bucket sums through here.
ParamVector aggregate_bucket_means(const EstimatorConfig& cfg, const SampleMatrix& means,
                                   std::size_t m_total, RngState rng);

// Bucket count the bucketing estimator will use for m rows under cfg.
std::size_t resolve_bucket_count(const EstimatorConfig& cfg, std::size_t m);

// Dispatch to the configured rule. epsilon = 0 falls back to the plain mean
// for every non-mean kind; the derived thresholds blow up there.
ParamVector aggregate(const EstimatorConfig& cfg, const SampleMatrix& updates,
                      RngState rng);

EstimatorKind estimator_kind_from_string(const std::string& name);
std::string to_string(EstimatorKind kind);
ThresholdVariant threshold_variant_from_string(const std::string& name);
std::string to_string(ThresholdVariant variant);

} // namespace byzagg
