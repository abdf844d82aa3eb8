#pragma once

#include "byzagg/rng.hpp"
#include "byzagg/types.hpp"

namespace byzagg {

// Samples with a probability weighting q; mu_q and Cov_q are taken under q.
// Covariance matvecs are streamed in O(m d); the d x d matrix is never formed.
struct WeightedEmpirical {
    const SampleMatrix* samples{nullptr};
    std::vector<double> weights;

    [[nodiscard]] std::size_t size() const { return weights.size(); }
    void validate(double sum_tol = 1e-9) const;
};

WeightedEmpirical uniform_weighting(const SampleMatrix& samples);

ParamVector weighted_mean(const WeightedEmpirical& we);

struct EigenResult {
    double value{0.0};   // top eigenvalue of Cov_q, i.e. ||Cov_q||_2
    ParamVector vector;  // unit-norm eigenvector estimate
    int iterations{0};
    bool converged{false};
};

// Power iteration on v -> sum_i q_i (x_i - mu)(x_i - mu)^T v. Restarts once
// with a fresh start vector if the first pass fails to settle.
EigenResult top_eigenpair(const WeightedEmpirical& we, double tol, int max_iter,
                          RngState rng);

// g(q; x_i) = (v^T (x_i - mu_q))^2 for a unit direction v.
std::vector<double> quasi_gradient(const WeightedEmpirical& we, const ParamVector& v);

struct IndexRange {
    std::size_t begin{0};
    std::size_t end{0};
    [[nodiscard]] std::size_t length() const { return end - begin; }
};

// Contiguous partition of [0, d); all ranges but possibly the last have
// length interval_size.
std::vector<IndexRange> split_intervals(std::size_t d, std::size_t interval_size);

SampleMatrix slice_columns(const SampleMatrix& samples, IndexRange range);

inline constexpr double kDefaultEigenTol = 1e-6;
inline constexpr int kDefaultEigenMaxIter = 200;

} // namespace byzagg
