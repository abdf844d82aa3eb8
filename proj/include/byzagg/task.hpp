#pragma once

#include "byzagg/rng.hpp"
#include "byzagg/types.hpp"

namespace byzagg {

enum class TaskKind {
    MeanEstimation,  // f(w; z) = ||w - z||^2, (L, lambda) = (2, 2)
    LinearRegression // z = (x, y), f(w; z) = (w.x - y)^2 / 2
};

struct TaskSpec {
    TaskKind kind{TaskKind::MeanEstimation};
    double sigma{1.0};            // per-direction noise scale
    double smoothness{2.0};       // L
    double strong_convexity{2.0}; // lambda
    ParamVector optimum;          // w*

    [[nodiscard]] std::size_t param_dim() const { return optimum.size(); }
    // Sample rows carry (x, y) for regression, plain points for mean estimation.
    [[nodiscard]] std::size_t sample_dim() const;

    [[nodiscard]] ParamVector population_gradient(const ParamVector& w) const;
    [[nodiscard]] double population_loss(const ParamVector& w) const;
};

TaskSpec make_task(TaskKind kind, std::size_t dim, double sigma);

// Gradient of the client's empirical risk F_i(w) = (1/n) sum_j f(w; z_j).
ParamVector local_gradient(const TaskSpec& task, const ParamVector& w,
                           const SampleMatrix& local_data);

// n i.i.d. samples for one client; Gaussian noise around w*.
SampleMatrix sample_client_data(const TaskSpec& task, std::size_t n, RngState rng);

// Two-point hard instance: mass eps' at the atom, rest at zero, where
// eps' = 1 - (1 - eps)^(1/n) and the atom sits at (sigma/3) sqrt((1-eps')/eps').
// The point-mass-at-zero alternative is indistinguishable after n-sample
// averaging, so no estimator can beat the reported mean gap.
struct LowerBoundInstance {
    SampleMatrix samples;           // count x 1 draws from the two-point law
    std::vector<std::uint8_t> atom_mask; // 1 where the draw hit the atom
    double eps_prime{0.0};
    double atom_value{0.0};
    double mean_gap{0.0};           // eps' * atom_value
};

LowerBoundInstance gen_lower_bound_instance(double epsilon, std::size_t n, double sigma,
                                            std::size_t count, RngState rng);

// Closed-form pieces of the instance, shared with the adversary.
double lower_bound_eps_prime(double epsilon, std::size_t n);
double lower_bound_atom(double epsilon, std::size_t n, double sigma);

} // namespace byzagg
