#include "byzagg/task.hpp"

#include <cmath>
#include <stdexcept>

namespace byzagg {

std::size_t TaskSpec::sample_dim() const {
    return kind == TaskKind::LinearRegression ? param_dim() + 1 : param_dim();
}

ParamVector TaskSpec::population_gradient(const ParamVector& w) const {
    ParamVector g = subtract(w, optimum);
    const double factor = kind == TaskKind::MeanEstimation ? 2.0 : 1.0;
    for (double& v : g) v *= factor;
    return g;
}

double TaskSpec::population_loss(const ParamVector& w) const {
    const double err2 = dot(subtract(w, optimum), subtract(w, optimum));
    if (kind == TaskKind::MeanEstimation) {
        return err2 + static_cast<double>(param_dim()) * sigma * sigma;
    }
    return 0.5 * (err2 + sigma * sigma);
}

TaskSpec make_task(TaskKind kind, std::size_t dim, double sigma) {
    TaskSpec task;
    task.kind = kind;
    task.sigma = sigma;
    task.optimum.assign(dim, 0.0);
    if (kind == TaskKind::MeanEstimation) {
        task.smoothness = 2.0;
        task.strong_convexity = 2.0;
    } else {
        // E[x x^T] = I for the Gaussian design below.
        task.smoothness = 1.0;
        task.strong_convexity = 1.0;
    }
    return task;
}

ParamVector local_gradient(const TaskSpec& task, const ParamVector& w,
                           const SampleMatrix& local_data) {
    if (local_data.row_count == 0) throw std::invalid_argument("local_gradient: empty data");
    require_same_dim(local_data.dim, task.sample_dim(), "local_gradient: sample dim");
    require_same_dim(w.size(), task.param_dim(), "local_gradient: param dim");

    const std::size_t n = local_data.row_count;
    const std::size_t d = w.size();
    ParamVector grad(d, 0.0);

    if (task.kind == TaskKind::MeanEstimation) {
        // grad F_i(w) = 2 (w - mean(z))
        for (std::size_t i = 0; i < n; ++i) {
            axpy(1.0, local_data.row(i), grad);
        }
        for (std::size_t j = 0; j < d; ++j) {
            grad[j] = 2.0 * (w[j] - grad[j] / static_cast<double>(n));
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            auto row = local_data.row(i);
            const auto x = row.first(d);
            const double y = row[d];
            const double residual = dot(w, x) - y;
            axpy(residual, x, grad);
        }
        for (double& v : grad) v /= static_cast<double>(n);
    }
    return grad;
}

SampleMatrix sample_client_data(const TaskSpec& task, std::size_t n, RngState rng) {
    if (n == 0) throw std::invalid_argument("sample_client_data: n must be >= 1");
    const std::size_t d = task.param_dim();
    SampleMatrix out(n, task.sample_dim());
    CounterRng gen(rng);

    if (task.kind == TaskKind::MeanEstimation) {
        for (std::size_t i = 0; i < n; ++i) {
            auto row = out.row(i);
            for (std::size_t j = 0; j < d; ++j) {
                row[j] = task.optimum[j] + task.sigma * gen.next_gaussian();
            }
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            auto row = out.row(i);
            for (std::size_t j = 0; j < d; ++j) row[j] = gen.next_gaussian();
            row[d] = dot(task.optimum, row.first(d)) + task.sigma * gen.next_gaussian();
        }
    }
    return out;
}

double lower_bound_eps_prime(double epsilon, std::size_t n) {
    if (epsilon <= 0.0 || epsilon >= 0.5) {
        throw std::invalid_argument("lower bound instance requires 0 < epsilon < 1/2");
    }
    return 1.0 - std::pow(1.0 - epsilon, 1.0 / static_cast<double>(n));
}

double lower_bound_atom(double epsilon, std::size_t n, double sigma) {
    const double ep = lower_bound_eps_prime(epsilon, n);
    return (sigma / 3.0) * std::sqrt((1.0 - ep) / ep);
}

LowerBoundInstance gen_lower_bound_instance(double epsilon, std::size_t n, double sigma,
                                            std::size_t count, RngState rng) {
    LowerBoundInstance inst;
    inst.eps_prime = lower_bound_eps_prime(epsilon, n);
    inst.atom_value = lower_bound_atom(epsilon, n, sigma);
    inst.mean_gap = inst.eps_prime * inst.atom_value;
    inst.samples = SampleMatrix(count, 1);
    inst.atom_mask.assign(count, 0);
    CounterRng gen(rng);
    for (std::size_t i = 0; i < count; ++i) {
        if (gen.next_unit() < inst.eps_prime) {
            inst.samples.row(i)[0] = inst.atom_value;
            inst.atom_mask[i] = 1;
        }
    }
    return inst;
}

} // namespace byzagg
