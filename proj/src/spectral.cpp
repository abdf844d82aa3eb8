#include "byzagg/spectral.hpp"

#include <cmath>
#include <stdexcept>

namespace byzagg {

void WeightedEmpirical::validate(double sum_tol) const {
    if (samples == nullptr) throw std::invalid_argument("WeightedEmpirical: null samples");
    require_same_dim(weights.size(), samples->row_count, "WeightedEmpirical: weight count");
    double sum = 0.0;
    for (double q : weights) {
        if (!std::isfinite(q) || q < 0.0) {
            throw std::invalid_argument("WeightedEmpirical: weights must be finite and >= 0");
        }
        sum += q;
    }
    if (std::abs(sum - 1.0) > sum_tol) {
        throw std::invalid_argument("WeightedEmpirical: weights must sum to 1");
    }
}

WeightedEmpirical uniform_weighting(const SampleMatrix& samples) {
    if (samples.row_count == 0) throw std::invalid_argument("uniform_weighting: empty samples");
    WeightedEmpirical we;
    we.samples = &samples;
    we.weights.assign(samples.row_count, 1.0 / static_cast<double>(samples.row_count));
    return we;
}

ParamVector weighted_mean(const WeightedEmpirical& we) {
    we.validate();
    const SampleMatrix& x = *we.samples;
    ParamVector mu(x.dim, 0.0);
    for (std::size_t i = 0; i < x.row_count; ++i) {
        if (we.weights[i] != 0.0) axpy(we.weights[i], x.row(i), mu);
    }
    return mu;
}

namespace {

// y = Cov_q v = sum_i q_i <x_i - mu, v> (x_i - mu), streamed over rows.
ParamVector cov_matvec(const SampleMatrix& x, const std::vector<double>& q,
                       const ParamVector& mu, const ParamVector& v) {
    ParamVector y(x.dim, 0.0);
    for (std::size_t i = 0; i < x.row_count; ++i) {
        if (q[i] == 0.0) continue;
        auto row = x.row(i);
        double proj = 0.0;
        for (std::size_t j = 0; j < x.dim; ++j) proj += (row[j] - mu[j]) * v[j];
        const double coeff = q[i] * proj;
        for (std::size_t j = 0; j < x.dim; ++j) y[j] += coeff * (row[j] - mu[j]);
    }
    return y;
}

ParamVector random_unit(std::size_t d, CounterRng& gen) {
    ParamVector v(d);
    double norm = 0.0;
    while (norm < 1e-12) {
        for (double& c : v) c = gen.next_gaussian();
        norm = l2_norm(v);
    }
    for (double& c : v) c /= norm;
    return v;
}

} // namespace

EigenResult top_eigenpair(const WeightedEmpirical& we, double tol, int max_iter,
                          RngState rng) {
    we.validate();
    const SampleMatrix& x = *we.samples;
    const std::size_t d = x.dim;
    if (d == 0) throw std::invalid_argument("top_eigenpair: zero-dimensional samples");
    const ParamVector mu = weighted_mean(we);
    CounterRng gen(rng);

    EigenResult best;
    for (int attempt = 0; attempt < 2; ++attempt) {
        ParamVector v = random_unit(d, gen);
        double lambda = 0.0;
        EigenResult result;
        for (int it = 0; it < max_iter; ++it) {
            ParamVector y = cov_matvec(x, we.weights, mu, v);
            const double norm = l2_norm(y);
            result.iterations = it + 1;
            if (norm < 1e-300) {
                // Covariance annihilates v; the spectrum along this start is ~0.
                lambda = 0.0;
                result.converged = true;
                break;
            }
            for (std::size_t j = 0; j < d; ++j) y[j] /= norm;
            const double delta = std::abs(norm - lambda);
            v = std::move(y);
            lambda = norm;
            if (delta <= tol * std::max(1.0, lambda)) {
                result.converged = true;
                break;
            }
        }
        result.value = lambda;
        result.vector = std::move(v);
        if (result.converged) return result;
        if (attempt == 0) best = result;
    }
    return best;
}

std::vector<double> quasi_gradient(const WeightedEmpirical& we, const ParamVector& v) {
    we.validate();
    const SampleMatrix& x = *we.samples;
    require_same_dim(v.size(), x.dim, "quasi_gradient");
    const ParamVector mu = weighted_mean(we);
    std::vector<double> g(x.row_count, 0.0);
    for (std::size_t i = 0; i < x.row_count; ++i) {
        auto row = x.row(i);
        double proj = 0.0;
        for (std::size_t j = 0; j < x.dim; ++j) proj += (row[j] - mu[j]) * v[j];
        g[i] = proj * proj;
    }
    return g;
}

std::vector<IndexRange> split_intervals(std::size_t d, std::size_t interval_size) {
    if (interval_size == 0) throw std::invalid_argument("split_intervals: interval_size must be >= 1");
    std::vector<IndexRange> out;
    for (std::size_t begin = 0; begin < d; begin += interval_size) {
        out.push_back({begin, std::min(begin + interval_size, d)});
    }
    return out;
}

SampleMatrix slice_columns(const SampleMatrix& samples, IndexRange range) {
    if (range.end > samples.dim || range.begin > range.end) {
        throw std::invalid_argument("slice_columns: range out of bounds");
    }
    SampleMatrix out(samples.row_count, range.length());
    for (std::size_t i = 0; i < samples.row_count; ++i) {
        auto src = samples.row(i);
        auto dst = out.row(i);
        for (std::size_t j = 0; j < range.length(); ++j) dst[j] = src[range.begin + j];
    }
    return out;
}

} // namespace byzagg
