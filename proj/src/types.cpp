#include "byzagg/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace byzagg {

void SampleMatrix::set_row(std::size_t i, std::span<const double> values) {
    require_same_dim(values.size(), dim, "SampleMatrix::set_row");
    std::copy(values.begin(), values.end(), data.begin() + static_cast<std::ptrdiff_t>(i * dim));
}

bool SampleMatrix::all_finite() const {
    return byzagg::all_finite(data);
}

double dot(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a.size(), b.size(), "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double l2_norm(std::span<const double> v) {
    return std::sqrt(dot(v, v));
}

double l2_distance(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a.size(), b.size(), "l2_distance");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

ParamVector add(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a.size(), b.size(), "add");
    ParamVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

ParamVector subtract(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a.size(), b.size(), "subtract");
    ParamVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

ParamVector scale(std::span<const double> v, double factor) {
    ParamVector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * factor;
    return out;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    require_same_dim(x.size(), y.size(), "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void require_finite(std::span<const double> v, const std::string& what) {
    if (!all_finite(v)) throw std::invalid_argument(what + ": non-finite entry");
}

void require_same_dim(std::size_t a, std::size_t b, const std::string& what) {
    if (a != b) {
        throw std::invalid_argument(what + ": dimension mismatch (" + std::to_string(a) +
                                    " vs " + std::to_string(b) + ")");
    }
}

ParamVector ParamSpace::project(const ParamVector& w) const {
    require_same_dim(w.size(), center.size(), "ParamSpace::project");
    const double dist = l2_distance(w, center);
    // Tolerance band makes projection exactly idempotent: a point produced by
    // the radial scaling below may land a few ulps outside the ball.
    if (dist <= radius * (1.0 + 1e-12)) return w;
    ParamVector out(w.size());
    const double factor = radius / dist;
    for (std::size_t i = 0; i < w.size(); ++i) {
        out[i] = center[i] + factor * (w[i] - center[i]);
    }
    return out;
}

bool ParamSpace::contains(const ParamVector& w, double slack) const {
    return l2_distance(w, center) <= radius + slack;
}

} // namespace byzagg
