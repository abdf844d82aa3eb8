#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace byzagg {

// Dense model-parameter / update vector.
using ParamVector = std::vector<double>;

// Row-major m x d stack of client updates or samples.
struct SampleMatrix {
    std::size_t row_count{0};
    std::size_t dim{0};
    std::vector<double> data;

    SampleMatrix() = default;
    SampleMatrix(std::size_t rows, std::size_t cols)
        : row_count(rows), dim(cols), data(rows * cols, 0.0) {}

    [[nodiscard]] std::span<double> row(std::size_t i) {
        return {data.data() + i * dim, dim};
    }
    [[nodiscard]] std::span<const double> row(std::size_t i) const {
        return {data.data() + i * dim, dim};
    }
    [[nodiscard]] ParamVector row_copy(std::size_t i) const {
        auto r = row(i);
        return {r.begin(), r.end()};
    }
    void set_row(std::size_t i, std::span<const double> values);

    [[nodiscard]] bool all_finite() const;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);
double l2_distance(std::span<const double> a, std::span<const double> b);

ParamVector add(std::span<const double> a, std::span<const double> b);
ParamVector subtract(std::span<const double> a, std::span<const double> b);
ParamVector scale(std::span<const double> v, double factor);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

bool all_finite(std::span<const double> v);
void require_finite(std::span<const double> v, const std::string& what);
void require_same_dim(std::size_t a, std::size_t b, const std::string& what);

// l2 ball, diameter D = 2 * radius.
struct ParamSpace {
    ParamVector center;
    double radius{0.0};

    // Euclidean projection onto the ball; identity for interior points.
    [[nodiscard]] ParamVector project(const ParamVector& w) const;
    [[nodiscard]] bool contains(const ParamVector& w, double slack = 1e-9) const;
};

} // namespace byzagg
