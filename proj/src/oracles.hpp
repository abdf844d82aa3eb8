#pragma once

// Slow reference implementations used only for verification: a dense Jacobi
// eigensolver, subset-enumeration Krum/Bulyan, and a grid-search KL projection.
// Production code paths must never include this header.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "byzagg/types.hpp"

namespace byzagg::oracle {

struct DenseEigen {
    std::vector<double> values;               // descending
    std::vector<std::vector<double>> vectors; // vectors[i] pairs with values[i]
};

// Cyclic Jacobi rotations on a symmetric matrix, O(d^3) per sweep; fine for
// the tiny d used in verification.
inline DenseEigen jacobi_eigen(std::vector<std::vector<double>> a) {
    const std::size_t d = a.size();
    std::vector<std::vector<double>> v(d, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < d; ++i) v[i][i] = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) off += a[p][q] * a[p][q];
        }
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                if (std::abs(a[p][q]) < 1e-18) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t i = 0; i < d; ++i) {
                    const double aip = a[i][p];
                    const double aiq = a[i][q];
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < d; ++i) {
                    const double api = a[p][i];
                    const double aqi = a[q][i];
                    a[p][i] = c * api - s * aqi;
                    a[q][i] = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < d; ++i) {
                    const double vip = v[i][p];
                    const double viq = v[i][q];
                    v[i][p] = c * vip - s * viq;
                    v[i][q] = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });

    DenseEigen out;
    for (std::size_t rank = 0; rank < d; ++rank) {
        const std::size_t col = order[rank];
        out.values.push_back(a[col][col]);
        std::vector<double> vec(d);
        for (std::size_t i = 0; i < d; ++i) vec[i] = v[i][col];
        out.vectors.push_back(std::move(vec));
    }
    return out;
}

inline std::vector<std::vector<double>> weighted_covariance(const SampleMatrix& x,
                                                            const std::vector<double>& q) {
    const std::size_t d = x.dim;
    std::vector<double> mu(d, 0.0);
    for (std::size_t i = 0; i < x.row_count; ++i) {
        for (std::size_t j = 0; j < d; ++j) mu[j] += q[i] * x.row(i)[j];
    }
    std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < x.row_count; ++i) {
        for (std::size_t a = 0; a < d; ++a) {
            const double ca = x.row(i)[a] - mu[a];
            for (std::size_t b = 0; b < d; ++b) {
                cov[a][b] += q[i] * ca * (x.row(i)[b] - mu[b]);
            }
        }
    }
    return cov;
}

// Krum by explicit subset enumeration: for each candidate row, minimize the
// distance sum over all neighbor subsets of the required size.
inline std::size_t krum_enumerate(const SampleMatrix& x, std::size_t f) {
    const std::size_t m = x.row_count;
    if (m == 1) return 0;
    const std::size_t want = (m >= f + 2) ? m - f - 2 : 0;
    const std::size_t pick = std::min(want, m - 1);

    std::size_t best_row = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<std::size_t> others;
        for (std::size_t j = 0; j < m; ++j) {
            if (j != i) others.push_back(j);
        }
        double row_best = std::numeric_limits<double>::infinity();
        std::vector<bool> select(others.size(), false);
        std::fill(select.begin(), select.begin() + static_cast<std::ptrdiff_t>(pick), true);
        do {
            double score = 0.0;
            for (std::size_t idx = 0; idx < others.size(); ++idx) {
                if (!select[idx]) continue;
                const double dist = l2_distance(x.row(i), x.row(others[idx]));
                score += dist * dist;
            }
            row_best = std::min(row_best, score);
        } while (std::prev_permutation(select.begin(), select.end()));
        if (row_best < best_score) {
            best_score = row_best;
            best_row = i;
        }
    }
    return best_row;
}

inline ParamVector bulyan_enumerate(const SampleMatrix& x, std::size_t f) {
    const std::size_t m = x.row_count;
    const std::size_t theta = m - 2 * f;
    std::vector<std::size_t> pool(m);
    std::iota(pool.begin(), pool.end(), 0);
    std::vector<std::size_t> chosen;
    for (std::size_t round = 0; round < theta; ++round) {
        SampleMatrix sub(pool.size(), x.dim);
        for (std::size_t i = 0; i < pool.size(); ++i) sub.set_row(i, x.row(pool[i]));
        const std::size_t pick = krum_enumerate(sub, f);
        chosen.push_back(pool[pick]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    ParamVector out(x.dim, 0.0);
    for (std::size_t j = 0; j < x.dim; ++j) {
        std::vector<double> col;
        for (std::size_t idx : chosen) col.push_back(x.row(idx)[j]);
        std::sort(col.begin(), col.end());
        double acc = 0.0;
        for (std::size_t i = f; i < col.size() - f; ++i) acc += col[i];
        out[j] = acc / static_cast<double>(col.size() - 2 * f);
    }
    return out;
}

inline double kl_divergence(const std::vector<double>& q, const std::vector<double>& p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] <= 0.0) continue;
        acc += q[i] * (std::log(q[i]) - std::log(p[i]));
    }
    return acc;
}

// Brute-force KL projection at m = 4 on a step-size grid over the feasible
// capped region; the fourth coordinate is implied by the simplex constraint.
// Per-coordinate contribution tables keep the triple loop log-free.
inline std::vector<double> kl_project_grid4(const std::vector<double>& q_tilde,
                                            double cap, double step = 1e-3) {
    if (q_tilde.size() != 4) throw std::invalid_argument("kl_project_grid4: m must be 4");
    for (double q : q_tilde) {
        if (q <= 0.0) throw std::invalid_argument("kl_project_grid4: needs positive mass");
    }
    const long cap_ticks = static_cast<long>(std::floor(cap / step));
    const long one_ticks = static_cast<long>(std::llround(1.0 / step));

    // table[i][v] = q log q - q log q_tilde_i at q = v * step.
    std::vector<std::vector<double>> table(4, std::vector<double>(one_ticks + 1, 0.0));
    for (int i = 0; i < 4; ++i) {
        const double log_ref = std::log(q_tilde[i]);
        for (long v = 1; v <= one_ticks; ++v) {
            const double q = static_cast<double>(v) * step;
            table[i][v] = q * (std::log(q) - log_ref);
        }
    }

    double best = std::numeric_limits<double>::infinity();
    long best_a = 0;
    long best_b = 0;
    long best_c = 0;
    for (long a = 0; a <= cap_ticks; ++a) {
        for (long b = 0; b <= cap_ticks; ++b) {
            const long ab = a + b;
            if (ab > one_ticks) break;
            const double partial = table[0][a] + table[1][b];
            for (long c = 0; c <= cap_ticks; ++c) {
                const long rest = one_ticks - ab - c;
                if (rest < 0) break;
                if (rest > cap_ticks) continue;
                const double div = partial + table[2][c] + table[3][rest];
                if (div < best) {
                    best = div;
                    best_a = a;
                    best_b = b;
                    best_c = c;
                }
            }
        }
    }
    const double a = static_cast<double>(best_a) * step;
    const double b = static_cast<double>(best_b) * step;
    const double c = static_cast<double>(best_c) * step;
    return {a, b, c, 1.0 - a - b - c};
}

} // namespace byzagg::oracle
