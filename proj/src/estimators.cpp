#include "byzagg/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace byzagg {

namespace {

void require_rows(const SampleMatrix& updates, std::size_t min_rows, const char* what) {
    if (updates.row_count < min_rows) {
        throw std::invalid_argument(std::string(what) + ": needs at least " +
                                    std::to_string(min_rows) + " rows, got " +
                                    std::to_string(updates.row_count));
    }
    if (!updates.all_finite()) {
        throw std::invalid_argument(std::string(what) + ": non-finite input row");
    }
}

std::vector<double> column(const SampleMatrix& updates, std::size_t j) {
    std::vector<double> col(updates.row_count);
    for (std::size_t i = 0; i < updates.row_count; ++i) col[i] = updates.row(i)[j];
    return col;
}

} // namespace

ParamVector mean(const SampleMatrix& updates) {
    require_rows(updates, 1, "mean");
    ParamVector out(updates.dim, 0.0);
    for (std::size_t i = 0; i < updates.row_count; ++i) axpy(1.0, updates.row(i), out);
    for (double& v : out) v /= static_cast<double>(updates.row_count);
    return out;
}

ParamVector coord_median(const SampleMatrix& updates) {
    require_rows(updates, 1, "coord_median");
    const std::size_t m = updates.row_count;
    ParamVector out(updates.dim);
    for (std::size_t j = 0; j < updates.dim; ++j) {
        std::vector<double> col = column(updates, j);
        std::sort(col.begin(), col.end());
        out[j] = (m % 2 == 1) ? col[m / 2] : 0.5 * (col[m / 2 - 1] + col[m / 2]);
    }
    return out;
}

ParamVector coord_trimmed_mean(const SampleMatrix& updates, double beta) {
    if (beta < 0.0 || beta >= 0.5) {
        throw std::invalid_argument("coord_trimmed_mean: beta must be in [0, 1/2)");
    }
    const std::size_t trim =
        static_cast<std::size_t>(beta * static_cast<double>(updates.row_count));
    return coord_trimmed_mean_count(updates, trim);
}

ParamVector coord_trimmed_mean_count(const SampleMatrix& updates, std::size_t trim) {
    require_rows(updates, 1, "coord_trimmed_mean");
    const std::size_t m = updates.row_count;
    if (2 * trim >= m) {
        throw std::invalid_argument("coord_trimmed_mean: trim removes all rows");
    }
    ParamVector out(updates.dim);
    const std::size_t keep = m - 2 * trim;
    for (std::size_t j = 0; j < updates.dim; ++j) {
        std::vector<double> col = column(updates, j);
        std::sort(col.begin(), col.end());
        double acc = 0.0;
        for (std::size_t i = trim; i < m - trim; ++i) acc += col[i];
        out[j] = acc / static_cast<double>(keep);
    }
    return out;
}

ParamVector geometric_median(const SampleMatrix& updates, double tol,
                             std::size_t max_iter, bool* converged) {
    require_rows(updates, 1, "geometric_median");
    if (converged != nullptr) *converged = true;
    if (updates.row_count == 1) return updates.row_copy(0);

    double extent = 1.0;
    for (std::size_t i = 0; i < updates.row_count; ++i) {
        extent = std::max(extent, l2_norm(updates.row(i)));
    }
    const double coincide = 1e-10 * extent;

    ParamVector y = mean(updates);
    bool ok = false;
    for (std::size_t it = 0; it < max_iter; ++it) {
        double inv_sum = 0.0;
        double coincident = 0.0;
        ParamVector t_num(updates.dim, 0.0);
        ParamVector r_vec(updates.dim, 0.0);
        for (std::size_t i = 0; i < updates.row_count; ++i) {
            const double dist = l2_distance(updates.row(i), y);
            if (dist <= coincide) {
                coincident += 1.0;
                continue;
            }
            const double w = 1.0 / dist;
            inv_sum += w;
            axpy(w, updates.row(i), t_num);
            auto row = updates.row(i);
            for (std::size_t j = 0; j < updates.dim; ++j) r_vec[j] += w * (row[j] - y[j]);
        }
        if (inv_sum == 0.0) { // every point coincides with the iterate
            ok = true;
            break;
        }
        const double r = l2_norm(r_vec);
        ParamVector next;
        if (coincident > 0.0) {
            // Vardi-Zhang rule: the iterate sits on a data point; it is optimal
            // when the pull of the other points is weaker than the multiplicity.
            if (r <= coincident) {
                ok = true;
                break;
            }
            const double gamma = std::min(1.0, coincident / r);
            next.resize(updates.dim);
            for (std::size_t j = 0; j < updates.dim; ++j) {
                next[j] = (1.0 - gamma) * (t_num[j] / inv_sum) + gamma * y[j];
            }
        } else {
            next = scale(t_num, 1.0 / inv_sum);
        }
        const double step = l2_distance(next, y);
        y = std::move(next);
        if (step <= tol * std::max(1.0, l2_norm(y))) {
            ok = true;
            break;
        }
    }
    if (converged != nullptr) *converged = ok;
    return y;
}

namespace {

// Relaxed selection used inside Bulyan where the pool shrinks below f + 3.
std::size_t krum_select_impl(const SampleMatrix& updates, std::size_t f) {
    const std::size_t m = updates.row_count;
    if (m == 1) return 0;
    const std::size_t want = (m >= f + 2) ? m - f - 2 : 0;
    const std::size_t neighbors = std::min(want, m - 1);

    std::vector<double> dist2(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const double d = l2_distance(updates.row(i), updates.row(j));
            dist2[i * m + j] = dist2[j * m + i] = d * d;
        }
    }

    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    std::vector<double> others;
    others.reserve(m - 1);
    for (std::size_t i = 0; i < m; ++i) {
        others.clear();
        for (std::size_t j = 0; j < m; ++j) {
            if (j != i) others.push_back(dist2[i * m + j]);
        }
        std::partial_sort(others.begin(),
                          others.begin() + static_cast<std::ptrdiff_t>(neighbors),
                          others.end());
        double score = 0.0;
        for (std::size_t j = 0; j < neighbors; ++j) score += others[j];
        if (score < best_score) { // strict: ties keep the lowest index
            best_score = score;
            best = i;
        }
    }
    return best;
}

} // namespace

std::size_t krum_select(const SampleMatrix& updates, std::size_t f) {
    require_rows(updates, 1, "krum_select");
    return krum_select_impl(updates, f);
}

ParamVector krum(const SampleMatrix& updates, std::size_t f) {
    require_rows(updates, f + 3, "krum");
    return updates.row_copy(krum_select_impl(updates, f));
}

ParamVector bulyan(const SampleMatrix& updates, std::size_t f, EstimatorKind inner) {
    require_rows(updates, 4 * f + 3, "bulyan");
    const std::size_t m = updates.row_count;
    const std::size_t theta = m - 2 * f;

    std::vector<std::size_t> pool(m);
    std::iota(pool.begin(), pool.end(), 0);
    SampleMatrix selected(theta, updates.dim);

    for (std::size_t round = 0; round < theta; ++round) {
        SampleMatrix sub(pool.size(), updates.dim);
        for (std::size_t i = 0; i < pool.size(); ++i) sub.set_row(i, updates.row(pool[i]));
        std::size_t pick = 0;
        if (inner == EstimatorKind::Krum) {
            pick = krum_select_impl(sub, f);
        } else if (inner == EstimatorKind::GeometricMedian) {
            const ParamVector center = geometric_median(sub);
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < sub.row_count; ++i) {
                const double d = l2_distance(sub.row(i), center);
                if (d < best) {
                    best = d;
                    pick = i;
                }
            }
        } else {
            throw std::invalid_argument("bulyan: unsupported inner selection rule");
        }
        selected.set_row(round, updates.row(pool[pick]));
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return coord_trimmed_mean_count(selected, f);
}

RobustResult filtering(const SampleMatrix& updates, const std::vector<double>& q0,
                       ThresholdSpec xi, std::size_t max_iter, RngState rng) {
    require_rows(updates, 1, "filtering");
    if (xi.xi < 0.0) throw std::invalid_argument("filtering: xi must be >= 0");

    RobustResult result;
    result.weights = q0.empty() ? uniform_weighting(updates).weights : q0;
    WeightedEmpirical we{&updates, result.weights};
    we.validate();

    for (std::size_t it = 0; it <= max_iter; ++it) {
        const EigenResult eig =
            top_eigenpair(we, kDefaultEigenTol, kDefaultEigenMaxIter,
                          rng.substream(0x65696731u + it));
        if (eig.value <= xi.xi) {
            result.estimate = weighted_mean(we);
            result.weights = we.weights;
            result.iterations = static_cast<int>(it);
            result.converged = true;
            return result;
        }
        if (it == max_iter) break;

        const std::vector<double> g = quasi_gradient(we, eig.vector);
        double g_max = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (we.weights[i] > 0.0) g_max = std::max(g_max, g[i]);
        }
        if (g_max <= 0.0) break; // degenerate spectrum yet above xi: stop

        double total = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (we.weights[i] <= 0.0) continue;
            we.weights[i] *= 1.0 - g[i] / g_max; // argmax row drops to zero
            if (we.weights[i] < 0.0) we.weights[i] = 0.0;
            total += we.weights[i];
        }
        if (total <= 0.0) {
            throw std::runtime_error(
                "filtering: all weight removed; xi is below the attainable variance");
        }
        for (double& w : we.weights) w /= total;
    }

    result.estimate = weighted_mean(we);
    result.weights = we.weights;
    result.iterations = static_cast<int>(max_iter);
    result.converged = false;
    return result;
}

std::vector<double> kl_project_capped_simplex(const std::vector<double>& q_tilde,
                                              double cap) {
    const std::size_t m = q_tilde.size();
    if (m == 0) throw std::invalid_argument("kl_project_capped_simplex: empty input");
    double total = 0.0;
    std::size_t support = 0;
    for (double q : q_tilde) {
        if (!std::isfinite(q) || q < 0.0) {
            throw std::invalid_argument("kl_project_capped_simplex: entries must be >= 0");
        }
        if (q > 0.0) ++support;
        total += q;
    }
    if (total <= 0.0) throw std::invalid_argument("kl_project_capped_simplex: zero mass");
    if (cap * static_cast<double>(support) < 1.0 - 1e-12) {
        throw std::invalid_argument("kl_project_capped_simplex: infeasible cap");
    }

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return q_tilde[a] > q_tilde[b]; });

    // With the j largest entries capped, gamma = (1 - j*cap) / (mass of the rest);
    // scan j upward until gamma is consistent with the capping pattern.
    double prefix = 0.0;
    for (std::size_t j = 0; j <= m; ++j) {
        const double rest = total - prefix;
        bool ok = false;
        double gamma = 0.0;
        if (rest > 0.0) {
            gamma = (1.0 - cap * static_cast<double>(j)) / rest;
            ok = gamma >= 0.0;
            if (ok && j > 0) ok = gamma * q_tilde[order[j - 1]] >= cap - 1e-12;
            if (ok && j < m) ok = gamma * q_tilde[order[j]] <= cap + 1e-12;
        } else {
            ok = std::abs(cap * static_cast<double>(j) - 1.0) <= 1e-9;
        }
        if (ok) {
            std::vector<double> q(m, 0.0);
            for (std::size_t i = 0; i < m; ++i) {
                q[i] = (rest > 0.0) ? std::min(cap, gamma * q_tilde[i]) : cap;
            }
            if (rest <= 0.0) {
                for (std::size_t i = 0; i < m; ++i) q[i] = (q_tilde[i] > 0.0) ? cap : 0.0;
            }
            // Push rounding residue onto uncapped coordinates.
            double sum = std::accumulate(q.begin(), q.end(), 0.0);
            const double residue = 1.0 - sum;
            if (residue != 0.0) {
                for (std::size_t i = 0; i < m && q[i] >= 0.0; ++i) {
                    if (q[i] > 0.0 && q[i] < cap) {
                        q[i] += residue;
                        break;
                    }
                }
            }
            return q;
        }
        if (j < m) prefix += q_tilde[order[j]];
    }
    throw std::logic_error("kl_project_capped_simplex: no consistent waterline");
}

RobustResult no_regret(const SampleMatrix& updates, double epsilon, double sigma2,
                       ThresholdSpec xi, double eta, std::size_t max_iter,
                       RngState rng, double prefilter_c0) {
    require_rows(updates, 1, "no_regret");
    if (eta <= 0.0 || eta >= 1.0) throw std::invalid_argument("no_regret: eta must be in (0,1)");
    if (sigma2 <= 0.0) throw std::invalid_argument("no_regret: sigma2 must be > 0");
    if (epsilon < 0.0 || epsilon >= 0.5) {
        throw std::invalid_argument("no_regret: epsilon must be in [0, 1/2)");
    }

    const std::size_t m = updates.row_count;
    const std::size_t d = updates.dim;

    // Naive pre-filter: a point far from more than 2*eps*m others cannot be
    // an inlier under the concentration radius.
    std::vector<std::size_t> kept;
    if (m >= 3) {
        std::vector<double> pair_dist;
        pair_dist.reserve(m * (m - 1) / 2);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i + 1; j < m; ++j) {
                pair_dist.push_back(l2_distance(updates.row(i), updates.row(j)));
            }
        }
        std::vector<double> sorted = pair_dist;
        const std::size_t mid = sorted.size() / 2;
        std::nth_element(sorted.begin(),
                         sorted.begin() + static_cast<std::ptrdiff_t>(mid), sorted.end());
        const double sigma_est = sorted[mid] / std::sqrt(2.0 * static_cast<double>(d));
        const double cutoff = prefilter_c0 * sigma_est *
                              std::sqrt(static_cast<double>(d) *
                                        std::log(static_cast<double>(m)));
        const double allowed = 2.0 * epsilon * static_cast<double>(m);
        auto at = [&](std::size_t i, std::size_t j) {
            if (i > j) std::swap(i, j);
            return pair_dist[i * m - i * (i + 1) / 2 + (j - i - 1)];
        };
        for (std::size_t i = 0; i < m; ++i) {
            std::size_t far = 0;
            for (std::size_t j = 0; j < m; ++j) {
                if (j != i && at(i, j) > cutoff) ++far;
            }
            if (static_cast<double>(far) <= allowed) kept.push_back(i);
        }
        if (kept.empty()) {
            throw std::runtime_error("no_regret: pre-filter removed every point");
        }
    } else {
        kept.resize(m);
        std::iota(kept.begin(), kept.end(), 0);
    }

    SampleMatrix pruned(kept.size(), d);
    for (std::size_t i = 0; i < kept.size(); ++i) pruned.set_row(i, updates.row(kept[i]));
    const std::size_t mp = pruned.row_count;
    const double cap = 1.0 / ((1.0 - epsilon) * static_cast<double>(mp));

    WeightedEmpirical we{&pruned, std::vector<double>(mp, 1.0 / static_cast<double>(mp))};

    RobustResult result;
    double best_value = std::numeric_limits<double>::infinity();
    std::vector<double> best_q = we.weights;
    bool converged = false;
    std::size_t it = 0;
    for (; it <= max_iter; ++it) {
        const EigenResult eig =
            top_eigenpair(we, kDefaultEigenTol, kDefaultEigenMaxIter,
                          rng.substream(0x65696732u + it));
        if (eig.value < best_value) {
            best_value = eig.value;
            best_q = we.weights;
        }
        if (eig.value <= xi.xi) {
            best_q = we.weights;
            converged = true;
            break;
        }
        if (it == max_iter) break;

        const std::vector<double> g = quasi_gradient(we, eig.vector);
        const double g_max = *std::max_element(g.begin(), g.end());
        if (g_max <= 0.0) break;
        // Step keeps every multiplier non-negative; the argmax row may hit zero.
        const double step = std::min(eta * epsilon / (2.0 * sigma2 * static_cast<double>(d)),
                                     1.0 / g_max);
        if (step <= 0.0) break; // epsilon = 0: the weights cannot move
        std::vector<double> q_tilde(mp);
        for (std::size_t i = 0; i < mp; ++i) q_tilde[i] = we.weights[i] * (1.0 - step * g[i]);
        we.weights = kl_project_capped_simplex(q_tilde, cap);
    }

    we.weights = best_q;
    result.estimate = weighted_mean(we);
    result.iterations = static_cast<int>(std::min(it, max_iter));
    result.converged = converged;
    result.weights.assign(m, 0.0);
    for (std::size_t i = 0; i < kept.size(); ++i) result.weights[kept[i]] = best_q[i];
    return result;
}

ThresholdSpec compute_threshold(ThresholdVariant variant, const ThresholdInputs& in) {
    if (in.sigma <= 0.0 || in.m == 0 || in.n == 0 || in.d == 0) {
        throw std::invalid_argument("compute_threshold: sigma, d, m, n must be positive");
    }
    if (in.delta <= 0.0 || in.delta >= 1.0) {
        throw std::invalid_argument("compute_threshold: delta must be in (0,1)");
    }
    constexpr double kEpsMin = 1e-6;
    const double eps = std::max(in.epsilon, kEpsMin);
    const double d = static_cast<double>(in.d);
    const double m = static_cast<double>(in.m);
    const double n = static_cast<double>(in.n);
    const double base = in.eta_t * in.eta_t * in.sigma * in.sigma / n;
    const double dim_term = 1.0 + d * std::log(d / in.delta) / (m * eps);

    double xi = 0.0;
    switch (variant) {
    case ThresholdVariant::Eq1:
    case ThresholdVariant::Eq1Alt: {
        const double coef = (variant == ThresholdVariant::Eq1) ? 3.0 + in.eta
                                                               : 6.0 + 2.0 * in.eta;
        const double denom = 1.0 - coef * eps;
        if (denom <= 0.0) {
            throw std::invalid_argument("compute_threshold: epsilon beyond breakdown");
        }
        const double front = (2.0 * in.eta + 7.0) / (3.0 * denom);
        xi = front * front * dim_term * base;
        break;
    }
    case ThresholdVariant::Eq2: {
        if (eps >= 0.5) throw std::invalid_argument("compute_threshold: epsilon beyond breakdown");
        const double denom = (1.0 - 2.0 * eps) * (1.0 - 2.0 * eps);
        xi = (2.0 * (1.0 - eps) / denom) * dim_term * base;
        break;
    }
    case ThresholdVariant::Eq4:
    case ThresholdVariant::Eq5: {
        const double t = eps + std::log(1.0 / in.delta) / n;
        const double c_front = (variant == ThresholdVariant::Eq4) ? in.c1 : in.c3;
        const double c_denom = (variant == ThresholdVariant::Eq4) ? in.c2 : in.c4;
        const double denom = 1.0 - c_denom * t * t;
        if (denom <= 0.0) {
            throw std::invalid_argument("compute_threshold: epsilon beyond breakdown");
        }
        const double term = 1.0 + (d * std::log(d) + std::log(1.0 / in.delta)) / (m * eps);
        xi = (c_front / denom) * term * base;
        break;
    }
    case ThresholdVariant::Eq6:
    case ThresholdVariant::Eq7: {
        const double k = static_cast<double>(std::max<std::size_t>(in.k, 1));
        xi = in.bucket_c * in.eta_t * in.eta_t * (d + k) * in.sigma * in.sigma / (m * n);
        break;
    }
    case ThresholdVariant::Manual:
        if (in.manual_xi < 0.0) {
            throw std::invalid_argument("compute_threshold: manual xi must be >= 0");
        }
        return {in.manual_xi};
    }
    // Derived thresholds never undercut the variance floor: the bucketed
    // variants see bucket means whose per-coordinate variance is k/m of a
    // single client's, the rest see raw client updates.
    double floor = base;
    if (variant == ThresholdVariant::Eq6 || variant == ThresholdVariant::Eq7) {
        floor = base * static_cast<double>(std::max<std::size_t>(in.k, 1)) / m;
    }
    return {std::max(xi, floor)};
}

std::vector<std::vector<std::size_t>> bucketize(std::size_t m, std::size_t k, RngState rng) {
    if (k < 1 || k > m) throw std::invalid_argument("bucketize: k must be in [1, m]");
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    CounterRng gen(rng);
    for (std::size_t i = m; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(gen.next_below(i));
        std::swap(perm[i - 1], perm[j]);
    }
    const std::size_t small = m / k;
    const std::size_t big_count = m % k; // the first m mod k buckets get one extra
    std::vector<std::vector<std::size_t>> buckets(k);
    std::size_t pos = 0;
    for (std::size_t b = 0; b < k; ++b) {
        const std::size_t size = small + (b < big_count ? 1 : 0);
        buckets[b].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                          perm.begin() + static_cast<std::ptrdiff_t>(pos + size));
        pos += size;
    }
    return buckets;
}

std::size_t default_bucket_count(double epsilon, std::size_t m, double delta,
                                 bool alt_variant) {
    if (m == 0) throw std::invalid_argument("default_bucket_count: m must be >= 1");
    if (delta <= 0.0 || delta > 1.0) {
        throw std::invalid_argument("default_bucket_count: delta must be in (0, 1]");
    }
    const double scale = alt_variant ? 1.0 : 2.0;
    const double raw = std::floor(scale * epsilon * static_cast<double>(m) +
                                  std::log(1.0 / delta));
    if (raw < 1.0) return 1;
    if (raw > static_cast<double>(m)) return m;
    return static_cast<std::size_t>(raw);
}

namespace {

// Run filtering or no-regret over coordinate intervals and concatenate.
ParamVector run_split_robust(const EstimatorConfig& cfg, const SampleMatrix& updates,
                             ThresholdVariant variant, std::size_t k_buckets,
                             double inner_epsilon, std::size_t n_for_threshold,
                             double sigma2_for_mw, RngState rng) {
    const std::size_t d = updates.dim;
    const std::size_t width =
        (cfg.interval_size == 0 || cfg.interval_size > d) ? d : cfg.interval_size;
    const auto ranges = split_intervals(d, width);

    ParamVector out(d, 0.0);
    for (std::size_t s = 0; s < ranges.size(); ++s) {
        const IndexRange range = ranges[s];
        const SampleMatrix slice = slice_columns(updates, range);

        ThresholdInputs tin;
        tin.epsilon = cfg.epsilon;
        tin.eta = cfg.eta;
        tin.sigma = cfg.sigma;
        tin.d = range.length();
        tin.m = updates.row_count;
        tin.n = n_for_threshold;
        tin.delta = cfg.delta;
        tin.eta_t = cfg.eta_t;
        tin.k = k_buckets;
        tin.c1 = cfg.c1;
        tin.c2 = cfg.c2;
        tin.c3 = cfg.c3;
        tin.c4 = cfg.c4;
        tin.bucket_c = cfg.bucket_c;
        tin.manual_xi = cfg.manual_xi;
        const ThresholdSpec xi = compute_threshold(variant, tin);

        RngState slice_rng = rng.substream(0x736c6900u + s);
        RobustResult res;
        const EstimatorKind kind = (cfg.kind == EstimatorKind::Bucketing)
                                       ? cfg.bucketing_inner
                                       : cfg.kind;
        if (kind == EstimatorKind::Filtering) {
            std::vector<double> q0(slice.row_count,
                                   1.0 / static_cast<double>(slice.row_count));
            res = filtering(slice, q0, xi, cfg.max_iter, slice_rng);
        } else {
            res = no_regret(slice, inner_epsilon, sigma2_for_mw, xi, cfg.eta,
                            cfg.max_iter, slice_rng, cfg.prefilter_c0);
        }
        for (std::size_t j = 0; j < range.length(); ++j) {
            out[range.begin + j] = res.estimate[j];
        }
    }
    return out;
}

} // namespace

std::size_t resolve_bucket_count(const EstimatorConfig& cfg, std::size_t m) {
    std::size_t k = cfg.bucket_count_override;
    if (k == 0) {
        k = default_bucket_count(cfg.epsilon, m, cfg.delta, cfg.bucket_count_alt);
    }
    return std::clamp<std::size_t>(k, 1, m);
}

ParamVector aggregate_bucket_means(const EstimatorConfig& cfg, const SampleMatrix& means,
                                   std::size_t m_total, RngState rng) {
    require_rows(means, 1, "aggregate_bucket_means");
    if (cfg.bucketing_inner != EstimatorKind::Filtering &&
        cfg.bucketing_inner != EstimatorKind::NoRegret) {
        throw std::invalid_argument(
            "aggregate_bucket_means: inner kind must be filtering or no-regret");
    }
    const std::size_t k = means.row_count;
    const double m = static_cast<double>(m_total);
    // Corruption level among bucket means: at most eps*m buckets can be hit.
    const double inner_eps = std::min(0.49, cfg.epsilon * m / static_cast<double>(k));
    const ThresholdVariant variant =
        (cfg.bucketing_inner == EstimatorKind::Filtering) ? ThresholdVariant::Eq7
                                                          : ThresholdVariant::Eq6;
    const double sigma2_mw = cfg.eta_t * cfg.eta_t * static_cast<double>(k) *
                             cfg.sigma * cfg.sigma /
                             (m * static_cast<double>(cfg.samples_per_client));
    return run_split_robust(cfg, means, variant, k, inner_eps,
                            cfg.samples_per_client, sigma2_mw, rng);
}

ParamVector bucketed_aggregate(const EstimatorConfig& cfg, const SampleMatrix& updates,
                               RngState rng) {
    require_rows(updates, 1, "bucketed_aggregate");
    const std::size_t m = updates.row_count;
    const std::size_t k = resolve_bucket_count(cfg, m);

    const auto assignment = bucketize(m, k, rng.substream(0x62756b74u));
    SampleMatrix means(k, updates.dim);
    for (std::size_t b = 0; b < k; ++b) {
        auto dst = means.row(b);
        for (std::size_t idx : assignment[b]) axpy(1.0, updates.row(idx), dst);
        for (double& v : dst) v /= static_cast<double>(assignment[b].size());
    }
    return aggregate_bucket_means(cfg, means, m, rng.substream(0x62696e6eu));
}

ParamVector aggregate(const EstimatorConfig& cfg, const SampleMatrix& updates,
                      RngState rng) {
    require_rows(updates, 1, "aggregate");
    if (cfg.epsilon < 0.0 || cfg.epsilon >= 0.5) {
        throw std::invalid_argument("aggregate: epsilon must be in [0, 1/2)");
    }
    if (cfg.epsilon == 0.0 && cfg.kind != EstimatorKind::Mean) return mean(updates);

    switch (cfg.kind) {
    case EstimatorKind::Mean:
        return mean(updates);
    case EstimatorKind::CoordMedian:
        return coord_median(updates);
    case EstimatorKind::CoordTrimmedMean:
        return coord_trimmed_mean(updates, cfg.beta);
    case EstimatorKind::GeometricMedian:
        return geometric_median(updates);
    case EstimatorKind::Krum:
        return krum(updates, cfg.krum_f);
    case EstimatorKind::Bulyan:
        return bulyan(updates, cfg.krum_f, cfg.bulyan_inner);
    case EstimatorKind::Filtering: {
        ThresholdVariant variant = cfg.threshold_variant;
        if (variant == ThresholdVariant::Eq1 || variant == ThresholdVariant::Eq1Alt ||
            variant == ThresholdVariant::Eq4 || variant == ThresholdVariant::Eq6) {
            variant = ThresholdVariant::Eq2; // those scalings belong to no-regret
        }
        const double sigma2 = cfg.eta_t * cfg.eta_t * cfg.sigma * cfg.sigma /
                              static_cast<double>(cfg.samples_per_client);
        return run_split_robust(cfg, updates, variant, updates.row_count, cfg.epsilon,
                                cfg.samples_per_client, sigma2, rng);
    }
    case EstimatorKind::NoRegret: {
        ThresholdVariant variant = cfg.threshold_variant;
        if (variant == ThresholdVariant::Eq2 || variant == ThresholdVariant::Eq5 ||
            variant == ThresholdVariant::Eq7) {
            variant = ThresholdVariant::Eq1;
        }
        const double sigma2 = cfg.eta_t * cfg.eta_t * cfg.sigma * cfg.sigma /
                              static_cast<double>(cfg.samples_per_client);
        return run_split_robust(cfg, updates, variant, updates.row_count, cfg.epsilon,
                                cfg.samples_per_client, sigma2, rng);
    }
    case EstimatorKind::Bucketing:
        return bucketed_aggregate(cfg, updates, rng);
    }
    throw std::invalid_argument("aggregate: unknown estimator kind");
}

EstimatorKind estimator_kind_from_string(const std::string& name) {
    if (name == "mean") return EstimatorKind::Mean;
    if (name == "coord-median") return EstimatorKind::CoordMedian;
    if (name == "coord-trimmed-mean") return EstimatorKind::CoordTrimmedMean;
    if (name == "geometric-median") return EstimatorKind::GeometricMedian;
    if (name == "krum") return EstimatorKind::Krum;
    if (name == "bulyan") return EstimatorKind::Bulyan;
    if (name == "filtering") return EstimatorKind::Filtering;
    if (name == "no-regret") return EstimatorKind::NoRegret;
    if (name == "bucketing") return EstimatorKind::Bucketing;
    throw std::invalid_argument("unknown estimator kind: " + name);
}

std::string to_string(EstimatorKind kind) {
    switch (kind) {
    case EstimatorKind::Mean: return "mean";
    case EstimatorKind::CoordMedian: return "coord-median";
    case EstimatorKind::CoordTrimmedMean: return "coord-trimmed-mean";
    case EstimatorKind::GeometricMedian: return "geometric-median";
    case EstimatorKind::Krum: return "krum";
    case EstimatorKind::Bulyan: return "bulyan";
    case EstimatorKind::Filtering: return "filtering";
    case EstimatorKind::NoRegret: return "no-regret";
    case EstimatorKind::Bucketing: return "bucketing";
    }
    return "unknown";
}

ThresholdVariant threshold_variant_from_string(const std::string& name) {
    if (name == "eq1") return ThresholdVariant::Eq1;
    if (name == "eq1-alt") return ThresholdVariant::Eq1Alt;
    if (name == "eq2") return ThresholdVariant::Eq2;
    if (name == "eq4") return ThresholdVariant::Eq4;
    if (name == "eq5") return ThresholdVariant::Eq5;
    if (name == "eq6") return ThresholdVariant::Eq6;
    if (name == "eq7") return ThresholdVariant::Eq7;
    if (name == "manual") return ThresholdVariant::Manual;
    throw std::invalid_argument("unknown threshold variant: " + name);
}

std::string to_string(ThresholdVariant variant) {
    switch (variant) {
    case ThresholdVariant::Eq1: return "eq1";
    case ThresholdVariant::Eq1Alt: return "eq1-alt";
    case ThresholdVariant::Eq2: return "eq2";
    case ThresholdVariant::Eq4: return "eq4";
    case ThresholdVariant::Eq5: return "eq5";
    case ThresholdVariant::Eq6: return "eq6";
    case ThresholdVariant::Eq7: return "eq7";
    case ThresholdVariant::Manual: return "manual";
    }
    return "unknown";
}

} // namespace byzagg
