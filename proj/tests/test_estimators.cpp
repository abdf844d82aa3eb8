#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "byzagg/estimators.hpp"
#include "byzagg/rng.hpp"

#include "oracles.hpp"

using namespace byzagg;

namespace {

SampleMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    SampleMatrix x(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) x.set_row(i, rows[i]);
    return x;
}

SampleMatrix gaussian_rows(std::size_t m, std::size_t d, RngState rng) {
    SampleMatrix x(m, d);
    CounterRng gen(rng);
    for (double& v : x.data) v = gen.next_gaussian();
    return x;
}

} // namespace

TEST_CASE("mean and coord_median basics") {
    CHECK(mean(from_rows({{0.0, 0.0}, {2.0, 2.0}}))[0] == doctest::Approx(1.0));
    CHECK(coord_median(from_rows({{1.0}, {2.0}, {100.0}}))[0] == doctest::Approx(2.0));
}

TEST_CASE("coord_trimmed_mean: trims the declared count per side") {
    const SampleMatrix x = from_rows({{0.0}, {1.0}, {2.0}, {3.0}, {100.0}});
    CHECK(coord_trimmed_mean(x, 0.0)[0] == doctest::Approx(mean(x)[0]));
    CHECK(coord_trimmed_mean(x, 0.2)[0] == doctest::Approx(2.0));
    CHECK(coord_trimmed_mean_count(x, 1)[0] == doctest::Approx(2.0));

    const SampleMatrix sym = from_rows({{-3.0}, {-1.0}, {0.0}, {1.0}, {3.0}});
    CHECK(coord_trimmed_mean(sym, 0.2)[0] == doctest::Approx(mean(sym)[0]).epsilon(1e-12));

    CHECK_THROWS_AS(coord_trimmed_mean(x, 0.5), std::invalid_argument);
}

TEST_CASE("geometric_median: symmetric and collinear instances") {
    // Two points: symmetric initialization returns the midpoint.
    const ParamVector two = geometric_median(from_rows({{0.0, 0.0}, {2.0, 0.0}}));
    CHECK(two[0] == doctest::Approx(1.0).epsilon(1e-6));

    // Equilateral triangle: minimizer is the centroid.
    const double h = std::sqrt(3.0);
    const SampleMatrix tri = from_rows({{-1.0, 0.0}, {1.0, 0.0}, {0.0, h}});
    const ParamVector c = geometric_median(tri);
    CHECK(c[0] == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(c[1] == doctest::Approx(h / 3.0).epsilon(1e-6));

    // Collinear with repeated point: the 1-D median.
    const ParamVector line = geometric_median(from_rows({{0.0}, {0.0}, {10.0}}));
    CHECK(line[0] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("krum: selection properties and oracle agreement") {
    // Identical rows: returns that row.
    const SampleMatrix same = from_rows({{5.0}, {5.0}, {5.0}});
    CHECK(krum(same, 0)[0] == 5.0);

    // A far outlier never wins against a tight cluster.
    const SampleMatrix mix =
        from_rows({{0.0}, {0.05}, {0.1}, {-0.05}, {50.0}});
    const ParamVector pick = krum(mix, 1);
    CHECK(std::abs(pick[0]) < 1.0);

    // Output is always one of the input rows.
    CounterRng gen(RngState{400, 0});
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t m = 4 + gen.next_below(5);
        const std::size_t f = gen.next_below(m - 3);
        const SampleMatrix x = gaussian_rows(m, 3, RngState{401, (std::uint64_t)trial});
        CHECK(krum_select(x, f) == oracle::krum_enumerate(x, f));
    }

    CHECK_THROWS_AS(krum(from_rows({{0.0}, {1.0}}), 0), std::invalid_argument);
}

TEST_CASE("bulyan: collapse cases and oracle agreement") {
    const SampleMatrix same = from_rows({{2.0}, {2.0}, {2.0}});
    CHECK(bulyan(same, 0)[0] == doctest::Approx(2.0));

    // f = 0: selection keeps all rows, no trimming -> plain mean.
    const SampleMatrix x = from_rows({{0.0}, {1.0}, {5.0}});
    CHECK(bulyan(x, 0)[0] == doctest::Approx(mean(x)[0]));

    // Cluster + one outlier at f = 1 stays inside the cluster hull.
    SampleMatrix mix = gaussian_rows(7, 2, RngState{410, 0});
    mix.set_row(6, ParamVector{100.0, 100.0});
    const ParamVector out = bulyan(mix, 1);
    CHECK(l2_norm(out) < 5.0);

    for (int trial = 0; trial < 20; ++trial) {
        const SampleMatrix y = gaussian_rows(7, 2, RngState{411, (std::uint64_t)trial});
        CHECK(l2_distance(bulyan(y, 1), oracle::bulyan_enumerate(y, 1)) < 1e-12);
    }

    CHECK_THROWS_AS(bulyan(from_rows({{0.0}, {1.0}, {2.0}}), 1), std::invalid_argument);
}

TEST_CASE("filtering: early exit, one-shot outlier removal, degenerate inputs") {
    // Threshold met at entry: weighted mean with zero iterations.
    const SampleMatrix tight = from_rows({{1.0}, {1.0}, {1.0}});
    const RobustResult r0 = filtering(tight, {}, ThresholdSpec{1.0}, 100, RngState{1, 0});
    CHECK(r0.iterations == 0);
    CHECK(r0.estimate[0] == doctest::Approx(1.0));

    // 9 at 0, 1 at 100: outlier carries the max quasi-gradient, dies in
    // iteration one, leaving exactly the inlier mean.
    std::vector<std::vector<double>> rows(10, {0.0});
    rows[9] = {100.0};
    const RobustResult r1 =
        filtering(from_rows(rows), {}, ThresholdSpec{1.0}, 100, RngState{2, 0});
    CHECK(r1.iterations == 1);
    CHECK(r1.estimate[0] == doctest::Approx(0.0));
    CHECK(r1.weights[9] == 0.0);

    // m = 1 returns the point.
    const RobustResult r2 =
        filtering(from_rows({{7.0}}), {}, ThresholdSpec{0.0}, 100, RngState{3, 0});
    CHECK(r2.estimate[0] == doctest::Approx(7.0));

    // Unattainable threshold on a symmetric pair kills all weight.
    CHECK_THROWS_AS(filtering(from_rows({{0.0}, {1.0}}), {}, ThresholdSpec{1e-12}, 100,
                              RngState{4, 0}),
                    std::runtime_error);
}

TEST_CASE("filtering: weight monotonicity and per-iteration removal") {
    SampleMatrix x = gaussian_rows(40, 3, RngState{420, 0});
    for (std::size_t i = 36; i < 40; ++i) {
        x.set_row(i, ParamVector{30.0 + static_cast<double>(i), -20.0, 10.0});
    }
    const RobustResult r = filtering(x, {}, ThresholdSpec{2.0}, 100, RngState{421, 0});
    std::size_t zeroed = 0;
    for (double w : r.weights) {
        CHECK(w >= 0.0);
        if (w == 0.0) ++zeroed;
    }
    // At least one row is zeroed per completed iteration.
    CHECK(zeroed >= static_cast<std::size_t>(r.iterations));
    CHECK(r.converged);
    // The planted outliers end up with negligible total weight: most rows are
    // removed outright, a straggler may keep a multiplicatively crushed residue.
    double outlier_weight = 0.0;
    for (std::size_t i = 36; i < 40; ++i) outlier_weight += r.weights[i];
    CHECK(outlier_weight < 0.05);
}

TEST_CASE("no_regret: clean cluster, symmetric fixed point, planted outliers") {
    // Clean cluster with a generous threshold: effectively the sample mean.
    const SampleMatrix clean = gaussian_rows(50, 2, RngState{430, 0});
    const RobustResult r0 =
        no_regret(clean, 0.1, 1.0, ThresholdSpec{5.0}, 0.5, 200, RngState{431, 0});
    CHECK(r0.converged);
    CHECK(l2_distance(r0.estimate, mean(clean)) < 0.3);

    // Symmetric pair: all quasi-gradients equal, uniform stays fixed, and the
    // best iterate is the midpoint even though the variance never drops.
    const RobustResult r1 = no_regret(from_rows({{-1.0}, {1.0}}), 0.1, 1.0,
                                      ThresholdSpec{0.5}, 0.5, 20, RngState{432, 0});
    CHECK_FALSE(r1.converged);
    CHECK(r1.estimate[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(r1.weights[0] == doctest::Approx(r1.weights[1]));

    // 10% outliers at distance 50: estimate tracks the inlier mean.
    SampleMatrix mix = gaussian_rows(50, 2, RngState{433, 0});
    for (std::size_t i = 45; i < 50; ++i) mix.set_row(i, ParamVector{50.0, 50.0});
    SampleMatrix inliers(45, 2);
    for (std::size_t i = 0; i < 45; ++i) inliers.set_row(i, mix.row(i));
    const RobustResult r2 =
        no_regret(mix, 0.1, 1.0, ThresholdSpec{3.0}, 0.5, 200, RngState{434, 0});
    CHECK(l2_distance(r2.estimate, mean(inliers)) < 0.2);
}

TEST_CASE("no_regret: weights stay inside the capped simplex") {
    SampleMatrix x = gaussian_rows(30, 2, RngState{440, 0});
    for (std::size_t i = 27; i < 30; ++i) x.set_row(i, ParamVector{20.0, -20.0});
    const double epsilon = 0.1;
    const RobustResult r =
        no_regret(x, epsilon, 1.0, ThresholdSpec{3.0}, 0.5, 200, RngState{441, 0});
    double sum = 0.0;
    std::size_t support = 0;
    for (double w : r.weights) {
        CHECK(w >= 0.0);
        sum += w;
        if (w > 0.0) ++support;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    // Cap uses the post-prefilter support size m'.
    const double cap = 1.0 / ((1.0 - epsilon) * static_cast<double>(support));
    for (double w : r.weights) CHECK(w <= cap + 1e-12);
}

TEST_CASE("kl_project_capped_simplex: closed form and grid oracle") {
    // Already feasible: unchanged.
    const std::vector<double> uniform = {0.25, 0.25, 0.25, 0.25};
    const auto same = kl_project_capped_simplex(uniform, 0.5);
    for (std::size_t i = 0; i < 4; ++i) CHECK(same[i] == doctest::Approx(0.25));

    // Hand-solved instance: cap 0.6 binds the large coordinate, gamma = 4.
    const auto two = kl_project_capped_simplex({0.9, 0.1}, 0.6);
    CHECK(two[0] == doctest::Approx(0.6));
    CHECK(two[1] == doctest::Approx(0.4));

    CHECK_THROWS_AS(kl_project_capped_simplex({0.5, 0.5}, 0.3), std::invalid_argument);

    CounterRng gen(RngState{450, 0});
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> q(4);
        for (double& v : q) v = 0.05 + gen.next_unit();
        const double cap = 0.3 + 0.2 * gen.next_unit();
        const auto mine = kl_project_capped_simplex(q, cap);
        const auto grid = oracle::kl_project_grid4(q, cap);
        CHECK(oracle::kl_divergence(mine, q) <= oracle::kl_divergence(grid, q) + 1e-3);
    }
}

TEST_CASE("compute_threshold: worked arithmetic and shape") {
    ThresholdInputs in;
    in.epsilon = 0.2;
    in.sigma = 1.0;
    in.d = 1;
    in.m = 100;
    in.n = 1;
    in.delta = 0.5;
    in.eta_t = 1.0;
    const double xi2 = compute_threshold(ThresholdVariant::Eq2, in).xi;
    // (2*0.8/0.36) * (1 + log(2)/20)
    CHECK(xi2 == doctest::Approx((1.6 / 0.36) * (1.0 + std::log(2.0) / 20.0)));
    CHECK(xi2 == doctest::Approx(4.598).epsilon(1e-3));

    // Bucketed variant is linear in (d + k).
    in.k = 10;
    const double a = compute_threshold(ThresholdVariant::Eq7, in).xi;
    in.k = 30;
    const double b = compute_threshold(ThresholdVariant::Eq7, in).xi;
    in.k = 10;
    CHECK(b / a == doctest::Approx((1.0 + 30.0) / (1.0 + 10.0)));

    // Monotone increasing in sigma^2 and d.
    in.sigma = 2.0;
    CHECK(compute_threshold(ThresholdVariant::Eq2, in).xi > xi2);
    in.sigma = 1.0;
    in.d = 64;
    CHECK(compute_threshold(ThresholdVariant::Eq2, in).xi > xi2);

    // epsilon -> 0 is clamped, not a division by zero.
    in.d = 1;
    in.epsilon = 0.0;
    const double clamped = compute_threshold(ThresholdVariant::Eq2, in).xi;
    CHECK(std::isfinite(clamped));
    CHECK(clamped > 0.0);

    // Manual passes through.
    in.manual_xi = 1.25;
    CHECK(compute_threshold(ThresholdVariant::Manual, in).xi == 1.25);

    // Derived variants never fall below the variance floor.
    in.epsilon = 0.2;
    in.n = 1000000;
    CHECK(compute_threshold(ThresholdVariant::Eq2, in).xi >=
          in.eta_t * in.eta_t * in.sigma * in.sigma / static_cast<double>(in.n));
}

TEST_CASE("bucketize: sizes, disjointness, coverage") {
    const auto singles = bucketize(5, 5, RngState{460, 0});
    CHECK(singles.size() == 5);
    for (const auto& b : singles) CHECK(b.size() == 1);

    const auto one = bucketize(5, 1, RngState{460, 1});
    REQUIRE(one.size() == 1);
    CHECK(one[0].size() == 5);

    const auto three = bucketize(10, 3, RngState{460, 2});
    std::vector<std::size_t> sizes;
    for (const auto& b : three) sizes.push_back(b.size());
    std::sort(sizes.begin(), sizes.end());
    CHECK(sizes == std::vector<std::size_t>{3, 3, 4});

    std::vector<bool> seen(10, false);
    for (const auto& b : three) {
        for (std::size_t id : b) {
            CHECK_FALSE(seen[id]);
            seen[id] = true;
        }
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](bool s) { return s; }));

    CHECK_THROWS_AS(bucketize(5, 6, RngState{460, 3}), std::invalid_argument);
}

TEST_CASE("default_bucket_count: arithmetic and clamping") {
    CHECK(default_bucket_count(0.2, 100, std::exp(-1.0)) == 41);
    CHECK(default_bucket_count(0.0, 100, 1.0) == 1);
    CHECK(default_bucket_count(0.4, 100, 1.0) == 80);
    // Alternative variant uses eps*m instead of 2*eps*m.
    CHECK(default_bucket_count(0.2, 100, std::exp(-1.0), true) == 21);
}

TEST_CASE("aggregate: dispatch, epsilon-0 short circuit, splitting") {
    EstimatorConfig cfg;
    cfg.kind = EstimatorKind::Mean;
    const SampleMatrix x = from_rows({{0.0, 0.0}, {2.0, 2.0}});
    CHECK(aggregate(cfg, x, RngState{1, 0})[0] == doctest::Approx(1.0));

    // Filtering via dispatch with a manual threshold: 90 points at 0, 10
    // planted at 50, xi = 1, eps = 0.1.
    std::vector<std::vector<double>> rows(100, {0.0});
    for (int i = 90; i < 100; ++i) rows[i] = {50.0};
    EstimatorConfig fil;
    fil.kind = EstimatorKind::Filtering;
    fil.epsilon = 0.1;
    fil.threshold_variant = ThresholdVariant::Manual;
    fil.manual_xi = 1.0;
    const ParamVector est = aggregate(fil, from_rows(rows), RngState{2, 0});
    CHECK(std::abs(est[0]) < 0.2);

    // eps = 0 falls back to the plain mean for every robust kind.
    EstimatorConfig zero;
    zero.epsilon = 0.0;
    const SampleMatrix y = gaussian_rows(20, 3, RngState{3, 0});
    const ParamVector ref = mean(y);
    for (EstimatorKind kind :
         {EstimatorKind::CoordMedian, EstimatorKind::Krum, EstimatorKind::Filtering,
          EstimatorKind::NoRegret, EstimatorKind::Bucketing}) {
        zero.kind = kind;
        CHECK(l2_distance(aggregate(zero, y, RngState{4, 0}), ref) == 0.0);
    }

    // Interval splitting returns the concatenation of per-range estimates.
    fil.interval_size = 1;
    const ParamVector split = aggregate(fil, from_rows(rows), RngState{5, 0});
    CHECK(std::abs(split[0]) < 0.2);
}

TEST_CASE("aggregate: permutation invariance and translation equivariance") {
    CounterRng gen(RngState{470, 0});
    SampleMatrix x = gaussian_rows(24, 3, RngState{471, 0});
    for (std::size_t i = 21; i < 24; ++i) x.set_row(i, ParamVector{8.0, -8.0, 8.0});

    SampleMatrix perm(24, 3);
    std::vector<std::size_t> order(24);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i < 24; ++i) {
        const std::size_t j = i + gen.next_below(24 - i);
        std::swap(order[i], order[j]);
    }
    for (std::size_t i = 0; i < 24; ++i) perm.set_row(i, x.row(order[i]));

    const ParamVector shift{1.5, -2.0, 0.5};
    SampleMatrix shifted = x;
    for (std::size_t i = 0; i < 24; ++i) {
        auto row = shifted.row(i);
        for (std::size_t j = 0; j < 3; ++j) row[j] += shift[j];
    }

    EstimatorConfig cfg;
    cfg.epsilon = 0.15;
    cfg.sigma = 1.0;
    cfg.threshold_variant = ThresholdVariant::Manual;
    cfg.manual_xi = 3.0;
    for (EstimatorKind kind :
         {EstimatorKind::Mean, EstimatorKind::CoordMedian, EstimatorKind::CoordTrimmedMean,
          EstimatorKind::GeometricMedian, EstimatorKind::Filtering,
          EstimatorKind::NoRegret}) {
        cfg.kind = kind;
        const ParamVector base = aggregate(cfg, x, RngState{472, 0});
        const ParamVector permuted = aggregate(cfg, perm, RngState{472, 0});
        CHECK(l2_distance(base, permuted) < 1e-9);
        const ParamVector moved = aggregate(cfg, shifted, RngState{472, 0});
        CHECK(l2_distance(moved, add(base, shift)) < 1e-7);
    }
}

TEST_CASE("aggregate: krum and bulyan stay in the convex hull") {
    const SampleMatrix x = gaussian_rows(11, 2, RngState{480, 0});
    double max_norm = 0.0;
    for (std::size_t i = 0; i < x.row_count; ++i) {
        max_norm = std::max(max_norm, l2_norm(x.row(i)));
    }
    CHECK(l2_norm(krum(x, 2)) <= max_norm + 1e-12);
    CHECK(l2_norm(bulyan(x, 2)) <= max_norm + 1e-12);
}

TEST_CASE("breakdown sanity: planted corruption stays bounded") {
    // eps = 0.4 worth of arbitrary large rows; estimates stay near the inliers.
    SampleMatrix x = gaussian_rows(50, 2, RngState{490, 0});
    for (std::size_t i = 30; i < 50; ++i) {
        x.set_row(i, ParamVector{1e6, -1e6});
    }
    EstimatorConfig cfg;
    cfg.epsilon = 0.4;
    cfg.threshold_variant = ThresholdVariant::Manual;
    cfg.manual_xi = 3.0;
    for (EstimatorKind kind : {EstimatorKind::Filtering, EstimatorKind::NoRegret}) {
        cfg.kind = kind;
        const ParamVector est = aggregate(cfg, x, RngState{491, 0});
        CHECK(l2_norm(est) < 10.0);
    }
}

TEST_CASE("bucketed_aggregate: constant updates and singleton equivalence") {
    SampleMatrix same(12, 2);
    for (std::size_t i = 0; i < 12; ++i) same.set_row(i, ParamVector{3.0, -1.0});
    EstimatorConfig cfg;
    cfg.kind = EstimatorKind::Bucketing;
    cfg.epsilon = 0.1;
    cfg.threshold_variant = ThresholdVariant::Manual;
    cfg.manual_xi = 1.0;
    const ParamVector u = bucketed_aggregate(cfg, same, RngState{500, 0});
    CHECK(u[0] == doctest::Approx(3.0));
    CHECK(u[1] == doctest::Approx(-1.0));
}

TEST_CASE("string round trips") {
    for (EstimatorKind kind :
         {EstimatorKind::Mean, EstimatorKind::CoordMedian, EstimatorKind::CoordTrimmedMean,
          EstimatorKind::GeometricMedian, EstimatorKind::Krum, EstimatorKind::Bulyan,
          EstimatorKind::Filtering, EstimatorKind::NoRegret, EstimatorKind::Bucketing}) {
        CHECK(estimator_kind_from_string(to_string(kind)) == kind);
    }
    for (ThresholdVariant v :
         {ThresholdVariant::Eq1, ThresholdVariant::Eq1Alt, ThresholdVariant::Eq2,
          ThresholdVariant::Eq4, ThresholdVariant::Eq5, ThresholdVariant::Eq6,
          ThresholdVariant::Eq7, ThresholdVariant::Manual}) {
        CHECK(threshold_variant_from_string(to_string(v)) == v);
    }
    CHECK_THROWS_AS(estimator_kind_from_string("bogus"), std::invalid_argument);
}
