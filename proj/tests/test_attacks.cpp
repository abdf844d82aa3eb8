#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "byzagg/attacks.hpp"
#include "byzagg/estimators.hpp"
#include "byzagg/rng.hpp"

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

RoundContext make_ctx(RngState rng) {
    RoundContext ctx;
    ctx.rng = rng;
    return ctx;
}

} // namespace

TEST_CASE("apply_attack: none leaves input bit-identical") {
    const SampleMatrix x = gaussian_rows(10, 3, RngState{600, 0});
    AttackSpec spec;
    spec.kind = AttackKind::None;
    const SampleMatrix out = apply_attack(spec, x, make_ctx(RngState{601, 0}));
    CHECK(out.data == x.data);
}

TEST_CASE("apply_attack: honest rows untouched, exactly floor(eps m) modified") {
    const std::size_t m = 20;
    const SampleMatrix x = gaussian_rows(m, 4, RngState{610, 0});
    AttackSpec spec;
    spec.kind = AttackKind::Ima;
    spec.epsilon = 0.25;
    spec.scale = 2.0;
    spec.malicious_ids = pick_malicious_ids(spec.epsilon, m, RngState{611, 0});
    CHECK(spec.malicious_ids.size() == 5);

    const SampleMatrix out = apply_attack(spec, x, make_ctx(RngState{612, 0}));
    std::size_t changed = 0;
    std::vector<bool> is_mal(m, false);
    for (std::size_t id : spec.malicious_ids) is_mal[id] = true;
    for (std::size_t i = 0; i < m; ++i) {
        const bool same = out.row_copy(i) == x.row_copy(i);
        if (!same) ++changed;
        if (!is_mal[i]) CHECK(same);
    }
    CHECK(changed <= spec.malicious_ids.size());

    // Determinism: same inputs, same bytes.
    const SampleMatrix again = apply_attack(spec, x, make_ctx(RngState{612, 0}));
    CHECK(again.data == out.data);
}

TEST_CASE("pick_malicious_ids: count, range, determinism") {
    const auto ids = pick_malicious_ids(0.2, 50, RngState{620, 0});
    CHECK(ids.size() == 10);
    for (std::size_t i = 1; i < ids.size(); ++i) CHECK(ids[i - 1] < ids[i]);
    CHECK(ids.back() < 50);
    CHECK(pick_malicious_ids(0.2, 50, RngState{620, 0}) == ids);
    CHECK(pick_malicious_ids(0.0, 50, RngState{620, 0}).empty());
    CHECK_THROWS_AS(pick_malicious_ids(0.5, 50, RngState{620, 0}), std::invalid_argument);
}

TEST_CASE("ima_row: opposes the honest mean") {
    const SampleMatrix honest = from_rows({{1.0, 2.0}, {3.0, 0.0}});
    const ParamVector r = ima_row(honest, 5.0);
    CHECK(r[0] == doctest::Approx(-10.0));
    CHECK(r[1] == doctest::Approx(-5.0));
    CHECK(dot(r, mean(honest)) < 0.0);

    CHECK(l2_norm(ima_row(from_rows({{1.0}, {-1.0}}), 5.0)) == 0.0);
    CHECK(l2_norm(ima_row(honest, 0.0)) == 0.0);
}

TEST_CASE("tma_row: lands outside the hull opposing the mean sign") {
    // Values {1,2,3}, mean > 0: placed below min by margin * range = 0.2.
    const ParamVector r = tma_row(from_rows({{1.0}, {2.0}, {3.0}}), 0.1);
    CHECK(r[0] == doctest::Approx(0.8));

    // Degenerate range collapses to the common value.
    CHECK(tma_row(from_rows({{0.0}, {0.0}}), 0.1)[0] == 0.0);

    // Trimmed mean under this attack shifts opposite the honest mean's sign.
    SampleMatrix x = gaussian_rows(20, 1, RngState{630, 0});
    for (std::size_t i = 0; i < 20; ++i) x.row(i)[0] += 2.0; // positive mean
    SampleMatrix attacked(24, 1);
    for (std::size_t i = 0; i < 20; ++i) attacked.set_row(i, x.row(i));
    const ParamVector bad = tma_row(x, 0.1);
    for (std::size_t i = 20; i < 24; ++i) attacked.set_row(i, bad);
    CHECK(coord_trimmed_mean(attacked, 4.0 / 24.0)[0] < mean(x)[0]);
}

TEST_CASE("ka_row: Krum still selects a malicious row") {
    const std::size_t m = 12;
    SampleMatrix x = gaussian_rows(m, 3, RngState{640, 0});
    for (std::size_t i = 0; i < m; ++i) x.row(i)[0] += 3.0; // cluster off origin
    // f coinciding malicious rows: their zero mutual distances beat the honest
    // cluster's spread in the Krum score.
    const std::vector<std::size_t> mal = {7, 8, 9, 10, 11};

    const ParamVector row = ka_row(x, mal, 5);
    SampleMatrix attacked = x;
    for (std::size_t id : mal) attacked.set_row(id, row);
    const std::size_t pick = krum_select(attacked, 5);
    CHECK(pick >= 7);

    // The common row points against the honest mean.
    SampleMatrix honest(7, 3);
    for (std::size_t i = 0; i < 7; ++i) honest.set_row(i, x.row(i));
    CHECK(dot(row, mean(honest)) <= 0.0);
}

TEST_CASE("mra_row: replacement algebra") {
    const ParamVector global{1.0, 1.0};
    const ParamVector target{3.0, -1.0};
    const ParamVector r = mra_row(global, target, 2.0);
    CHECK(r[0] == doctest::Approx(4.0));
    CHECK(r[1] == doctest::Approx(-4.0));
    CHECK(l2_norm(mra_row(global, global, 5.0)) == 0.0);

    // boost = m with zero honest updates: the mean aggregate is exactly
    // target - global, so w + g_hat = target.
    const std::size_t m = 10;
    SampleMatrix updates(m, 2); // all zero honest rows
    AttackSpec spec;
    spec.kind = AttackKind::Mra;
    spec.epsilon = 0.1;
    spec.malicious_ids = {0};
    spec.mra_target = target;
    spec.boost = static_cast<double>(m);
    RoundContext ctx = make_ctx(RngState{650, 0});
    ctx.global = &global;
    const SampleMatrix attacked = apply_attack(spec, updates, ctx);
    const ParamVector g_hat = mean(attacked);
    CHECK(add(global, g_hat) == target);
}

TEST_CASE("label-noise: flips the client's own update") {
    const SampleMatrix x = gaussian_rows(6, 2, RngState{660, 0});
    AttackSpec spec;
    spec.kind = AttackKind::LabelNoise;
    spec.epsilon = 0.34;
    spec.malicious_ids = {1, 4};
    spec.flip_prob = 1.0;
    const SampleMatrix out = apply_attack(spec, x, make_ctx(RngState{661, 0}));
    CHECK(l2_distance(out.row(1), scale(x.row(1), -1.0)) == 0.0);
    CHECK(l2_distance(out.row(4), scale(x.row(4), -1.0)) == 0.0);
    CHECK(out.row_copy(0) == x.row_copy(0));

    spec.flip_prob = 0.0;
    const SampleMatrix keep = apply_attack(spec, x, make_ctx(RngState{661, 0}));
    CHECK(keep.data == x.data);
}

TEST_CASE("lower_bound_rows: honest-shaped updates with the predicted mean gap") {
    TaskSpec task = make_task(TaskKind::MeanEstimation, 1, 1.0);
    const ParamVector global{0.0};
    AttackSpec spec;
    spec.kind = AttackKind::LowerBound;
    spec.epsilon = 0.2;
    spec.malicious_ids.resize(4000);
    for (std::size_t i = 0; i < spec.malicious_ids.size(); ++i) spec.malicious_ids[i] = i;

    RoundContext ctx = make_ctx(RngState{670, 0});
    ctx.global = &global;
    ctx.task = &task;
    ctx.eta_t = 0.5;
    ctx.samples_per_client = 10;

    const SampleMatrix rows = lower_bound_rows(spec, ctx);
    REQUIRE(rows.row_count == 4000);

    // Each row is a one-step GD update from w = 0: eta * 2 * (dataset mean),
    // so every row is nonzero (conditioning guarantees >= 1 atom) and the
    // population of rows, mixed with (1 - eps') zero-weight, averages near
    // eps' * atom per sample mean times 2 * eta.
    const double eps_prime = lower_bound_eps_prime(spec.epsilon, 10);
    const double atom = lower_bound_atom(spec.epsilon, 10, 1.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < rows.row_count; ++i) {
        CHECK(rows.row(i)[0] > 0.0);
        acc += rows.row(i)[0];
    }
    const double avg = acc / static_cast<double>(rows.row_count);
    // Conditional mean of the dataset mean given >= 1 atom:
    // eps' * atom / (1 - (1-eps')^n) per sample.
    const double cond = eps_prime * atom / (1.0 - std::pow(1.0 - eps_prime, 10.0));
    CHECK(avg == doctest::Approx(2.0 * ctx.eta_t * cond).epsilon(0.05));
}

TEST_CASE("attack kind string round trips") {
    for (AttackKind kind :
         {AttackKind::None, AttackKind::SignFlip, AttackKind::Ima, AttackKind::Tma,
          AttackKind::Ka, AttackKind::Mra, AttackKind::LabelNoise, AttackKind::LowerBound}) {
        CHECK(attack_kind_from_string(to_string(kind)) == kind);
    }
    CHECK_THROWS_AS(attack_kind_from_string("bogus"), std::invalid_argument);
}
