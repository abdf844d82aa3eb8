#include "byzagg/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "byzagg/attacks.hpp"
#include "byzagg/config.hpp"
#include "byzagg/estimators.hpp"
#include "byzagg/rng.hpp"
#include "byzagg/secure_agg.hpp"
#include "byzagg/simulator.hpp"
#include "byzagg/spectral.hpp"
#include "byzagg/task.hpp"

#include "oracles.hpp"

namespace byzagg {

namespace {

struct Check {
    bool pass{false};
    std::string detail;
};

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0.0;
    double sy = 0.0;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

EstimatorConfig filtering_config(double epsilon, double sigma, std::size_t n) {
    EstimatorConfig cfg;
    cfg.kind = EstimatorKind::Filtering;
    cfg.epsilon = epsilon;
    cfg.threshold_variant = ThresholdVariant::Eq2;
    cfg.delta = 0.05;
    cfg.sigma = sigma;
    cfg.eta_t = 1.0;
    cfg.samples_per_client = n;
    cfg.max_iter = 200;
    return cfg;
}

// Shared FL base: quadratic mean-estimation task, L = lambda = 2.
ExperimentConfig fl_base() {
    ExperimentConfig cfg;
    cfg.m = 100;
    cfg.n = 20;
    cfg.d = 32;
    cfg.rounds = 100;
    cfg.epsilon = 0.2;
    cfg.delta = 0.05;
    cfg.sigma = 1.0;
    cfg.task = TaskKind::MeanEstimation;
    cfg.init_dist = 10.0;
    cfg.estimator = filtering_config(cfg.epsilon, cfg.sigma, cfg.n);
    cfg.attack.kind = AttackKind::Ima;
    cfg.attack.scale = 1.0;
    cfg.attack.epsilon = cfg.epsilon;
    cfg.seed = 1;
    return cfg;
}

void sync_shared(ExperimentConfig& cfg) {
    cfg.estimator.epsilon = cfg.epsilon;
    cfg.estimator.delta = cfg.delta;
    cfg.estimator.sigma = cfg.sigma;
    cfg.estimator.samples_per_client = cfg.n;
    cfg.attack.epsilon = cfg.epsilon;
}

// A1: the coordinate-wise median pays a sqrt(d) factor the spectral filter
// avoids; measured against the honest sample mean.
Check a1() {
    const std::size_t m = 200;
    const double epsilon = 0.2;
    const std::size_t malicious = static_cast<std::size_t>(epsilon * m);
    const std::size_t honest_count = m - malicious;
    const std::vector<std::size_t> dims = {16, 256};

    std::map<std::size_t, std::vector<double>> med_errs;
    std::map<std::size_t, std::vector<double>> fil_errs;
    for (std::size_t seed = 0; seed < 20; ++seed) {
        for (std::size_t d : dims) {
            RngState rng{900 + seed, d};
            CounterRng gen(rng.substream(1));
            SampleMatrix honest(honest_count, d);
            for (double& v : honest.data) v = gen.next_gaussian();

            SampleMatrix all(m, d);
            for (std::size_t i = 0; i < honest_count; ++i) {
                all.set_row(i, honest.row(i));
            }
            const ParamVector bad = tma_row(honest, 0.1);
            for (std::size_t i = honest_count; i < m; ++i) all.set_row(i, bad);

            const ParamVector target = mean(honest);
            med_errs[d].push_back(l2_distance(coord_median(all), target));
            const EstimatorConfig cfg = filtering_config(epsilon, 1.0, 1);
            fil_errs[d].push_back(
                l2_distance(aggregate(cfg, all, rng.substream(2)), target));
        }
    }
    const double med16 = median(med_errs[16]);
    const double med256 = median(med_errs[256]);
    const double fil16 = median(fil_errs[16]);
    const double fil256 = median(fil_errs[256]);
    const double med_ratio = med256 / med16;
    const double fil_ratio = fil256 / fil16;

    Check out;
    out.pass = med_ratio >= 2.5 && fil_ratio <= 1.8 && fil256 < 0.5 * med256;
    out.detail = "median ratio " + num(med_ratio) + " (need >= 2.5), filtering ratio " +
                 num(fil_ratio) + " (need <= 1.8), filtering@256 " + num(fil256) +
                 " vs median@256/2 " + num(0.5 * med256);
    return out;
}

// A2: with no corruption every estimator should track the plain mean.
Check a2() {
    const std::vector<EstimatorKind> kinds = {
        EstimatorKind::Mean,           EstimatorKind::CoordMedian,
        EstimatorKind::CoordTrimmedMean, EstimatorKind::GeometricMedian,
        EstimatorKind::Krum,           EstimatorKind::Bulyan,
        EstimatorKind::Filtering,      EstimatorKind::NoRegret,
        EstimatorKind::Bucketing};

    ExperimentConfig base = fl_base();
    base.epsilon = 0.0;
    base.rounds = 30;
    base.attack.kind = AttackKind::None;
    sync_shared(base);

    std::map<EstimatorKind, double> plateau;
    for (EstimatorKind kind : kinds) {
        ExperimentConfig cfg = base;
        cfg.estimator.kind = kind;
        cfg.estimator.beta = 0.1;
        cfg.estimator.krum_f = 0;
        std::vector<double> per_seed;
        for (std::size_t seed = 0; seed < 20; ++seed) {
            cfg.seed = 100 + seed;
            per_seed.push_back(plateau_error(run_experiment(cfg).records));
        }
        plateau[kind] = median(per_seed);
    }

    const double ref = plateau[EstimatorKind::Mean];
    bool pass = true;
    double worst = 0.0;
    std::string worst_kind = "mean";
    for (const auto& [kind, value] : plateau) {
        const double ratio = value / ref;
        if (ratio > worst) {
            worst = ratio;
            worst_kind = to_string(kind);
        }
        if (ratio > 3.0) pass = false;
    }
    Check out;
    out.pass = pass;
    out.detail = "mean plateau " + num(ref) + ", worst ratio " + num(worst) + " (" +
                 worst_kind + ", need <= 3)";
    return out;
}

Check a3_impl(bool secure, double* plateau_out) {
    ExperimentConfig cfg = fl_base();
    cfg.secure = secure;
    sync_shared(cfg);
    const SimResult result = run_experiment(cfg);

    const EnvelopeResult envelope =
        theorem31_envelope(result.records, 2.0, 2.0, result.init_err, 0.1);

    const double plateau = plateau_error(result.records);
    if (plateau_out != nullptr) *plateau_out = plateau;
    const double rho = 1.0 - 2.0 / 4.0; // 1 - lambda/(L+lambda)
    double worst_contraction = 0.0;
    double prev = result.init_err;
    for (const MetricsRecord& rec : result.records) {
        if (rec.param_err <= 2.0 * plateau || prev <= 2.0 * plateau) break;
        worst_contraction = std::max(worst_contraction, rec.param_err / prev);
        prev = rec.param_err;
    }

    Check out;
    out.pass = envelope.violations == 0 && worst_contraction <= rho + 0.05;
    out.detail = "violations " + std::to_string(envelope.violations) +
                 " (need 0), pre-plateau contraction " + num(worst_contraction) +
                 " (need <= " + num(rho + 0.05) + ")";
    return out;
}

Check a3() { return a3_impl(false, nullptr); }

// A4: pairwise masks cancel bit-exactly inside every bucket sum.
Check a4() {
    RngState root{4004, 0};
    CounterRng gen(root.substream(1));
    std::size_t failures = 0;
    for (std::size_t trial = 0; trial < 100; ++trial) {
        const std::size_t size = 1 + gen.next_below(16);
        const std::size_t d = 1 + gen.next_below(64);
        SecureAggConfig cfg;
        cfg.clip = 1.0 + 3.0 * gen.next_unit();

        SampleMatrix updates(size, d);
        for (double& v : updates.data) v = cfg.clip * gen.next_gaussian();
        std::vector<std::size_t> members(size);
        for (std::size_t i = 0; i < size; ++i) members[i] = i;

        const SecureAggTranscript transcript =
            run_bucket(cfg, trial, members, updates, root.substream(2, trial));

        FieldVector plain_sum(d, 0);
        for (const FieldVector& codes : transcript.quantized_plain) {
            for (std::size_t c = 0; c < d; ++c) {
                plain_sum[c] = (plain_sum[c] + codes[c]) % cfg.modulus;
            }
        }
        FieldVector masked_sum(d, 0);
        for (const FieldVector& up : transcript.masked_uploads) {
            for (std::size_t c = 0; c < d; ++c) {
                masked_sum[c] = (masked_sum[c] + up[c]) % cfg.modulus;
            }
        }
        if (masked_sum != plain_sum || masked_sum != transcript.bucket_sum) ++failures;
    }
    Check out;
    out.pass = failures == 0;
    out.detail = std::to_string(failures) + " cancellation failures in 100 buckets (need 0)";
    return out;
}

Check a5() {
    SecureAggConfig cfg;
    cfg.clip = 2.5;
    const double bound = cfg.clip / static_cast<double>(cfg.levels - 1);
    CounterRng gen(RngState{5005, 0});
    double worst = 0.0;
    for (std::size_t trial = 0; trial < 1000; ++trial) {
        ParamVector v(8);
        for (double& c : v) c = 4.0 * gen.next_gaussian();
        const ParamVector back = dequantize(cfg, quantize(cfg, v));
        for (std::size_t c = 0; c < v.size(); ++c) {
            const double clipped = std::clamp(v[c], -cfg.clip, cfg.clip);
            worst = std::max(worst, std::abs(back[c] - clipped));
        }
    }

    double plain_plateau = 0.0;
    double secure_plateau = 0.0;
    a3_impl(false, &plain_plateau);
    a3_impl(true, &secure_plateau);
    const double rel = std::abs(secure_plateau - plain_plateau) / plain_plateau;

    Check out;
    out.pass = worst <= bound + 1e-12 && rel < 0.01;
    out.detail = "round-trip err " + num(worst) + " (bound " + num(bound) +
                 "), secure-vs-plain plateau shift " + num(rel) + " (need < 0.01)";
    return out;
}

// A6: the filter keeps its plateau through eps = 0.4.
Check a6() {
    ExperimentConfig base = fl_base();
    base.rounds = 60;
    auto run_eps = [&](double epsilon) {
        ExperimentConfig cfg = base;
        cfg.epsilon = epsilon;
        sync_shared(cfg);
        std::vector<double> per_seed;
        for (std::size_t seed = 0; seed < 5; ++seed) {
            cfg.seed = 600 + seed;
            per_seed.push_back(plateau_error(run_experiment(cfg).records));
        }
        return median(per_seed);
    };
    const double p02 = run_eps(0.2);
    const double p04 = run_eps(0.4);
    Check out;
    out.pass = p04 <= 2.0 * p02;
    out.detail = "plateau eps=0.4 " + num(p04) + " vs 2x eps=0.2 " + num(2.0 * p02) +
                 "; eps=0.5 exceeds every breakdown point, no requirement";
    return out;
}

Check a7() {
    const std::size_t m = 100;
    const double epsilon = 0.2;
    const double delta = 0.05;
    const std::size_t k = default_bucket_count(epsilon, m, delta);
    const std::size_t malicious_count = static_cast<std::size_t>(epsilon * m);

    RngState root{7007, 0};
    const auto malicious = pick_malicious_ids(epsilon, m, root.substream(1));
    std::vector<bool> is_mal(m, false);
    for (std::size_t id : malicious) is_mal[id] = true;

    std::size_t worst = 0;
    bool pass = true;
    for (std::size_t trial = 0; trial < 1000; ++trial) {
        const auto buckets = bucketize(m, k, root.substream(2, trial));
        std::size_t corrupted = 0;
        for (const auto& bucket : buckets) {
            for (std::size_t id : bucket) {
                if (is_mal[id]) {
                    ++corrupted;
                    break;
                }
            }
        }
        worst = std::max(worst, corrupted);
        if (corrupted > malicious_count) pass = false;
    }
    const double fraction = static_cast<double>(worst) / static_cast<double>(k);
    Check out;
    out.pass = pass && fraction < 0.5;
    out.detail = "k=" + std::to_string(k) + ", worst corrupted buckets " +
                 std::to_string(worst) + " (cap " + std::to_string(malicious_count) +
                 "), worst fraction " + num(fraction) + " (need < 1/2)";
    return out;
}

Check a8() {
    CounterRng gen(RngState{8008, 0});
    // (i) KL projection vs grid search at m = 4.
    double worst_kl = 0.0;
    for (std::size_t trial = 0; trial < 50; ++trial) {
        std::vector<double> q_tilde(4);
        for (double& q : q_tilde) q = 0.05 + gen.next_unit();
        const double eps = 0.05 + 0.25 * gen.next_unit();
        const double cap = 1.0 / ((1.0 - eps) * 4.0);
        const auto mine = kl_project_capped_simplex(q_tilde, cap);
        const auto grid = oracle::kl_project_grid4(q_tilde, cap);
        const double gap = oracle::kl_divergence(mine, q_tilde) -
                           oracle::kl_divergence(grid, q_tilde);
        worst_kl = std::max(worst_kl, gap);
    }

    // (ii) power iteration vs dense Jacobi at d <= 8.
    double worst_eig = 0.0;
    for (std::size_t trial = 0; trial < 50; ++trial) {
        const std::size_t m = 3 + gen.next_below(8);
        const std::size_t d = 1 + gen.next_below(8);
        SampleMatrix x(m, d);
        for (double& v : x.data) v = gen.next_gaussian();
        WeightedEmpirical we{&x, {}};
        we.weights.resize(m);
        double total = 0.0;
        for (double& w : we.weights) {
            w = 0.1 + gen.next_unit();
            total += w;
        }
        for (double& w : we.weights) w /= total;

        const EigenResult mine =
            top_eigenpair(we, 1e-12, 20000, RngState{8800, trial});
        const auto cov = oracle::weighted_covariance(x, we.weights);
        const auto dense = oracle::jacobi_eigen(cov);
        const double ref = dense.values.front();
        worst_eig = std::max(worst_eig, std::abs(mine.value - ref) / std::max(ref, 1e-12));
    }

    // (iii) Krum / Bulyan vs exhaustive enumeration at m <= 8.
    bool krum_ok = true;
    double worst_bulyan = 0.0;
    for (std::size_t trial = 0; trial < 50; ++trial) {
        const std::size_t m = 3 + gen.next_below(6);
        const std::size_t f = gen.next_below(m - 2);
        const std::size_t d = 1 + gen.next_below(4);
        SampleMatrix x(m, d);
        for (double& v : x.data) v = gen.next_gaussian();
        if (krum_select(x, f) != oracle::krum_enumerate(x, f)) krum_ok = false;

        const std::size_t fb = (m >= 7) ? gen.next_below(2) : 0;
        if (m >= 4 * fb + 3) {
            const ParamVector ours = bulyan(x, fb);
            const ParamVector ref = oracle::bulyan_enumerate(x, fb);
            worst_bulyan = std::max(worst_bulyan, l2_distance(ours, ref));
        }
    }

    Check out;
    out.pass = worst_kl <= 1e-3 && worst_eig <= 1e-6 && krum_ok && worst_bulyan <= 1e-9;
    out.detail = "KL gap " + num(worst_kl) + " (<= 1e-3), eig rel err " + num(worst_eig) +
                 " (<= 1e-6), krum " + (krum_ok ? "match" : "MISMATCH") +
                 ", bulyan gap " + num(worst_bulyan);
    return out;
}

// A9: rate shapes against the two-point indistinguishability instance. The
// reported error is the worse of the two confusable truths (0 and the gap).
Check a9() {
    auto lb_config = [](double epsilon, std::size_t n, std::size_t m) {
        ExperimentConfig cfg;
        cfg.m = m;
        cfg.n = n;
        cfg.d = 1;
        cfg.rounds = 6;
        cfg.epsilon = epsilon;
        cfg.delta = 0.05;
        cfg.sigma = 1.0;
        cfg.task = TaskKind::MeanEstimation;
        cfg.init_dist = 1.0;
        cfg.estimator = filtering_config(epsilon, 1.0, n);
        cfg.attack.kind = AttackKind::LowerBound;
        sync_shared(cfg);
        return cfg;
    };

    auto worst_truth_error = [](const ExperimentConfig& cfg, std::size_t seeds) {
        const double gap = lower_bound_eps_prime(cfg.epsilon, cfg.n) *
                           lower_bound_atom(cfg.epsilon, cfg.n, cfg.sigma);
        std::vector<double> per_seed;
        for (std::size_t seed = 0; seed < seeds; ++seed) {
            ExperimentConfig run = cfg;
            run.seed = 9000 + seed;
            const SimResult result = run_experiment(run);
            ParamVector alt(cfg.d, 0.0);
            alt[0] = gap;
            per_seed.push_back(std::max(l2_norm(result.final_w),
                                        l2_distance(result.final_w, alt)));
        }
        return median(per_seed);
    };

    const std::vector<double> eps_values = {0.05, 0.1, 0.2, 0.4};
    std::vector<double> log_eps;
    std::vector<double> log_err_eps;
    for (double eps : eps_values) {
        log_eps.push_back(std::log(eps));
        log_err_eps.push_back(std::log(worst_truth_error(lb_config(eps, 10, 1000), 10)));
    }
    const double eps_slope = lsq_slope(log_eps, log_err_eps);

    const std::vector<std::size_t> n_values = {10, 40, 160};
    std::vector<double> log_n;
    std::vector<double> log_err_n;
    for (std::size_t n : n_values) {
        log_n.push_back(std::log(static_cast<double>(n)));
        log_err_n.push_back(std::log(worst_truth_error(lb_config(0.2, n, 1000), 10)));
    }
    const double n_slope = lsq_slope(log_n, log_err_n);

    // Every estimator must stay above the indistinguishability floor.
    const std::vector<EstimatorKind> kinds = {
        EstimatorKind::Mean,           EstimatorKind::CoordMedian,
        EstimatorKind::CoordTrimmedMean, EstimatorKind::GeometricMedian,
        EstimatorKind::Krum,           EstimatorKind::Bulyan,
        EstimatorKind::Filtering,      EstimatorKind::NoRegret,
        EstimatorKind::Bucketing};
    const double floor = 0.1 * 1.0 * std::sqrt(0.2 / 10.0);
    bool floor_ok = true;
    double floor_worst = 1e300;
    std::string floor_worst_kind;
    for (EstimatorKind kind : kinds) {
        ExperimentConfig cfg = lb_config(0.2, 10, 200);
        cfg.estimator.kind = kind;
        cfg.estimator.beta = cfg.epsilon;
        cfg.estimator.krum_f = static_cast<std::size_t>(cfg.epsilon *
                                                        static_cast<double>(cfg.m));
        const double err = worst_truth_error(cfg, 10);
        if (err < floor_worst) {
            floor_worst = err;
            floor_worst_kind = to_string(kind);
        }
        if (err < floor) floor_ok = false;
    }

    Check out;
    out.pass = eps_slope >= 0.3 && eps_slope <= 0.7 && n_slope >= -0.7 &&
               n_slope <= -0.3 && floor_ok;
    out.detail = "eps slope " + num(eps_slope) + " (in [0.3,0.7]), n slope " +
                 num(n_slope) + " (in [-0.7,-0.3]), min plateau " + num(floor_worst) +
                 " (" + floor_worst_kind + ", floor " + num(floor) + ")";
    return out;
}

} // namespace

std::vector<CriterionResult> run_acceptance(const std::vector<std::string>& suites) {
    const std::vector<std::pair<std::string, std::function<Check()>>> all = {
        {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5},
        {"A6", a6}, {"A7", a7}, {"A8", a8}, {"A9", a9}};

    std::vector<std::string> selected = suites;
    if (selected.empty()) {
        for (const auto& [id, fn] : all) selected.push_back(id);
    }

    std::vector<CriterionResult> results;
    for (const std::string& id : selected) {
        const auto it = std::find_if(all.begin(), all.end(),
                                     [&](const auto& entry) { return entry.first == id; });
        if (it == all.end()) {
            throw std::invalid_argument("unknown acceptance suite id: " + id);
        }
        const auto start = std::chrono::steady_clock::now();
        CriterionResult result;
        result.id = id;
        try {
            const Check check = it->second();
            result.pass = check.pass;
            result.detail = check.detail;
        } catch (const std::exception& ex) {
            result.pass = false;
            result.detail = std::string("exception: ") + ex.what();
        }
        result.seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start)
                             .count();
        results.push_back(std::move(result));
    }
    return results;
}

int cmd_accept(const std::vector<std::string>& suites) {
    std::vector<CriterionResult> results;
    try {
        results = run_acceptance(suites);
    } catch (const std::invalid_argument& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        return 2;
    }
    bool all_pass = true;
    for (const CriterionResult& result : results) {
        std::cout << result.id << ' ' << (result.pass ? "PASS" : "FAIL") << " ["
                  << num(result.seconds) << "s] " << result.detail << "\n";
        if (!result.pass) all_pass = false;
    }
    return all_pass ? 0 : 1;
}

} // namespace byzagg
