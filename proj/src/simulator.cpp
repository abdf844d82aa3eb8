#include "byzagg/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "byzagg/attacks.hpp"
#include "byzagg/estimators.hpp"
#include "byzagg/secure_agg.hpp"

namespace byzagg {

namespace {

// Stream tags for the per-experiment RNG tree.
constexpr std::uint64_t kStreamData = 1;
constexpr std::uint64_t kStreamInit = 2;
constexpr std::uint64_t kStreamAttack = 3;
constexpr std::uint64_t kStreamAgg = 4;
constexpr std::uint64_t kStreamMask = 5;
constexpr std::uint64_t kStreamMalicious = 6;

ParamVector random_direction(std::size_t d, RngState rng) {
    CounterRng gen(rng);
    ParamVector v(d);
    double norm = 0.0;
    while (norm < 1e-12) {
        for (double& c : v) c = gen.next_gaussian();
        norm = l2_norm(v);
    }
    for (double& c : v) c /= norm;
    return v;
}

ParamVector secure_round_aggregate(const ExperimentConfig& cfg,
                                   const EstimatorConfig& est,
                                   const SampleMatrix& attacked, RngState agg_rng,
                                   RngState mask_rng) {
    SecureAggConfig sc = cfg.secure_cfg;
    if (cfg.auto_clip) sc.clip = default_clip(cfg.sigma, est.eta_t, attacked.dim);

    const std::size_t m = attacked.row_count;
    std::vector<std::vector<std::size_t>> assignment;
    if (est.kind == EstimatorKind::Bucketing) {
        const std::size_t k = resolve_bucket_count(est, m);
        // Same substream the plaintext bucketing path consumes, so both modes
        // see identical assignments.
        assignment = bucketize(m, k, agg_rng.substream(0x62756b74u));
    } else {
        // Non-bucketing estimators get singleton buckets: quantization only.
        assignment.resize(m);
        for (std::size_t i = 0; i < m; ++i) assignment[i] = {i};
    }

    SampleMatrix means(assignment.size(), attacked.dim);
    for (std::size_t b = 0; b < assignment.size(); ++b) {
        const SecureAggTranscript transcript =
            run_bucket(sc, b, assignment[b], attacked, mask_rng);
        // The estimator input is derived from the bucket sum alone.
        const ParamVector bucket_mean = bucket_sum_and_dequantize(
            sc, {transcript.bucket_sum}, assignment[b].size());
        means.set_row(b, bucket_mean);
    }

    if (est.kind == EstimatorKind::Bucketing) {
        return aggregate_bucket_means(est, means, m, agg_rng.substream(0x62696e6eu));
    }
    return aggregate(est, means, agg_rng);
}

} // namespace

double step_size(const ExperimentConfig& cfg, const TaskSpec& task, std::size_t t) {
    StepSchedule schedule = cfg.schedule;
    if (schedule == StepSchedule::Auto) {
        schedule = (cfg.local_steps <= 1) ? StepSchedule::Constant : StepSchedule::Decaying;
    }
    const double L = task.smoothness;
    if (schedule == StepSchedule::Constant) return 1.0 / L;
    const double a = (L + task.strong_convexity) / task.strong_convexity;
    return a / (L * (static_cast<double>(t) + a));
}

ParamVector local_update(const TaskSpec& task, const ParamVector& w,
                         const SampleMatrix& local_data, double eta_t,
                         std::size_t steps) {
    ParamVector w_local = w;
    for (std::size_t h = 0; h < std::max<std::size_t>(steps, 1); ++h) {
        const ParamVector g = local_gradient(task, w_local, local_data);
        axpy(-eta_t, g, w_local);
    }
    return subtract(w_local, w);
}

SimState init_state(const ExperimentConfig& cfg) {
    cfg.validate();
    SimState state;
    state.root = RngState{cfg.seed, 0};
    state.task = make_task(cfg.task, cfg.d, cfg.sigma);

    const bool lower_bound =
        cfg.attack.kind == AttackKind::LowerBound && cfg.epsilon > 0.0;
    if (lower_bound && cfg.task != TaskKind::MeanEstimation) {
        throw std::invalid_argument("lower-bound attack requires the mean-estimation task");
    }

    state.client_data.reserve(cfg.m);
    for (std::size_t i = 0; i < cfg.m; ++i) {
        const RngState rng = state.root.substream(kStreamData, i);
        // The indistinguishability instance pins the honest world to the
        // point mass at the optimum; the adversary supplies the heavy tail.
        state.client_data.push_back(
            lower_bound ? SampleMatrix(cfg.n, state.task.sample_dim())
                        : sample_client_data(state.task, cfg.n, rng));
    }

    const ParamVector dir = random_direction(cfg.d, state.root.substream(kStreamInit));
    state.w = state.task.optimum;
    axpy(cfg.init_dist, dir, state.w);
    state.init_err = l2_distance(state.w, state.task.optimum);

    state.space.center = state.task.optimum;
    state.space.radius =
        cfg.space_radius > 0.0 ? cfg.space_radius : 2.0 * cfg.init_dist + 1.0;
    state.w = state.space.project(state.w);

    state.malicious_ids =
        pick_malicious_ids(cfg.epsilon, cfg.m, state.root.substream(kStreamMalicious));
    return state;
}

MetricsRecord run_round(SimState& state, const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t t = state.round;
    const double eta_t = step_size(cfg, state.task, t);

    EstimatorConfig est = cfg.estimator;
    est.eta_t = eta_t;

    if (cfg.resample_malicious) {
        state.malicious_ids = pick_malicious_ids(
            cfg.epsilon, cfg.m, state.root.substream(kStreamMalicious, t));
    }

    SampleMatrix updates(cfg.m, cfg.d);
    for (std::size_t i = 0; i < cfg.m; ++i) {
        updates.set_row(i, local_update(state.task, state.w, state.client_data[i],
                                        eta_t, cfg.local_steps));
    }

    ParamVector honest_mean(cfg.d, 0.0);
    {
        std::vector<bool> is_mal(cfg.m, false);
        for (std::size_t id : state.malicious_ids) is_mal[id] = true;
        std::size_t honest = 0;
        for (std::size_t i = 0; i < cfg.m; ++i) {
            if (!is_mal[i]) {
                axpy(1.0, updates.row(i), honest_mean);
                ++honest;
            }
        }
        if (honest > 0) {
            for (double& v : honest_mean) v /= static_cast<double>(honest);
        }
    }

    AttackSpec attack = cfg.attack;
    attack.malicious_ids = state.malicious_ids;
    RoundContext ctx;
    ctx.global = &state.w;
    ctx.eta_t = eta_t;
    ctx.round = t;
    ctx.task = &state.task;
    ctx.local_steps = cfg.local_steps;
    ctx.samples_per_client = cfg.n;
    ctx.rng = state.root.substream(kStreamAttack, t);
    ctx.krum_f = est.krum_f;
    const SampleMatrix attacked = apply_attack(attack, updates, ctx);

    MetricsRecord rec;
    rec.round = t;
    ParamVector g_hat(cfg.d, 0.0);
    try {
        const RngState agg_rng = state.root.substream(kStreamAgg, t);
        if (cfg.secure) {
            g_hat = secure_round_aggregate(cfg, est, attacked, agg_rng,
                                           state.root.substream(kStreamMask, t));
        } else {
            g_hat = aggregate(est, attacked, agg_rng);
        }
        rec.converged = true;
    } catch (const std::exception&) {
        g_hat.assign(cfg.d, 0.0); // flagged no-op round, the run continues
        rec.converged = false;
    }

    const ParamVector pop_grad = state.task.population_gradient(state.w);
    ParamVector deviation = scale(g_hat, 1.0 / eta_t);
    ParamVector dev_sum = add(deviation, pop_grad);
    rec.agg_err_pop = l2_norm(dev_sum);
    rec.agg_err = l2_distance(g_hat, honest_mean);

    state.w = state.space.project(add(state.w, g_hat));
    rec.param_err = l2_distance(state.w, state.task.optimum);
    rec.loss = state.task.population_loss(state.w);
    rec.grad_norm = l2_norm(state.task.population_gradient(state.w));

    const auto stop = std::chrono::steady_clock::now();
    rec.elapsed_ms = static_cast<double>(
        std::chrono::duration_cast<std::chrono::milliseconds>(stop - start).count());
    ++state.round;
    return rec;
}

SimResult run_experiment(const ExperimentConfig& cfg) {
    SimState state = init_state(cfg);
    SimResult result;
    result.init_err = state.init_err;
    result.records.reserve(cfg.rounds);
    for (std::size_t t = 0; t < cfg.rounds; ++t) {
        result.records.push_back(run_round(state, cfg));
    }
    result.final_w = state.w;
    result.task = state.task;
    return result;
}

EnvelopeResult theorem31_envelope(const std::vector<MetricsRecord>& records, double L,
                                  double lambda, double w0_err, double slack) {
    if (L <= 0.0 || lambda <= 0.0) {
        throw std::invalid_argument("theorem31_envelope: L, lambda must be > 0");
    }
    const double rho = 1.0 - lambda / (L + lambda);
    EnvelopeResult out;
    out.bounds.reserve(records.size());
    double geometric = w0_err;
    double max_dev = 0.0;
    for (const MetricsRecord& rec : records) {
        geometric *= rho;
        max_dev = std::max(max_dev, rec.agg_err_pop);
        const double bound = geometric + (2.0 / lambda) * max_dev;
        out.bounds.push_back(bound);
        if (rec.param_err > bound * (1.0 + slack)) ++out.violations;
    }
    return out;
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty input");
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return (values.size() % 2 == 1) ? values[mid]
                                    : 0.5 * (values[mid - 1] + values[mid]);
}

double plateau_error(const std::vector<MetricsRecord>& records) {
    if (records.empty()) throw std::invalid_argument("plateau_error: empty run");
    const std::size_t tail = std::max<std::size_t>(1, records.size() / 10);
    std::vector<double> errs;
    errs.reserve(tail);
    for (std::size_t i = records.size() - tail; i < records.size(); ++i) {
        errs.push_back(records[i].param_err);
    }
    return median(std::move(errs));
}

ExperimentConfig apply_axis(ExperimentConfig cfg, const std::string& axis, double value) {
    if (axis == "d") {
        cfg.d = static_cast<std::size_t>(value);
    } else if (axis == "epsilon") {
        cfg.epsilon = value;
    } else if (axis == "m") {
        cfg.m = static_cast<std::size_t>(value);
    } else if (axis == "n") {
        cfg.n = static_cast<std::size_t>(value);
    } else if (axis == "sigma") {
        cfg.sigma = value;
    } else {
        throw std::invalid_argument("rate_sweep: unknown axis '" + axis + "'");
    }
    // Re-sync the fields mirrored into the estimator and attack configs.
    cfg.estimator.epsilon = cfg.epsilon;
    cfg.estimator.sigma = cfg.sigma;
    cfg.estimator.samples_per_client = cfg.n;
    cfg.attack.epsilon = cfg.epsilon;
    cfg.validate();
    return cfg;
}

std::vector<SweepCell> rate_sweep(const ExperimentConfig& base, const std::string& axis,
                                  const std::vector<double>& values, std::size_t seeds,
                                  std::size_t jobs) {
    if (values.empty()) throw std::invalid_argument("rate_sweep: no axis values");
    if (seeds == 0) throw std::invalid_argument("rate_sweep: seeds must be >= 1");

    std::vector<SweepCell> cells(values.size());
    for (std::size_t c = 0; c < values.size(); ++c) {
        cells[c].value = values[c];
        cells[c].per_seed.assign(seeds, 0.0);
    }

    struct Job {
        std::size_t cell;
        std::size_t seed;
    };
    std::vector<Job> queue;
    queue.reserve(values.size() * seeds);
    for (std::size_t c = 0; c < values.size(); ++c) {
        for (std::size_t s = 0; s < seeds; ++s) queue.push_back({c, s});
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string error_message;
    std::mutex error_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= queue.size() || failed.load()) break;
            const Job job = queue[idx];
            try {
                ExperimentConfig cfg = apply_axis(base, axis, values[job.cell]);
                cfg.seed = base.seed + job.seed;
                const SimResult result = run_experiment(cfg);
                cells[job.cell].per_seed[job.seed] = plateau_error(result.records);
            } catch (const std::exception& ex) {
                std::lock_guard<std::mutex> lock(error_mutex);
                error_message = ex.what();
                failed.store(true);
            }
        }
    };

    const std::size_t workers =
        std::max<std::size_t>(1, std::min(jobs, queue.size()));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }
    if (failed.load()) throw std::runtime_error("rate_sweep: " + error_message);

    for (SweepCell& cell : cells) cell.plateau = median(cell.per_seed);
    return cells;
}

} // namespace byzagg
