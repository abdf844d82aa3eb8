#include "byzagg.h"

#include <cstring>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "byzagg/acceptance.hpp"
#include "byzagg/config.hpp"
#include "byzagg/estimators.hpp"
#include "byzagg/runner.hpp"
#include "byzagg/simulator.hpp"

namespace {

thread_local std::string g_last_error;

int fail(int code, const std::string& message) {
    g_last_error = message;
    return code;
}

// Maps exceptions onto the two error codes: invalid_argument is a config
// problem, everything else a runtime failure.
template <typename Fn>
int guarded(Fn&& fn) {
    try {
        g_last_error.clear();
        return fn();
    } catch (const std::invalid_argument& ex) {
        return fail(BYZAGG_ERR_CONFIG, ex.what());
    } catch (const std::exception& ex) {
        return fail(BYZAGG_ERR_RUNTIME, ex.what());
    }
}

} // namespace

struct byzagg_experiment {
    byzagg::ExperimentConfig config;
    byzagg::SimResult result;
    bool ran{false};
};

extern "C" {

const char* byzagg_version(void) { return "0.1.0"; }

const char* byzagg_last_error(void) { return g_last_error.c_str(); }

const char* byzagg_default_config(void) {
    static const std::string text = byzagg::default_config_text();
    return text.c_str();
}

int byzagg_experiment_create(const char* config_text, byzagg_experiment** out) {
    return guarded([&] {
        if (config_text == nullptr || out == nullptr) {
            throw std::invalid_argument("byzagg_experiment_create: null argument");
        }
        auto handle = std::make_unique<byzagg_experiment>();
        handle->config = byzagg::parse_config(config_text);
        *out = handle.release();
        return BYZAGG_OK;
    });
}

int byzagg_experiment_create_from_file(const char* path, byzagg_experiment** out) {
    return guarded([&] {
        if (path == nullptr || out == nullptr) {
            throw std::invalid_argument("byzagg_experiment_create_from_file: null argument");
        }
        auto handle = std::make_unique<byzagg_experiment>();
        handle->config = byzagg::load_config(path);
        *out = handle.release();
        return BYZAGG_OK;
    });
}

int byzagg_experiment_set_seed(byzagg_experiment* exp, uint64_t seed) {
    return guarded([&] {
        if (exp == nullptr) throw std::invalid_argument("null experiment handle");
        exp->config.seed = seed;
        exp->ran = false;
        return BYZAGG_OK;
    });
}

int byzagg_experiment_run(byzagg_experiment* exp) {
    return guarded([&] {
        if (exp == nullptr) throw std::invalid_argument("null experiment handle");
        exp->result = byzagg::run_experiment(exp->config);
        exp->ran = true;
        return BYZAGG_OK;
    });
}

size_t byzagg_experiment_rounds(const byzagg_experiment* exp) {
    if (exp == nullptr || !exp->ran) return 0;
    return exp->result.records.size();
}

int byzagg_experiment_metric(const byzagg_experiment* exp, size_t round,
                             const char* name, double* value) {
    return guarded([&] {
        if (exp == nullptr || name == nullptr || value == nullptr) {
            throw std::invalid_argument("byzagg_experiment_metric: null argument");
        }
        if (!exp->ran) throw std::runtime_error("experiment has not been run");
        if (round >= exp->result.records.size()) {
            throw std::invalid_argument("round index out of range");
        }
        const byzagg::MetricsRecord& rec = exp->result.records[round];
        const std::string key = name;
        if (key == "param_err") {
            *value = rec.param_err;
        } else if (key == "agg_err") {
            *value = rec.agg_err;
        } else if (key == "loss") {
            *value = rec.loss;
        } else if (key == "grad_norm") {
            *value = rec.grad_norm;
        } else if (key == "converged") {
            *value = rec.converged ? 1.0 : 0.0;
        } else if (key == "elapsed_ms") {
            *value = rec.elapsed_ms;
        } else {
            throw std::invalid_argument("unknown metric name: " + key);
        }
        return BYZAGG_OK;
    });
}

size_t byzagg_experiment_dim(const byzagg_experiment* exp) {
    if (exp == nullptr) return 0;
    return exp->config.d;
}

int byzagg_experiment_final_params(const byzagg_experiment* exp, double* buf, size_t len) {
    return guarded([&] {
        if (exp == nullptr || buf == nullptr) {
            throw std::invalid_argument("byzagg_experiment_final_params: null argument");
        }
        if (!exp->ran) throw std::runtime_error("experiment has not been run");
        if (len < exp->result.final_w.size()) {
            throw std::invalid_argument("buffer too small for final parameters");
        }
        std::memcpy(buf, exp->result.final_w.data(),
                    exp->result.final_w.size() * sizeof(double));
        return BYZAGG_OK;
    });
}

int byzagg_experiment_write_csv(const byzagg_experiment* exp, const char* path) {
    return guarded([&] {
        if (exp == nullptr || path == nullptr) {
            throw std::invalid_argument("byzagg_experiment_write_csv: null argument");
        }
        if (!exp->ran) throw std::runtime_error("experiment has not been run");
        byzagg::write_file_atomic(path, byzagg::metrics_csv(exp->config, exp->result));
        return BYZAGG_OK;
    });
}

void byzagg_experiment_destroy(byzagg_experiment* exp) { delete exp; }

int byzagg_run(const char* config_path, const char* out_dir, int has_seed,
               uint64_t seed) {
    return guarded([&] {
        if (config_path == nullptr) {
            throw std::invalid_argument("byzagg_run: null config path");
        }
        const std::string out = out_dir != nullptr ? out_dir : byzagg::default_out_dir();
        std::optional<uint64_t> seed_override;
        if (has_seed != 0) seed_override = seed;
        return byzagg::cmd_run(config_path, out, seed_override);
    });
}

int byzagg_sweep(const char* config_path, const char* out_dir, const char* axis,
                 const double* values, size_t value_count, size_t seeds, size_t jobs) {
    return guarded([&] {
        if (config_path == nullptr || axis == nullptr || values == nullptr) {
            throw std::invalid_argument("byzagg_sweep: null argument");
        }
        if (value_count == 0) throw std::invalid_argument("byzagg_sweep: no values");
        const std::string out = out_dir != nullptr ? out_dir : byzagg::default_out_dir();
        const std::vector<double> value_list(values, values + value_count);
        return byzagg::cmd_sweep(config_path, out, axis, value_list,
                                 seeds == 0 ? 1 : seeds, jobs == 0 ? 1 : jobs);
    });
}

int byzagg_accept(const char* const* suite_ids, size_t count) {
    return guarded([&] {
        std::vector<std::string> suites;
        for (size_t i = 0; i < count; ++i) {
            if (suite_ids == nullptr || suite_ids[i] == nullptr) {
                throw std::invalid_argument("byzagg_accept: null suite id");
            }
            suites.emplace_back(suite_ids[i]);
        }
        return byzagg::cmd_accept(suites);
    });
}

int byzagg_aggregate(const char* estimator, const double* updates, size_t m, size_t d,
                     const byzagg_agg_opts* opts, double* out) {
    return guarded([&] {
        if (estimator == nullptr || updates == nullptr || out == nullptr) {
            throw std::invalid_argument("byzagg_aggregate: null argument");
        }
        if (m == 0 || d == 0) {
            throw std::invalid_argument("byzagg_aggregate: m and d must be positive");
        }
        byzagg::EstimatorConfig cfg;
        cfg.kind = byzagg::estimator_kind_from_string(estimator);
        uint64_t seed = 0;
        if (opts != nullptr) {
            cfg.epsilon = opts->epsilon;
            if (opts->sigma > 0.0) cfg.sigma = opts->sigma;
            if (opts->eta_t != 0.0) cfg.eta_t = opts->eta_t;
            if (opts->samples_per_client > 0) {
                cfg.samples_per_client = opts->samples_per_client;
            }
            if (opts->delta > 0.0) cfg.delta = opts->delta;
            if (opts->threshold != nullptr) {
                cfg.threshold_variant =
                    byzagg::threshold_variant_from_string(opts->threshold);
            }
            cfg.manual_xi = opts->manual_xi;
            if (opts->trim_beta > 0.0) cfg.beta = opts->trim_beta;
            cfg.krum_f = opts->krum_f;
            cfg.bucket_count_override = opts->bucket_count;
            seed = opts->seed;
        }

        byzagg::SampleMatrix x(m, d);
        std::memcpy(x.data.data(), updates, m * d * sizeof(double));
        const byzagg::ParamVector estimate =
            byzagg::aggregate(cfg, x, byzagg::RngState{seed, 0});
        std::memcpy(out, estimate.data(), d * sizeof(double));
        return BYZAGG_OK;
    });
}

} // extern "C"
