#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "byzagg/config.hpp"
#include "byzagg/types.hpp"

namespace byzagg {

struct MetricsRecord {
    std::size_t round{0};
    double param_err{0.0};   // ||w^{t+1} - w*|| after this round's update
    double agg_err{0.0};     // ||g_hat - mean of honest uploads||
    double agg_err_pop{0.0}; // gradient-scale deviation ||g_hat/eta_t + grad F(w^t)||
    double loss{0.0};        // population loss at the new iterate
    double grad_norm{0.0};   // population gradient norm at the new iterate
    bool converged{true};    // estimator finished without error
    double elapsed_ms{0.0};  // whole milliseconds
};

struct SimState {
    ParamVector w;
    std::vector<SampleMatrix> client_data;
    std::vector<std::size_t> malicious_ids;
    ParamSpace space;
    TaskSpec task;
    RngState root;
    std::size_t round{0};
    double init_err{0.0};
};

struct SimResult {
    std::vector<MetricsRecord> records;
    ParamVector final_w;
    TaskSpec task;
    double init_err{0.0};
};

double step_size(const ExperimentConfig& cfg, const TaskSpec& task, std::size_t t);

// H local gradient steps from w on local_data; returns w_local - w.
ParamVector local_update(const TaskSpec& task, const ParamVector& w,
                         const SampleMatrix& local_data, double eta_t, std::size_t steps);

SimState init_state(const ExperimentConfig& cfg);
MetricsRecord run_round(SimState& state, const ExperimentConfig& cfg);
SimResult run_experiment(const ExperimentConfig& cfg);

struct EnvelopeResult {
    std::vector<double> bounds;
    std::size_t violations{0};
};

// Contraction envelope: bound_r = rho^{r+1} w0_err + (2/lambda) max_{s<=r} dev_s
// with rho = 1 - lambda/(L + lambda) and dev taken from agg_err_pop.
EnvelopeResult theorem31_envelope(const std::vector<MetricsRecord>& records, double L,
                                  double lambda, double w0_err, double slack);

// Median of param_err over the last 10% of rounds (at least one).
double plateau_error(const std::vector<MetricsRecord>& records);

double median(std::vector<double> values);

struct SweepCell {
    double value{0.0};
    std::vector<double> per_seed; // plateau per seed, seed order
    double plateau{0.0};          // median over seeds
};

ExperimentConfig apply_axis(ExperimentConfig cfg, const std::string& axis, double value);

std::vector<SweepCell> rate_sweep(const ExperimentConfig& base, const std::string& axis,
                                  const std::vector<double>& values, std::size_t seeds,
                                  std::size_t jobs = 1);

} // namespace byzagg
