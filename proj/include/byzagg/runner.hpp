#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "byzagg/config.hpp"
#include "byzagg/simulator.hpp"

namespace byzagg {

inline constexpr const char* kCsvHeader =
    "run_id,round,estimator,attack,epsilon,m,n,d,H,k,param_err,agg_err,loss,"
    "grad_norm,converged,elapsed_ms,seed";

std::uint64_t fnv1a64(const std::string& data);

// Content hash of the canonical config (seed included): equal config + seed
// always maps to the same id.
std::string run_id(const ExperimentConfig& cfg);

std::string metrics_csv(const ExperimentConfig& cfg, const SimResult& result);

// Write-temp-then-rename so readers never observe a partial file.
void write_file_atomic(const std::string& path, const std::string& content);

std::string manifest_json(const ExperimentConfig& cfg,
                          const std::vector<std::string>& artifacts);

// BYZAGG_OUT when set, "out" otherwise.
std::string default_out_dir();

// Exit codes: 0 success, 2 config error, 3 runtime failure.
int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed_override, std::string* run_dir_out = nullptr);

int cmd_sweep(const std::string& config_path, const std::string& out_dir,
              const std::string& axis, const std::vector<double>& values,
              std::size_t seeds, std::size_t jobs);

} // namespace byzagg
