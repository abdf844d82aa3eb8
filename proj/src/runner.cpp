#include "byzagg/runner.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unistd.h>

#include "byzagg/estimators.hpp"

#include <json.hpp>

namespace fs = std::filesystem;

namespace byzagg {

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::size_t resolved_k(const ExperimentConfig& cfg) {
    if (cfg.estimator.kind == EstimatorKind::Bucketing) {
        return resolve_bucket_count(cfg.estimator, cfg.m);
    }
    return cfg.m;
}

struct RunArtifacts {
    std::string dir;
    double plateau{0.0};
};

RunArtifacts execute_run(const ExperimentConfig& cfg, const std::string& out_dir) {
    const SimResult result = run_experiment(cfg);
    const std::string id = run_id(cfg);
    const fs::path dir = fs::path(out_dir) / id;
    fs::create_directories(dir);

    const fs::path csv_path = dir / "metrics.csv";
    write_file_atomic(csv_path.string(), metrics_csv(cfg, result));
    const fs::path manifest_path = dir / "manifest.json";
    write_file_atomic(manifest_path.string(),
                      manifest_json(cfg, {csv_path.filename().string()}));

    RunArtifacts artifacts;
    artifacts.dir = dir.string();
    artifacts.plateau =
        result.records.empty() ? 0.0 : plateau_error(result.records);
    return artifacts;
}

} // namespace

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string run_id(const ExperimentConfig& cfg) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical_config(cfg))));
    return buf;
}

std::string metrics_csv(const ExperimentConfig& cfg, const SimResult& result) {
    const std::string id = run_id(cfg);
    const std::string estimator = to_string(cfg.estimator.kind);
    const std::string attack = to_string(cfg.attack.kind);
    const std::size_t k = resolved_k(cfg);

    std::ostringstream out;
    out << kCsvHeader << "\n";
    for (const MetricsRecord& rec : result.records) {
        out << id << ',' << rec.round << ',' << estimator << ',' << attack << ','
            << fmt(cfg.epsilon) << ',' << cfg.m << ',' << cfg.n << ',' << cfg.d << ','
            << cfg.local_steps << ',' << k << ',' << fmt(rec.param_err) << ','
            << fmt(rec.agg_err) << ',' << fmt(rec.loss) << ',' << fmt(rec.grad_norm)
            << ',' << (rec.converged ? 1 : 0) << ','
            << static_cast<long long>(rec.elapsed_ms) << ',' << cfg.seed << "\n";
    }
    return out.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const fs::path target(path);
    const fs::path tmp = target.parent_path() /
                         (target.filename().string() + ".tmp." +
                          std::to_string(static_cast<unsigned long>(::getpid())));
    {
        std::FILE* f = std::fopen(tmp.string().c_str(), "wb");
        if (f == nullptr) {
            throw std::runtime_error("cannot open for writing: " + tmp.string());
        }
        const std::size_t written = std::fwrite(content.data(), 1, content.size(), f);
        const int closed = std::fclose(f);
        if (written != content.size() || closed != 0) {
            fs::remove(tmp);
            throw std::runtime_error("short write: " + tmp.string());
        }
    }
    fs::rename(tmp, target);
}

std::string manifest_json(const ExperimentConfig& cfg,
                          const std::vector<std::string>& artifacts) {
    nlohmann::json doc;
    doc["run_id"] = run_id(cfg);
    doc["seed"] = cfg.seed;
    doc["version"] = kVersion;
    doc["config"] = canonical_config(cfg);
    doc["artifacts"] = artifacts;
    return doc.dump(2) + "\n";
}

std::string default_out_dir() {
    const char* env = std::getenv("BYZAGG_OUT");
    if (env != nullptr && env[0] != '\0') return env;
    return "out";
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed_override, std::string* run_dir_out) {
    ExperimentConfig cfg;
    try {
        cfg = load_config(config_path);
        if (seed_override.has_value()) cfg.seed = *seed_override;
        cfg.validate();
    } catch (const std::exception& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        return 2;
    }
    try {
        const RunArtifacts artifacts = execute_run(cfg, out_dir);
        if (run_dir_out != nullptr) *run_dir_out = artifacts.dir;
        std::cout << artifacts.dir << "\n";
        return 0;
    } catch (const std::exception& ex) {
        std::cerr << "runtime error: " << ex.what() << "\n";
        return 3;
    }
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir,
              const std::string& axis, const std::vector<double>& values,
              std::size_t seeds, std::size_t jobs) {
    ExperimentConfig base;
    std::vector<ExperimentConfig> cell_cfgs;
    try {
        if (values.empty()) throw std::invalid_argument("sweep: no axis values given");
        if (seeds == 0) throw std::invalid_argument("sweep: seeds must be >= 1");
        base = load_config(config_path);
        for (double value : values) {
            cell_cfgs.push_back(apply_axis(base, axis, value));
        }
    } catch (const std::exception& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        return 2;
    }

    try {
        struct Job {
            std::size_t cell;
            std::size_t seed;
        };
        std::vector<Job> queue;
        for (std::size_t c = 0; c < values.size(); ++c) {
            for (std::size_t s = 0; s < seeds; ++s) queue.push_back({c, s});
        }
        std::vector<std::vector<double>> plateaus(values.size(),
                                                  std::vector<double>(seeds, 0.0));

        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::mutex error_mutex;
        std::string error_message;
        auto worker = [&]() {
            for (;;) {
                const std::size_t idx = next.fetch_add(1);
                if (idx >= queue.size() || failed.load()) break;
                const Job job = queue[idx];
                try {
                    ExperimentConfig cfg = cell_cfgs[job.cell];
                    cfg.seed = base.seed + job.seed;
                    const RunArtifacts artifacts = execute_run(cfg, out_dir);
                    plateaus[job.cell][job.seed] = artifacts.plateau;
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
            for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
            for (std::thread& th : pool) th.join();
        }
        if (failed.load()) throw std::runtime_error(error_message);

        std::ostringstream agg;
        agg << "axis,value,seeds,plateau_median\n";
        for (std::size_t c = 0; c < values.size(); ++c) {
            agg << axis << ',' << fmt(values[c]) << ',' << seeds << ','
                << fmt(median(plateaus[c])) << "\n";
        }
        fs::create_directories(out_dir);
        const fs::path agg_path = fs::path(out_dir) / "sweep.csv";
        write_file_atomic(agg_path.string(), agg.str());
        std::cout << agg_path.string() << "\n";
        return 0;
    } catch (const std::exception& ex) {
        std::cerr << "runtime error: " << ex.what() << "\n";
        return 3;
    }
}

} // namespace byzagg
