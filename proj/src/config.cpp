#include "byzagg/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace byzagg {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

[[noreturn]] void fail(const std::string& key, const std::string& why) {
    throw std::invalid_argument("config: key '" + key + "' " + why);
}

using Section = std::map<std::string, std::string>;
using Tree = std::map<std::string, Section>;

Tree parse_tree(const std::string& text) {
    Tree tree;
    std::string section = "experiment";
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw std::invalid_argument("config: malformed section header at line " +
                                            std::to_string(lineno));
            }
            section = trim(line.substr(1, line.size() - 2));
            tree[section];
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config: expected key = value at line " +
                                        std::to_string(lineno));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw std::invalid_argument("config: empty key at line " + std::to_string(lineno));
        }
        tree[section][key] = value;
    }
    return tree;
}

class SectionReader {
public:
    SectionReader(const Tree& tree, std::string name) : name_(std::move(name)) {
        auto it = tree.find(name_);
        if (it != tree.end()) section_ = &it->second;
    }

    [[nodiscard]] bool has(const std::string& key) const {
        return section_ != nullptr && section_->count(key) > 0;
    }

    [[nodiscard]] std::string raw(const std::string& key) const {
        return section_->at(key);
    }

    [[nodiscard]] std::string full_key(const std::string& key) const {
        return name_ + "." + key;
    }

    double number(const std::string& key, double fallback, bool required = false) const {
        if (!has(key)) {
            if (required) fail(full_key(key), "is required");
            return fallback;
        }
        const std::string v = raw(key);
        try {
            std::size_t used = 0;
            const double out = std::stod(v, &used);
            if (used != v.size()) fail(full_key(key), "has trailing junk: " + v);
            return out;
        } catch (const std::invalid_argument&) {
            fail(full_key(key), "is not a number: " + v);
        } catch (const std::out_of_range&) {
            fail(full_key(key), "is out of range: " + v);
        }
    }

    std::size_t count(const std::string& key, std::size_t fallback,
                      bool required = false) const {
        const double v = number(key, static_cast<double>(fallback), required);
        if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
            fail(full_key(key), "must be a non-negative integer");
        }
        return static_cast<std::size_t>(v);
    }

    // Exact 64-bit parse; the double path would round large values.
    std::uint64_t uint64(const std::string& key, std::uint64_t fallback) const {
        if (!has(key)) return fallback;
        const std::string v = raw(key);
        try {
            std::size_t used = 0;
            const std::uint64_t out = std::stoull(v, &used);
            if (used != v.size()) fail(full_key(key), "has trailing junk: " + v);
            return out;
        } catch (const std::exception&) {
            fail(full_key(key), "is not an unsigned integer: " + v);
        }
    }

    // "auto" (or absence) maps to zero, which callers treat as "derive".
    std::size_t count_or_auto(const std::string& key) const {
        if (has(key) && raw(key) == "auto") return 0;
        return count(key, 0);
    }

    double number_or_auto(const std::string& key, double fallback) const {
        if (has(key) && raw(key) == "auto") return fallback;
        return number(key, fallback);
    }

    bool boolean(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const std::string v = raw(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        fail(full_key(key), "must be a boolean: " + v);
    }

    std::string text(const std::string& key, const std::string& fallback) const {
        return has(key) ? raw(key) : fallback;
    }

    void check_known(std::initializer_list<const char*> known) const {
        if (section_ == nullptr) return;
        for (const auto& [key, value] : *section_) {
            bool found = false;
            for (const char* k : known) {
                if (key == k) {
                    found = true;
                    break;
                }
            }
            if (!found) fail(full_key(key), "is not recognized");
        }
    }

private:
    std::string name_;
    const Section* section_{nullptr};
};

ParamVector parse_vector(const std::string& value, const std::string& key) {
    ParamVector out;
    std::istringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            fail(key, "has a non-numeric entry: " + item);
        }
    }
    return out;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

const char* to_string(StepSchedule s) {
    switch (s) {
    case StepSchedule::Auto: return "auto";
    case StepSchedule::Constant: return "constant";
    case StepSchedule::Decaying: return "decaying";
    }
    return "auto";
}

} // namespace

void ExperimentConfig::validate() const {
    if (m < 1) fail("experiment.m", "must be >= 1");
    if (n < 1) fail("experiment.n", "must be >= 1");
    if (d < 1) fail("experiment.d", "must be >= 1");
    if (local_steps < 1) fail("experiment.local_steps", "must be >= 1");
    if (epsilon < 0.0 || epsilon >= 0.5) fail("experiment.epsilon", "must be in [0, 1/2)");
    if (delta <= 0.0 || delta >= 1.0) fail("experiment.delta", "must be in (0, 1)");
    if (bucket_count > m) fail("experiment.bucket_count", "must be <= m");
    if (init_dist < 0.0) fail("experiment.init_dist", "must be >= 0");
    if (space_radius < 0.0) fail("experiment.space_radius", "must be >= 0");
    if (sigma < 0.0) fail("task.sigma", "must be >= 0");
    if (estimator.eta <= 0.0 || estimator.eta >= 1.0) {
        fail("estimator.eta", "must be in (0, 1)");
    }
    if (estimator.beta < 0.0 || estimator.beta >= 0.5) {
        fail("estimator.beta", "must be in [0, 1/2)");
    }
    if (estimator.manual_xi < 0.0) fail("estimator.manual_xi", "must be >= 0");
    if (attack.kind != AttackKind::None && epsilon == 0.0) {
        // Zero malicious clients: the attack is inert, which is allowed.
    }
    if (secure) {
        if (secure_cfg.levels < 2) fail("secure.levels", "must be >= 2");
        if (secure_cfg.modulus < 2) fail("secure.modulus", "must be >= 2");
        if (!auto_clip && !(secure_cfg.clip > 0.0)) fail("secure.clip", "must be > 0");
    }
}

ExperimentConfig parse_config(const std::string& text) {
    const Tree tree = parse_tree(text);
    for (const auto& [name, section] : tree) {
        if (name != "experiment" && name != "task" && name != "estimator" &&
            name != "attack" && name != "secure") {
            throw std::invalid_argument("config: unknown section [" + name + "]");
        }
    }

    ExperimentConfig cfg;

    SectionReader exp(tree, "experiment");
    exp.check_known({"m", "n", "d", "epsilon", "local_steps", "bucket_count", "rounds",
                     "delta", "schedule", "seed", "init_dist", "space_radius",
                     "resample_malicious"});
    cfg.m = exp.count("m", 0, true);
    cfg.n = exp.count("n", 0, true);
    cfg.d = exp.count("d", 0, true);
    cfg.rounds = exp.count("rounds", 0, true);
    cfg.epsilon = exp.number("epsilon", 0.0);
    cfg.local_steps = exp.count("local_steps", 1);
    cfg.bucket_count = exp.count_or_auto("bucket_count");
    cfg.delta = exp.number("delta", 0.05);
    cfg.seed = exp.uint64("seed", 0);
    cfg.init_dist = exp.number("init_dist", 10.0);
    cfg.space_radius = exp.number_or_auto("space_radius", 0.0);
    cfg.resample_malicious = exp.boolean("resample_malicious", false);
    const std::string sched = exp.text("schedule", "auto");
    if (sched == "auto") {
        cfg.schedule = StepSchedule::Auto;
    } else if (sched == "constant") {
        cfg.schedule = StepSchedule::Constant;
    } else if (sched == "decaying") {
        cfg.schedule = StepSchedule::Decaying;
    } else {
        fail("experiment.schedule", "must be auto|constant|decaying");
    }

    SectionReader task(tree, "task");
    task.check_known({"kind", "sigma"});
    const std::string task_kind = task.text("kind", "mean-estimation");
    if (task_kind == "mean-estimation") {
        cfg.task = TaskKind::MeanEstimation;
    } else if (task_kind == "linear-regression") {
        cfg.task = TaskKind::LinearRegression;
    } else {
        fail("task.kind", "must be mean-estimation|linear-regression");
    }
    cfg.sigma = task.number("sigma", 1.0);

    SectionReader est(tree, "estimator");
    est.check_known({"kind", "eta", "beta", "krum_f", "bulyan_inner", "bucketing_inner",
                     "threshold_variant", "manual_xi", "interval_size", "max_iter", "c1",
                     "c2", "c3", "c4", "bucket_c", "prefilter_c0", "bucket_count_alt"});
    try {
        cfg.estimator.kind = estimator_kind_from_string(est.text("kind", "mean"));
        cfg.estimator.bulyan_inner =
            estimator_kind_from_string(est.text("bulyan_inner", "krum"));
        cfg.estimator.bucketing_inner =
            estimator_kind_from_string(est.text("bucketing_inner", "filtering"));
        cfg.estimator.threshold_variant =
            threshold_variant_from_string(est.text("threshold_variant", "eq2"));
    } catch (const std::invalid_argument& ex) {
        throw std::invalid_argument(std::string("config: ") + ex.what());
    }
    cfg.estimator.eta = est.number("eta", 0.5);
    cfg.estimator.beta = est.number("beta", 0.1);
    cfg.estimator.krum_f = est.count("krum_f", 0);
    cfg.estimator.manual_xi = est.number("manual_xi", 0.0);
    cfg.estimator.interval_size = est.count_or_auto("interval_size");
    cfg.estimator.max_iter = est.count("max_iter", 200);
    cfg.estimator.c1 = est.number("c1", 2.0);
    cfg.estimator.c2 = est.number("c2", 2.0);
    cfg.estimator.c3 = est.number("c3", 2.0);
    cfg.estimator.c4 = est.number("c4", 2.0);
    cfg.estimator.bucket_c = est.number("bucket_c", 2.0);
    cfg.estimator.prefilter_c0 = est.number("prefilter_c0", 4.0);
    cfg.estimator.bucket_count_alt = est.boolean("bucket_count_alt", false);

    SectionReader atk(tree, "attack");
    atk.check_known({"kind", "scale", "margin", "boost", "flip_prob", "target"});
    try {
        cfg.attack.kind = attack_kind_from_string(atk.text("kind", "none"));
    } catch (const std::invalid_argument& ex) {
        throw std::invalid_argument(std::string("config: ") + ex.what());
    }
    cfg.attack.scale = atk.number("scale", 1.0);
    cfg.attack.margin = atk.number("margin", 0.1);
    cfg.attack.boost = atk.number("boost", 1.0);
    cfg.attack.flip_prob = atk.number("flip_prob", 1.0);
    if (atk.has("target")) {
        cfg.attack.mra_target = parse_vector(atk.raw("target"), "attack.target");
        if (cfg.attack.mra_target.size() == 1 && cfg.d > 1) {
            cfg.attack.mra_target.assign(cfg.d, cfg.attack.mra_target[0]);
        }
    }

    SectionReader sec(tree, "secure");
    sec.check_known({"enabled", "modulus", "levels", "clip", "stochastic_rounding"});
    cfg.secure = sec.boolean("enabled", false);
    cfg.secure_cfg.modulus = sec.uint64("modulus", kDefaultModulus);
    cfg.secure_cfg.levels = sec.uint64("levels", kDefaultLevels);
    if (sec.has("clip") && sec.raw("clip") != "auto") {
        cfg.auto_clip = false;
        cfg.secure_cfg.clip = sec.number("clip", 1.0);
    }
    cfg.secure_cfg.stochastic_rounding = sec.boolean("stochastic_rounding", false);

    // Fields shared across sections.
    cfg.estimator.epsilon = cfg.epsilon;
    cfg.estimator.delta = cfg.delta;
    cfg.estimator.sigma = cfg.sigma;
    cfg.estimator.samples_per_client = cfg.n;
    cfg.estimator.bucket_count_override = cfg.bucket_count;
    cfg.attack.epsilon = cfg.epsilon;

    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string canonical_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "[experiment]\n"
        << "bucket_count = " << cfg.bucket_count << "\n"
        << "d = " << cfg.d << "\n"
        << "delta = " << fmt(cfg.delta) << "\n"
        << "epsilon = " << fmt(cfg.epsilon) << "\n"
        << "init_dist = " << fmt(cfg.init_dist) << "\n"
        << "local_steps = " << cfg.local_steps << "\n"
        << "m = " << cfg.m << "\n"
        << "n = " << cfg.n << "\n"
        << "resample_malicious = " << (cfg.resample_malicious ? "true" : "false") << "\n"
        << "rounds = " << cfg.rounds << "\n"
        << "schedule = " << to_string(cfg.schedule) << "\n"
        << "seed = " << cfg.seed << "\n"
        << "space_radius = " << fmt(cfg.space_radius) << "\n"
        << "[task]\n"
        << "kind = "
        << (cfg.task == TaskKind::MeanEstimation ? "mean-estimation" : "linear-regression")
        << "\n"
        << "sigma = " << fmt(cfg.sigma) << "\n"
        << "[estimator]\n"
        << "beta = " << fmt(cfg.estimator.beta) << "\n"
        << "bucket_c = " << fmt(cfg.estimator.bucket_c) << "\n"
        << "bucket_count_alt = " << (cfg.estimator.bucket_count_alt ? "true" : "false")
        << "\n"
        << "bucketing_inner = " << to_string(cfg.estimator.bucketing_inner) << "\n"
        << "bulyan_inner = " << to_string(cfg.estimator.bulyan_inner) << "\n"
        << "c1 = " << fmt(cfg.estimator.c1) << "\n"
        << "c2 = " << fmt(cfg.estimator.c2) << "\n"
        << "c3 = " << fmt(cfg.estimator.c3) << "\n"
        << "c4 = " << fmt(cfg.estimator.c4) << "\n"
        << "eta = " << fmt(cfg.estimator.eta) << "\n"
        << "interval_size = " << cfg.estimator.interval_size << "\n"
        << "kind = " << to_string(cfg.estimator.kind) << "\n"
        << "krum_f = " << cfg.estimator.krum_f << "\n"
        << "manual_xi = " << fmt(cfg.estimator.manual_xi) << "\n"
        << "max_iter = " << cfg.estimator.max_iter << "\n"
        << "prefilter_c0 = " << fmt(cfg.estimator.prefilter_c0) << "\n"
        << "threshold_variant = " << to_string(cfg.estimator.threshold_variant) << "\n"
        << "[attack]\n"
        << "boost = " << fmt(cfg.attack.boost) << "\n"
        << "flip_prob = " << fmt(cfg.attack.flip_prob) << "\n"
        << "kind = " << to_string(cfg.attack.kind) << "\n"
        << "margin = " << fmt(cfg.attack.margin) << "\n"
        << "scale = " << fmt(cfg.attack.scale) << "\n"
        << "target =";
    for (double v : cfg.attack.mra_target) out << " " << fmt(v);
    out << "\n"
        << "[secure]\n"
        << "clip = " << (cfg.auto_clip ? std::string("auto") : fmt(cfg.secure_cfg.clip))
        << "\n"
        << "enabled = " << (cfg.secure ? "true" : "false") << "\n"
        << "levels = " << cfg.secure_cfg.levels << "\n"
        << "modulus = " << cfg.secure_cfg.modulus << "\n"
        << "stochastic_rounding = "
        << (cfg.secure_cfg.stochastic_rounding ? "true" : "false") << "\n";
    return out.str();
}

std::string default_config_text() {
    ExperimentConfig cfg;
    cfg.m = 100;
    cfg.n = 20;
    cfg.d = 32;
    cfg.rounds = 50;
    return canonical_config(cfg);
}

} // namespace byzagg
