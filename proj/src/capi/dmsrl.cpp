#include "dmsrl/dmsrl.h"

#include "config.hpp"
#include "errors.hpp"
#include "experiment.hpp"

#include <spdlog/spdlog.h>

#include <cstdlib>
#include <mutex>
#include <string>
#include <vector>

struct dmsrl_experiment {
    dmsrl::ExperimentConfig config;
    unsigned threads = 0;
    std::vector<dmsrl::RunResult> runs;
    std::string resolved;
};

namespace {

thread_local std::string last_error;

dmsrl_status fail(dmsrl_status code, const std::string& message) {
    last_error = message;
    return code;
}

// Exceptions never cross the C boundary.
template <class F>
dmsrl_status guarded(F&& body) {
    try {
        body();
        return DMSRL_OK;
    } catch (const dmsrl::ConfigError& e) {
        return fail(DMSRL_ERR_CONFIG, e.what());
    } catch (const dmsrl::IoError& e) {
        return fail(DMSRL_ERR_IO, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(DMSRL_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(DMSRL_ERR_RUNTIME, e.what());
    } catch (...) {
        return fail(DMSRL_ERR_RUNTIME, "unknown error");
    }
}

bool apply_log_level(const char* level) {
    const auto lvl = spdlog::level::from_str(level);
    // from_str maps anything unknown to off; only accept that when asked for.
    if (lvl == spdlog::level::off && std::string(level) != "off") return false;
    spdlog::set_level(lvl);
    return true;
}

void init_logging() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (const char* env = std::getenv("DMSRL_LOG_LEVEL"); env && *env && !apply_log_level(env))
            spdlog::warn("ignoring unknown DMSRL_LOG_LEVEL '{}'", env);
    });
}

dmsrl_status null_handle() { return fail(DMSRL_ERR_INVALID_ARGUMENT, "null experiment handle"); }

dmsrl_status wrap(dmsrl::ExperimentConfig cfg, dmsrl_experiment** out) {
    *out = new dmsrl_experiment{std::move(cfg), 0, {}, {}};
    return DMSRL_OK;
}

}  // namespace

extern "C" {

const char* dmsrl_version(void) { return DMSRL_VERSION; }

const char* dmsrl_last_error(void) { return last_error.c_str(); }

dmsrl_status dmsrl_set_log_level(const char* level) {
    if (!level || !apply_log_level(level))
        return fail(DMSRL_ERR_INVALID_ARGUMENT, std::string("unknown log level '") + (level ? level : "") + "'");
    return DMSRL_OK;
}

dmsrl_status dmsrl_experiment_load(const char* path, dmsrl_experiment** out) {
    init_logging();
    if (!path || !out) return fail(DMSRL_ERR_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    if (!std::filesystem::exists(path)) return fail(DMSRL_ERR_IO, std::string("cannot read ") + path);
    dmsrl::ExperimentConfig cfg;
    const auto st = guarded([&] { cfg = dmsrl::load_config(path); });
    return st == DMSRL_OK ? wrap(std::move(cfg), out) : st;
}

dmsrl_status dmsrl_experiment_load_string(const char* text, const char* base_dir, dmsrl_experiment** out) {
    init_logging();
    if (!text || !out) return fail(DMSRL_ERR_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    dmsrl::ExperimentConfig cfg;
    const auto st = guarded([&] {
        cfg = dmsrl::parse_config(text, base_dir ? std::filesystem::path(base_dir) : std::filesystem::current_path());
    });
    return st == DMSRL_OK ? wrap(std::move(cfg), out) : st;
}

void dmsrl_experiment_free(dmsrl_experiment* exp) { delete exp; }

dmsrl_status dmsrl_experiment_set_seeds(dmsrl_experiment* exp, const uint64_t* seeds, size_t count) {
    if (!exp) return null_handle();
    if (!seeds || count == 0) return fail(DMSRL_ERR_CONFIG, "[experiment] seeds: at least one seed is required");
    exp->config.seeds.assign(seeds, seeds + count);
    exp->runs.clear();
    return DMSRL_OK;
}

dmsrl_status dmsrl_experiment_set_horizon(dmsrl_experiment* exp, const char* horizon) {
    if (!exp) return null_handle();
    if (!horizon) return fail(DMSRL_ERR_INVALID_ARGUMENT, "null horizon");
    return guarded([&] {
        exp->config.horizon = dmsrl::parse_horizon(horizon);
        exp->runs.clear();
    });
}

dmsrl_status dmsrl_experiment_set_threads(dmsrl_experiment* exp, unsigned threads) {
    if (!exp) return null_handle();
    exp->threads = threads;
    return DMSRL_OK;
}

const char* dmsrl_experiment_label(const dmsrl_experiment* exp) { return exp ? exp->config.label.c_str() : ""; }

const char* dmsrl_experiment_resolved_config(dmsrl_experiment* exp) {
    if (!exp) return "";
    exp->resolved = dmsrl::resolved_ini(exp->config);
    return exp->resolved.c_str();
}

dmsrl_status dmsrl_experiment_run(dmsrl_experiment* exp, const char* out_dir) {
    if (!exp) return null_handle();
    return guarded([&] {
        exp->runs.clear();
        auto result = dmsrl::run_experiment(exp->config, exp->threads);
        if (out_dir) dmsrl::write_run_artifacts(result, out_dir);
        exp->runs = std::move(result.runs);
    });
}

size_t dmsrl_experiment_result_count(const dmsrl_experiment* exp) { return exp ? exp->runs.size() : 0; }

dmsrl_status dmsrl_experiment_result(const dmsrl_experiment* exp, size_t index, dmsrl_run_summary* out) {
    if (!exp) return null_handle();
    if (!out) return fail(DMSRL_ERR_INVALID_ARGUMENT, "null output");
    if (index >= exp->runs.size())
        return fail(DMSRL_ERR_INVALID_ARGUMENT,
                    "result index " + std::to_string(index) + " out of range (" + std::to_string(exp->runs.size()) +
                        " results)");
    const auto& run = exp->runs[index];
    const auto& s = run.summary;
    *out = dmsrl_run_summary{run.seed,     s.slots,     s.avg_reward, s.avg_power, s.avg_rate_distortion,
                             s.avg_gain,   s.overflows, s.final_weighted_error};
    return DMSRL_OK;
}

dmsrl_status dmsrl_experiment_oracle(dmsrl_experiment* exp, const char* out_dir) {
    if (!exp) return null_handle();
    if (!out_dir) return fail(DMSRL_ERR_INVALID_ARGUMENT, "null output directory");
    return guarded([&] {
        exp->config.validate();
        const auto sys = dmsrl::prepare_system(exp->config);
        const auto oracle = dmsrl::solve_oracle(exp->config, sys);
        dmsrl::write_oracle_artifacts(exp->config, sys, oracle, out_dir);
    });
}

dmsrl_status dmsrl_compare(dmsrl_experiment* const* exps, size_t count, const char* out_dir) {
    if (!exps || count == 0) return fail(DMSRL_ERR_INVALID_ARGUMENT, "no experiments to compare");
    if (!out_dir) return fail(DMSRL_ERR_INVALID_ARGUMENT, "null output directory");
    std::vector<dmsrl::ExperimentConfig> configs;
    unsigned threads = 0;
    for (size_t i = 0; i < count; ++i) {
        if (!exps[i]) return null_handle();
        configs.push_back(exps[i]->config);
        threads = exps[i]->threads;
    }
    return guarded([&] {
        auto results = dmsrl::compare(configs, out_dir, threads);
        for (size_t i = 0; i < count; ++i) exps[i]->runs = std::move(results[i].runs);
    });
}

}  // extern "C"
