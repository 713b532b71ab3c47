// Command-line front end; talks to the library only through the C API.

#include "dmsrl/dmsrl.h"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace {

enum Exit { kOk = 0, kConfig = 1, kRuntime = 2 };

int exit_code(dmsrl_status st) {
    switch (st) {
        case DMSRL_OK: return kOk;
        case DMSRL_ERR_CONFIG:
        case DMSRL_ERR_INVALID_ARGUMENT: return kConfig;
        default: return kRuntime;
    }
}

int report(dmsrl_status st, const std::string& context) {
    fmt::print(stderr, "error: {}: {}\n", context, dmsrl_last_error());
    return exit_code(st);
}

struct Handle {
    dmsrl_experiment* p = nullptr;
    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    ~Handle() { dmsrl_experiment_free(p); }
};

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = std::min(text.find(',', start), text.size());
        const auto tok = text.substr(start, end - start);
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (tok.empty() || used != tok.size() || tok[0] == '-') throw CLI::ValidationError("--seeds", "bad seed '" + tok + "'");
        out.push_back(v);
        start = end + 1;
    }
    return out;
}

void print_summaries(dmsrl_experiment* exp) {
    const auto n = dmsrl_experiment_result_count(exp);
    for (std::size_t i = 0; i < n; ++i) {
        dmsrl_run_summary s;
        if (dmsrl_experiment_result(exp, i, &s) != DMSRL_OK) continue;
        std::string err = std::isnan(s.final_weighted_error) ? "n/a" : fmt::format("{:.4f}", s.final_weighted_error);
        fmt::print("{:<20} seed {:<6} reward {:8.4f}  power {:.4f} W  rd {:7.3f}  gain {:.4f}  overflows {:<6} "
                   "error {}\n",
                   dmsrl_experiment_label(exp), s.seed, s.avg_reward, s.avg_power, s.avg_rate_distortion, s.avg_gain,
                   s.overflows, err);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online reinforcement learning for a dynamic multimedia system (encoder + DVFS)"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string log_level;
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off (overrides DMSRL_LOG_LEVEL)");
    unsigned threads = 0;
    app.add_option("--threads", threads, "worker threads for seeds (0 = all cores)");

    std::string run_config, seeds, horizon, run_out;
    auto* run = app.add_subcommand("run", "run every seed of one configuration");
    run->add_option("config", run_config, "experiment INI file")->required();
    run->add_option("--seeds", seeds, "comma-separated seeds, e.g. 1,2,3");
    run->add_option("--horizon", horizon, "slots: short, medium, long or an integer");
    run->add_option("--out", run_out, "output directory (default out/<label>)");

    std::vector<std::string> cmp_configs;
    std::string cmp_out;
    auto* cmp = app.add_subcommand("compare", "run several configurations of one system and overlay them");
    cmp->add_option("configs", cmp_configs, "experiment INI files")->required();
    cmp->add_option("--out", cmp_out, "output directory")->required();

    std::string orc_config, orc_out;
    auto* orc = app.add_subcommand("oracle", "solve the model exactly and write policy, values and occupancy");
    orc->add_option("config", orc_config, "experiment INI file")->required();
    orc->add_option("--out", orc_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    if (!log_level.empty()) {
        if (auto st = dmsrl_set_log_level(log_level.c_str()); st != DMSRL_OK) return report(st, "--log-level");
    }

    auto load = [&](const std::string& path, Handle& h) {
        auto st = dmsrl_experiment_load(path.c_str(), &h.p);
        if (st == DMSRL_OK) st = dmsrl_experiment_set_threads(h.p, threads);
        return st;
    };

    if (*run) {
        Handle h;
        if (auto st = load(run_config, h); st != DMSRL_OK) return report(st, run_config);
        if (!seeds.empty()) {
            std::vector<std::uint64_t> list;
            try {
                list = parse_seeds(seeds);
            } catch (const CLI::ValidationError& e) {
                fmt::print(stderr, "error: {}\n", e.what());
                return kConfig;
            }
            if (auto st = dmsrl_experiment_set_seeds(h.p, list.data(), list.size()); st != DMSRL_OK)
                return report(st, "--seeds");
        }
        if (!horizon.empty()) {
            if (auto st = dmsrl_experiment_set_horizon(h.p, horizon.c_str()); st != DMSRL_OK)
                return report(st, "--horizon");
        }
        if (run_out.empty()) run_out = std::string("out/") + dmsrl_experiment_label(h.p);
        if (auto st = dmsrl_experiment_run(h.p, run_out.c_str()); st != DMSRL_OK) return report(st, run_config);
        print_summaries(h.p);
        fmt::print("artifacts written to {}\n", run_out);
        return kOk;
    }

    if (*cmp) {
        std::vector<Handle> handles(cmp_configs.size());
        std::vector<dmsrl_experiment*> ptrs;
        for (std::size_t i = 0; i < cmp_configs.size(); ++i) {
            if (auto st = load(cmp_configs[i], handles[i]); st != DMSRL_OK) return report(st, cmp_configs[i]);
            ptrs.push_back(handles[i].p);
        }
        if (auto st = dmsrl_compare(ptrs.data(), ptrs.size(), cmp_out.c_str()); st != DMSRL_OK)
            return report(st, "compare");
        for (auto* p : ptrs) print_summaries(p);
        fmt::print("comparison written to {}\n", cmp_out);
        return kOk;
    }

    Handle h;
    if (auto st = load(orc_config, h); st != DMSRL_OK) return report(st, orc_config);
    if (auto st = dmsrl_experiment_oracle(h.p, orc_out.c_str()); st != DMSRL_OK) return report(st, orc_config);
    fmt::print("oracle written to {}\n", orc_out);
    return kOk;
}
