#include "experiment.hpp"

#include "errors.hpp"
#include "svg.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

namespace dmsrl {

namespace fs = std::filesystem;

PreparedSystem prepare_system(const ExperimentConfig& cfg) {
    PreparedSystem sys;
    DmsConfig dms = cfg.dms;
    if (cfg.trace.mode == TraceMode::csv) {
        auto samples = std::make_shared<std::vector<TraceSample>>(load_csv(cfg.trace.csv_path, dms.type_labels));
        for (const auto& s : *samples)
            if (s.configs.size() != dms.num_configs)
                throw ConfigError(fmt::format("trace {} has {} configurations but dms.configs = {}",
                                              cfg.trace.csv_path.string(), s.configs.size(), dms.num_configs));
        dms.type_transition = estimate_type_transition(*samples, dms.num_types());
        sys.recorded = std::move(samples);
    }
    sys.model = std::make_shared<const DmsModel>(std::move(dms));
    return sys;
}

std::vector<TraceSample> oracle_samples(const ExperimentConfig& cfg, const PreparedSystem& sys) {
    if (cfg.trace.mode == TraceMode::csv) return *sys.recorded;

    const auto& model = *sys.model;
    std::size_t n = cfg.oracle.samples;
    if (cfg.trace.mode == TraceMode::nonstationary) {
        // Whole periods, so every segment enters with its share of the cycle.
        std::size_t period = 0;
        for (const auto& s : cfg.trace.segments) period += s.duration;
        n = std::max<std::size_t>(1, (n + period - 1) / period) * period;
    }
    std::seed_seq type_seq{cfg.oracle.seed, std::uint64_t{0}}, sample_seq{cfg.oracle.seed, std::uint64_t{1}};
    Rng type_rng(type_seq);
    std::vector<std::size_t> types(n);
    const auto pi = type_stationary_distribution(model);
    std::discrete_distribution<std::size_t> first(pi.begin(), pi.end());
    types[0] = first(type_rng);
    for (std::size_t i = 1; i < n; ++i) types[i] = model.draw_next_type(types[i - 1], type_rng);

    Rng seed_rng(sample_seq);
    const std::uint64_t stream_seed = seed_rng();
    if (cfg.trace.mode == TraceMode::stationary) return synth_stationary(cfg.trace.params, types, stream_seed);
    return synth_nonstationary(cfg.trace.segments, types, stream_seed);
}

OracleSolution solve_oracle(const ExperimentConfig& cfg, const PreparedSystem& sys) {
    OracleSolution sol;
    const auto samples = oracle_samples(cfg, sys);
    sol.stats = empirical_arrival_distribution(samples, *sys.model, cfg.oracle.min_trace_length);
    const auto tm = assemble_transition_model(*sys.model, sol.stats);
    sol.vi = value_iteration(tm, cfg.learner.schedule.gamma, cfg.oracle.tol);
    sol.stationary = stationary_distribution(tm, sol.vi.policy);
    spdlog::info("oracle: {} states, {} value-iteration sweeps, stationary residual {:.3g}{}", tm.num_states(),
                 sol.vi.iterations, sol.stationary.residual, sol.stationary.damped ? " (damped)" : "");
    return sol;
}

RunSeeds derive_seeds(std::uint64_t run_seed) {
    std::seed_seq seq{run_seed, std::uint64_t{0x5eed}};
    std::array<std::uint32_t, 6> words{};
    seq.generate(words.begin(), words.end());
    auto join = [&](int i) { return (std::uint64_t{words[2 * i]} << 32) | words[2 * i + 1]; };
    return {join(0), join(1), join(2)};
}

std::unique_ptr<TraceStream> make_stream(const ExperimentConfig& cfg, const PreparedSystem& sys, std::uint64_t seed) {
    switch (cfg.trace.mode) {
        case TraceMode::stationary: return std::make_unique<StationaryStream>(cfg.trace.params, seed);
        case TraceMode::nonstationary: return std::make_unique<NonstationaryStream>(cfg.trace.segments, seed);
        case TraceMode::csv: return std::make_unique<ReplayStream>(sys.recorded);
    }
    throw ConfigError("unknown trace mode");
}

std::unique_ptr<Learner> make_learner(const ExperimentConfig& cfg, const DmsModel& model,
                                      const OracleSolution* oracle, std::uint64_t seed) {
    const auto& l = cfg.learner;
    const auto& a = l.algorithm;
    if (a == "centralized") return std::make_unique<CentralizedLearner>(model, l.schedule, seed);
    if (a == "layered") return std::make_unique<LayeredLearner>(model, l.schedule, seed);
    if (a == "virtual-et") return std::make_unique<VirtualEtLearner>(model, l.schedule, l.psi, seed);
    if (a == "td-lambda") return std::make_unique<TdLambdaLearner>(model, l.schedule, l.lambda, l.psi, seed);
    if (a == "grace") return std::make_unique<GraceLearner>(model, l.grace);
    if (!oracle) throw ConfigError("learner '" + a + "' needs the oracle");
    if (a == "oracle-greedy")
        return std::make_unique<OracleGreedyLearner>(model, oracle->vi.policy, oracle->vi.values);
    if (a == "best-response-app")
        return std::make_unique<BestResponseLearner>(model, l.schedule, Layer::app,
                                                     layer_policy(oracle->vi.policy, model.actions(), Layer::os),
                                                     seed);
    if (a == "best-response-os")
        return std::make_unique<BestResponseLearner>(model, l.schedule, Layer::os,
                                                     layer_policy(oracle->vi.policy, model.actions(), Layer::app),
                                                     seed);
    throw ConfigError("unknown learner '" + a + "'");
}

RunResult run_single(const ExperimentConfig& cfg, const PreparedSystem& sys, const OracleSolution* oracle,
                     std::uint64_t seed) {
    const auto seeds = derive_seeds(seed);
    Environment env(sys.model, make_stream(cfg, sys, seeds.trace), seeds.environment);
    auto learner = make_learner(cfg, *sys.model, oracle, seeds.learner);
    const bool has_values = oracle && cfg.learner.algorithm != "grace";

    RunResult res;
    res.seed = seed;
    res.stats = RunStats(cfg.slot_log);
    for (std::uint64_t n = 1; n <= cfg.horizon; ++n) {
        res.stats.record(learner->step(env));
        if (n % cfg.checkpoint_interval == 0 || n == cfg.horizon) {
            double err = std::numeric_limits<double>::quiet_NaN();
            if (has_values)
                err = weighted_estimation_error(oracle->vi.values, learner->value_estimate(), oracle->stationary.mu);
            res.stats.add_checkpoint(err);
        }
    }
    res.summary = summarize(res.stats);
    return res;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned threads) {
    cfg.validate();
    ExperimentResult result;
    result.config = cfg;
    result.system = prepare_system(cfg);
    if (cfg.oracle.enabled) result.oracle = solve_oracle(cfg, result.system);
    const OracleSolution* oracle = result.oracle ? &*result.oracle : nullptr;

    const std::size_t n = cfg.seeds.size();
    result.runs.resize(n);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                spdlog::debug("{}: seed {} started", cfg.label, cfg.seeds[i]);
                result.runs[i] = run_single(cfg, result.system, oracle, cfg.seeds[i]);
                spdlog::info("{}: seed {} avg reward {:.4f}", cfg.label, cfg.seeds[i],
                             result.runs[i].summary.avg_reward);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return result;
}

// ---- artifacts -------------------------------------------------------------------

namespace {

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

PlotSeries checkpoint_series(const std::string& label, const RunStats& stats, bool error) {
    PlotSeries s;
    s.label = label;
    for (const auto& c : stats.checkpoints()) {
        s.x.push_back(static_cast<double>(c.slot));
        s.y.push_back(error ? c.weighted_error : c.cumulative_avg_reward);
    }
    return s;
}

// Seed-mean of the checkpoint curves.
PlotSeries mean_series(const std::string& label, const std::vector<RunResult>& runs, bool error) {
    PlotSeries s;
    s.label = label;
    if (runs.empty()) return s;
    const auto& first = runs.front().stats.checkpoints();
    for (std::size_t i = 0; i < first.size(); ++i) {
        double acc = 0.0;
        for (const auto& r : runs) {
            const auto& c = r.stats.checkpoints()[i];
            acc += error ? c.weighted_error : c.cumulative_avg_reward;
        }
        s.x.push_back(static_cast<double>(first[i].slot));
        s.y.push_back(acc / static_cast<double>(runs.size()));
    }
    return s;
}

std::string label_of(const ExperimentConfig& cfg) {
    if (cfg.learner.algorithm == "virtual-et" || cfg.learner.algorithm == "td-lambda")
        return fmt::format("{} psi={}", cfg.learner.algorithm, cfg.learner.psi);
    return cfg.learner.algorithm;
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

std::string summary_csv_header() {
    return "label,seed,learner,psi,slots,avg_reward,avg_power,avg_rate_distortion,avg_gain,overflows,"
           "final_weighted_error";
}

std::string summary_csv_row(const ExperimentConfig& cfg, const RunResult& run) {
    const auto& s = run.summary;
    return fmt::format("{},{},{},{},{},{},{},{},{},{},{}", cfg.label, run.seed, cfg.learner.algorithm, cfg.learner.psi,
                       s.slots, s.avg_reward, s.avg_power, s.avg_rate_distortion, s.avg_gain, s.overflows,
                       s.final_weighted_error);
}

void write_run_artifacts(const ExperimentResult& result, const fs::path& out) {
    ensure_dir(out);
    const auto& cfg = result.config;
    const auto& labels = result.system.model->config().type_labels;
    const auto& freqs = result.system.model->config().frequencies;
    {
        auto f = open_out(out / "summary.csv");
        f << summary_csv_header() << '\n';
        for (const auto& r : result.runs) f << summary_csv_row(cfg, r) << '\n';
    }
    for (const auto& r : result.runs) {
        if (r.stats.keeps_log()) {
            auto f = open_out(out / fmt::format("slots_seed{}.csv", r.seed));
            f << "n,f,z,q,u,h,reward,gain,power,cost_app,arrivals,overflow\n";
            std::uint64_t n = 0;
            for (const auto& e : r.stats.log()) {
                f << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", n++, freqs[e.state.freq],
                                 labels[e.state.type], e.state.occupancy, freqs[e.action.command],
                                 e.action.config + 1, e.reward, e.gain, e.cost_os, e.cost_app, e.arrivals, e.overflow);
            }
        }
        auto f = open_out(out / fmt::format("checkpoints_seed{}.csv", r.seed));
        f << "slot,cumulative_avg_reward,weighted_error\n";
        for (const auto& c : r.stats.checkpoints())
            f << fmt::format("{},{},{}\n", c.slot, c.cumulative_avg_reward, c.weighted_error);
    }

    std::vector<PlotSeries> reward, error;
    for (const auto& r : result.runs) {
        reward.push_back(checkpoint_series(fmt::format("seed {}", r.seed), r.stats, false));
        error.push_back(checkpoint_series(fmt::format("seed {}", r.seed), r.stats, true));
    }
    write_line_plot(out / "reward.svg", label_of(cfg) + ": cumulative average reward", "time slot",
                    "cumulative average reward", reward);
    if (result.oracle && cfg.learner.algorithm != "grace")
        write_line_plot(out / "error.svg", label_of(cfg) + ": weighted estimation error", "time slot",
                        "weighted estimation error", error);

    auto f = open_out(out / "config.resolved.ini");
    f << resolved_ini(cfg);
}

std::vector<ExperimentResult> compare(const std::vector<ExperimentConfig>& configs, const fs::path& out,
                                      unsigned threads) {
    if (configs.empty()) throw ConfigError("compare needs at least one configuration");
    const auto reference = system_fingerprint(configs.front());
    for (const auto& c : configs)
        if (system_fingerprint(c) != reference)
            throw ConfigError("configuration '" + c.label + "' describes a different system ([dms]/[trace]) than '" +
                              configs.front().label + "'");

    ensure_dir(out);
    std::vector<ExperimentResult> results;
    std::map<std::string, int> used;
    for (const auto& c : configs) {
        auto r = run_experiment(c, threads);
        std::string dir = c.label;
        if (used[dir]++) dir += fmt::format("_{}", used[dir]);
        write_run_artifacts(r, out / dir);
        results.push_back(std::move(r));
    }

    auto f = open_out(out / "comparison.csv");
    f << "label,learner,psi,seeds,mean_avg_reward,sd_avg_reward,median_avg_reward,mean_avg_power,"
         "mean_avg_rate_distortion,mean_avg_gain,mean_overflows,median_final_weighted_error\n";
    std::vector<PlotSeries> reward, error;
    bool any_error = false;
    for (const auto& r : results) {
        std::vector<double> rew, pow, rd, gain, of, err;
        for (const auto& run : r.runs) {
            rew.push_back(run.summary.avg_reward);
            pow.push_back(run.summary.avg_power);
            rd.push_back(run.summary.avg_rate_distortion);
            gain.push_back(run.summary.avg_gain);
            of.push_back(static_cast<double>(run.summary.overflows));
            err.push_back(run.summary.final_weighted_error);
        }
        auto mean = [](const std::vector<double>& v) {
            return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        };
        const double m = mean(rew);
        double var = 0.0;
        for (double x : rew) var += (x - m) * (x - m);
        const double sd = rew.size() > 1 ? std::sqrt(var / static_cast<double>(rew.size() - 1)) : 0.0;
        f << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", r.config.label, r.config.learner.algorithm,
                         r.config.learner.psi, r.runs.size(), m, sd, median(rew), mean(pow), mean(rd), mean(gain),
                         mean(of), median(err));
        const auto label = r.config.label == r.config.learner.algorithm ? label_of(r.config) : r.config.label;
        reward.push_back(mean_series(label, r.runs, false));
        if (r.oracle && r.config.learner.algorithm != "grace") {
            error.push_back(mean_series(label, r.runs, true));
            any_error = true;
        }
    }
    write_line_plot(out / "reward.svg", "cumulative average reward (seed mean)", "time slot",
                    "cumulative average reward", reward);
    if (any_error)
        write_line_plot(out / "error.svg", "weighted estimation error (seed mean)", "time slot",
                        "weighted estimation error", error);
    return results;
}

void write_oracle_artifacts(const ExperimentConfig& cfg, const PreparedSystem& sys, const OracleSolution& oracle,
                            const fs::path& out) {
    ensure_dir(out);
    const auto& model = *sys.model;
    const auto& d = model.config();
    const auto& S = model.states();
    {
        auto f = open_out(out / "policy.csv");
        f << "state,f,z,q,u,h,value,mu\n";
        for (std::size_t s = 0; s < S.size(); ++s) {
            const auto st = S.state(s);
            const auto a = model.actions().action(oracle.vi.policy[s]);
            f << fmt::format("{},{},{},{},{},{},{},{}\n", s, d.frequencies[st.freq], d.type_labels[st.type],
                             st.occupancy, d.frequencies[a.command], a.config + 1, oracle.vi.values[s],
                             oracle.stationary.mu[s]);
        }
    }
    for (std::size_t fi = 0; fi < d.num_frequencies(); ++fi) {
        auto f = open_out(out / fmt::format("policy_f{}.csv", d.frequencies[fi]));
        f << "q";
        for (const auto& z : d.type_labels) f << fmt::format(",u_{0},h_{0}", z);
        f << '\n';
        for (int q = 0; q <= d.buffer_capacity; ++q) {
            f << q;
            for (std::size_t z = 0; z < d.num_types(); ++z) {
                const auto a = model.actions().action(oracle.vi.policy[S.index({fi, z, q})]);
                f << fmt::format(",{},{}", d.frequencies[a.command], a.config + 1);
            }
            f << '\n';
        }
    }
    auto f = open_out(out / "oracle.csv");
    f << "states,actions,gamma,tol,iterations,residual,stationary_iterations,stationary_residual,damped\n";
    f << fmt::format("{},{},{},{},{},{},{},{},{}\n", S.size(), model.actions().size(), cfg.learner.schedule.gamma,
                     cfg.oracle.tol, oracle.vi.iterations, oracle.vi.residual, oracle.stationary.iterations,
                     oracle.stationary.residual, oracle.stationary.damped);
    auto g = open_out(out / "config.resolved.ini");
    g << resolved_ini(cfg);
}

}  // namespace dmsrl
