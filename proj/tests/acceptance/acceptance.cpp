// Acceptance gate: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset. Exit status is nonzero when any line fails.

#include "config.hpp"
#include "environment.hpp"
#include "errors.hpp"
#include "experiment.hpp"
#include "fixtures.hpp"
#include "helpers.hpp"
#include "learners.hpp"
#include "metrics.hpp"
#include "model_assembly.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace dmsrl;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path config_path(const std::string& name) { return fs::path(DMSRL_SOURCE_DIR) / "configs" / name; }

ExperimentConfig shipped(const std::string& name, std::optional<std::string> horizon = std::nullopt) {
    auto cfg = load_config(config_path(name));
    if (horizon) cfg.horizon = parse_horizon(*horizon);
    cfg.slot_log = false;
    return cfg;
}

std::vector<double> rewards(const ExperimentResult& r) {
    std::vector<double> v;
    for (const auto& run : r.runs) v.push_back(run.summary.avg_reward);
    return v;
}

std::vector<double> errors(const ExperimentResult& r) {
    std::vector<double> v;
    for (const auto& run : r.runs) v.push_back(run.summary.final_weighted_error);
    return v;
}

double mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::uint64_t total_overflows(const ExperimentResult& r) {
    std::uint64_t n = 0;
    for (const auto& run : r.runs) n += run.summary.overflows;
    return n;
}

// Runs are shared between criteria; each configuration runs once.
class RunCache {
public:
    const ExperimentResult& get(const std::string& name, std::optional<std::string> horizon = std::nullopt) {
        const auto key = name + "@" + horizon.value_or("");
        auto it = cache_.find(key);
        if (it == cache_.end()) it = cache_.emplace(key, run_experiment(shipped(name, horizon))).first;
        return it->second;
    }

private:
    std::map<std::string, ExperimentResult> cache_;
};

// 1: assembled rows against step() frequencies on the reduced instance.
Outcome transition_model(RunCache&) {
    const auto t0 = Clock::now();
    const DmsModel m(testing_support::small_config());
    const auto params = testing_support::small_params();
    const auto tm = assemble_transition_model(m, testing_support::small_exact_stats(m.config()));
    const std::size_t ns = m.states().size(), na = m.actions().size();
    double worst_norm = 0, worst_l1 = 0;
    Rng rng(2024);
    TraceSample sample;
    std::vector<double> counts(ns);
    const int draws = 1'000'000;
    for (std::size_t s = 0; s < ns; ++s) {
        for (std::size_t a = 0; a < na; ++a) {
            double total = 0;
            for (const auto& t : tm.row(s, a)) total += t.prob;
            worst_norm = std::max(worst_norm, std::abs(total - 1.0));
            std::fill(counts.begin(), counts.end(), 0.0);
            const auto state = m.states().state(s);
            const auto action = m.actions().action(a);
            for (int i = 0; i < draws; ++i) {
                draw_sample(params, state.type, rng, sample);
                counts[m.states().index(m.step(state, action, sample, rng).next)] += 1;
            }
            double l1 = 0;
            for (std::size_t n = 0; n < ns; ++n) l1 += std::abs(counts[n] / draws - tm.prob(s, a, n));
            worst_l1 = std::max(worst_l1, l1);
        }
    }
    const double secs = seconds_since(t0);
    return {worst_l1 <= 0.01 && worst_norm <= 1e-9 && secs < 60.0,
            fmt::format("{} (s,a) pairs x {} draws: max L1 {:.5f} (<= 0.01), max |row sum - 1| {:.1e}, {:.1f} s",
                        ns * na, draws, worst_l1, worst_norm, secs)};
}

// 2: decomposition identity on random factored MDPs.
Outcome decomposition(RunCache&) {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::size_t> d1(2, 3), d2(2, 4), da(2, 3);
    double worst_vi = 0, worst_oracle = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto f = testing_support::random_factored(d1(rng), da(rng), d2(rng), da(rng), rng);
        const auto dec = decompose(f, 0.9, 1e-9);
        worst_vi = std::max(worst_vi, dec.max_discrepancy);
        const auto exact = testing_support::policy_iteration(testing_support::brute_force_joint(f), 0.9);
        for (std::size_t s = 0; s < f.num_states(); ++s)
            for (std::size_t a = 0; a < f.num_actions(); ++a)
                worst_oracle = std::max(worst_oracle,
                                        std::abs(dec.q_reassembled(s, a) -
                                                 exact.q(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a))));
    }
    const double secs = seconds_since(t0);
    return {worst_vi <= 1e-6 && worst_oracle <= 1e-6 && secs < 30.0,
            fmt::format("20 MDPs: sup |Q_reassembled - Q*_vi| {:.2e}, vs brute-force policy iteration {:.2e} "
                        "(<= 1e-6), {:.2f} s",
                        worst_vi, worst_oracle, secs)};
}

// 3: every virtual ET equals the forced step from its buffer level.
Outcome virtual_et_exactness(RunCache&) {
    const auto t0 = Clock::now();
    const DmsModel m(DmsConfig::defaults());
    const auto params = SyntheticParams::defaults_pbi();
    const auto& cfg = m.config();
    Rng rng(99);
    std::uniform_int_distribution<std::size_t> pf(0, cfg.num_frequencies() - 1), pz(0, cfg.num_types() - 1),
        ph(0, cfg.num_configs - 1);
    std::uniform_int_distribution<int> pq(0, cfg.buffer_capacity);
    TraceSample sample;
    std::size_t checked = 0, occupancy_mismatch = 0;
    double worst_reward = 0;
    for (int trial = 0; trial < 10'000; ++trial) {
        const GlobalState s{pf(rng), pz(rng), pq(rng)};
        const GlobalAction a{pf(rng), ph(rng)};
        draw_sample(params, s.type, rng, sample);
        const auto et = ExperienceTuple::from(s, a, m.step(s, a, sample, rng));
        const auto sigma = virtual_et_expand(et, m);
        for (int q = 0; q <= cfg.buffer_capacity; ++q) {
            const auto& v = sigma[static_cast<std::size_t>(q)];
            const auto forced = m.forced_step({s.freq, s.type, q}, a, et.cost_app, sample.configs[a.config].cycles, et.arrivals,
                                              et.s_next.freq, et.s_next.type);
            if (!(v.s_next == forced.next) || v.s.occupancy != q) ++occupancy_mismatch;
            worst_reward = std::max(worst_reward, std::abs(v.r - forced.reward));
            ++checked;
        }
    }
    const double secs = seconds_since(t0);
    return {occupancy_mismatch == 0 && worst_reward <= 1e-12 && secs < 10.0,
            fmt::format("{} virtual ETs from 10000 actual ETs: {} next-state mismatches, max |r - r_forced| {:.1e}, "
                        "{:.2f} s",
                        checked, occupancy_mismatch, worst_reward, secs)};
}

// 4: buffer safety of the optimal policy under both gain forms.
Outcome buffer_safety(RunCache& cache) {
    const auto t0 = Clock::now();
    const auto proposed = total_overflows(cache.get("oracle_greedy.ini"));
    const auto conventional = total_overflows(cache.get("conventional_gain.ini"));
    const double secs = seconds_since(t0);
    return {proposed == 0 && conventional > 0 && secs < 120.0,
            fmt::format("oracle policy, 192000 slots x 5 seeds: {} overflows with the proposed gain (need 0), {} with "
                        "the conventional gain (need > 0), {:.1f} s",
                        proposed, conventional, secs)};
}

// 5: layered against centralized.
Outcome layered_vs_centralized(RunCache& cache) {
    const auto c = rewards(cache.get("default.ini"));
    const auto l = rewards(cache.get("layered.ini"));
    const double mc = mean(c), ml = mean(l), sc = stddev(c), sl = stddev(l);
    const bool overlap = std::max(mc - sc, ml - sl) <= std::min(mc + sc, ml + sl);
    return {std::abs(mc - ml) <= 0.02 && overlap,
            fmt::format("192000 slots x 5 seeds: centralized {:.4f} +- {:.4f}, layered {:.4f} +- {:.4f}, "
                        "|diff| {:.4f} (<= 0.02), 1-sigma bands {}",
                        mc, sc, ml, sl, std::abs(mc - ml), overlap ? "overlap" : "disjoint")};
}

// 6: acceleration from virtual ETs, none from truncated eligibility traces.
Outcome acceleration(RunCache& cache) {
    std::vector<double> med_r, med_e;
    for (const char* name : {"vet_psi0.ini", "vet_psi1.ini", "vet_psi15.ini"}) {
        const auto& r = cache.get(name);
        med_r.push_back(median(rewards(r)));
        med_e.push_back(median(errors(r)));
    }
    const bool increasing = med_r[0] < med_r[1] && med_r[1] < med_r[2];
    const bool halved = med_e[2] <= 0.5 * med_e[0];
    const auto td0 = rewards(cache.get("td_psi0.ini"));
    const auto td15 = rewards(cache.get("td_psi15.ini"));
    const double sigma = stddev(td0);
    const bool flat = mean(td15) - mean(td0) <= sigma;
    return {increasing && halved && flat,
            fmt::format("64000 slots x 5 seeds: virtual-ET median reward psi 0/1/15 = {:.4f}/{:.4f}/{:.4f} ({}), "
                        "median error {:.4f}/{:.4f}/{:.4f} (psi 15 {} half of psi 0); TD(lambda) mean psi 0 {:.4f}, "
                        "psi 15 {:.4f}, sigma {:.4f} ({})",
                        med_r[0], med_r[1], med_r[2], increasing ? "increasing" : "not increasing", med_e[0],
                        med_e[1], med_e[2], halved ? "within" : "above", mean(td0), mean(td15), sigma,
                        flat ? "no gain beyond 1 sigma" : "gain beyond 1 sigma")};
}

// 7: foresighted learning against the myopic baseline.
Outcome myopic_gap(RunCache& cache) {
    const double c = mean(rewards(cache.get("default.ini")));
    const auto g = rewards(cache.get("grace.ini"));
    return {c - mean(g) >= 0.2, fmt::format("192000 slots x 5 seeds: centralized {:.4f}, GRACE {:.4f} (sd {:.4f}), "
                                            "gap {:.4f} (>= 0.2)",
                                            c, mean(g), stddev(g), c - mean(g))};
}

// 8: tabular Q-learning converges on small random MDPs.
Outcome q_learning_convergence(RunCache&) {
    std::mt19937_64 gen(8);
    double worst_weighted = 0, worst_scaled = 0, worst_oracle = 0;
    const int mdps = 10;
    for (int trial = 0; trial < mdps; ++trial) {
        const auto dm = testing_support::random_mdp(3, 2, gen);
        const double gamma = 0.9;
        const auto vi = value_iteration(dm.to_model(), gamma, 1e-12);
        const auto exact = testing_support::policy_iteration(dm, gamma);
        Eigen::MatrixXd p(3, 3);
        for (std::size_t s = 0; s < 3; ++s)
            for (std::size_t t = 0; t < 3; ++t)
                p(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) = dm.p[s][vi.policy[s]][t];
        const Eigen::VectorXd mu = testing_support::stationary_exact(p);

        LearningSchedule sched;
        sched.epsilon0 = 0.2;
        QTable q(3, 2);
        std::vector<std::uint64_t> visits(6, 0);
        Rng rng(static_cast<std::uint64_t>(trial) + 100);
        std::uniform_real_distribution<double> u(0, 1);
        std::size_t s = 0;
        for (int n = 0; n < 1'000'000; ++n) {
            const auto a = epsilon_greedy(q.row(s), sched.epsilon(static_cast<std::uint64_t>(n)), rng);
            double x = u(rng);
            std::size_t next = 0;
            while (next + 1 < 3 && x >= dm.p[s][a][next]) x -= dm.p[s][a][next++];
            q_update(q, s, a, dm.r[s][a], next, sched.alpha(visits[s * 2 + a]++), gamma);
            s = next;
        }
        std::vector<double> v_star(3), mu_v(3);
        for (std::size_t i = 0; i < 3; ++i) {
            v_star[i] = vi.values[i];
            worst_oracle = std::max(worst_oracle, std::abs(v_star[i] - exact.values(static_cast<Eigen::Index>(i))));
            mu_v[i] = mu(static_cast<Eigen::Index>(i));
            worst_scaled = std::max(worst_scaled, std::abs(q.max(i) - v_star[i]) / (1 + std::abs(v_star[i])));
        }
        worst_weighted = std::max(worst_weighted, weighted_estimation_error(v_star, q.state_values(), mu_v));
    }
    return {worst_weighted < 0.05 && worst_scaled <= 0.05 && worst_oracle <= 1e-9,
            fmt::format("{} random 3-state/2-action MDPs, 1e6 steps: max weighted error {:.4f} (< 0.05), max "
                        "|V - V*|/(1+|V*|) {:.4f} (<= 0.05), value iteration vs policy iteration {:.1e}",
                        mdps, worst_weighted, worst_scaled, worst_oracle)};
}

// 9: robustness to a piecewise-stationary trace.
Outcome nonstationary(RunCache& cache) {
    const double ns = mean(rewards(cache.get("nonstationary.ini")));
    const double st = mean(rewards(cache.get("vet_psi15.ini")));
    const double rel = std::abs(ns - st) / std::abs(st);
    return {rel <= 0.10, fmt::format("virtual-ET psi 15, 64000 slots x 5 seeds: non-stationary {:.4f}, stationary "
                                     "{:.4f}, relative difference {:.2f}% (<= 10%)",
                                     ns, st, 100 * rel)};
}

// 10: runtime envelope.
Outcome performance(RunCache&) {
    auto central = shipped("default.ini");
    central.seeds = {1};
    central.oracle.enabled = false;
    auto t0 = Clock::now();
    run_experiment(central, 1);
    const double c = seconds_since(t0);

    auto vet = shipped("vet_psi45.ini", "long");
    vet.seeds = {1};
    vet.oracle.enabled = false;
    t0 = Clock::now();
    run_experiment(vet, 1);
    const double v = seconds_since(t0);
    return {c < 10.0 && v < 60.0,
            fmt::format("192000 slots, one seed: centralized {:.2f} s (< 10), virtual-ET psi 45 {:.2f} s (< 60)", c,
                        v)};
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_level(spdlog::level::warn);
    const std::vector<std::pair<std::string, std::function<Outcome(RunCache&)>>> criteria{
        {"transition model vs Monte Carlo", transition_model},
        {"layered decomposition identity", decomposition},
        {"virtual-ET exactness", virtual_et_exactness},
        {"oracle-policy buffer safety", buffer_safety},
        {"layered matches centralized", layered_vs_centralized},
        {"acceleration trend", acceleration},
        {"gap to the myopic baseline", myopic_gap},
        {"Q-learning convergence", q_learning_convergence},
        {"non-stationary robustness", nonstationary},
        {"performance envelope", performance},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    RunCache cache;
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        Outcome out{false, ""};
        try {
            out = criteria[i].second(cache);
        } catch (const std::exception& e) {
            out = {false, std::string("error: ") + e.what()};
        }
        failures += !out.pass;
        fmt::print("criterion {:2}: {} {}: {}\n", id, out.pass ? "PASS" : "FAIL", criteria[i].first, out.detail);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
