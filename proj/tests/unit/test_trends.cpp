// Long-horizon trend properties on the default system. Slower than the rest
// of the unit suites, so they live in their own ctest entry.

#include "config.hpp"
#include "experiment.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

using namespace dmsrl;

namespace {

ExperimentConfig medium_run(const std::string& learner, std::size_t psi) {
    return parse_config("[experiment]\nlearner = " + learner +
                            "\nhorizon = medium\nseeds = 1, 2, 3, 4, 5\nslot_log = false\n[learning]\npsi = " +
                            std::to_string(psi) + "\n",
                        ".");
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
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

struct SeedStats {
    std::vector<double> reward, error;
};

SeedStats collect(const ExperimentResult& r) {
    SeedStats s;
    for (const auto& run : r.runs) {
        s.reward.push_back(run.summary.avg_reward);
        s.error.push_back(run.summary.final_weighted_error);
    }
    return s;
}

const std::map<std::size_t, SeedStats>& virtual_et_sweep() {
    static const auto sweep = [] {
        std::map<std::size_t, SeedStats> out;
        for (std::size_t psi : {0, 1, 15, 30, 45}) out[psi] = collect(run_experiment(medium_run("virtual-et", psi)));
        return out;
    }();
    return sweep;
}

}  // namespace

TEST_SUITE("learner_trends") {

TEST_CASE("virtual-ET weighted error does not increase with the update budget") {
    const auto& sweep = virtual_et_sweep();
    double previous = INFINITY;
    for (std::size_t psi : {0, 1, 15, 45}) {
        const double m = median(sweep.at(psi).error);
        CAPTURE(psi);
        CAPTURE(m);
        CHECK(m <= previous);
        previous = m;
    }
}

TEST_CASE("virtual-ET average reward rises from psi 0 through 1 to 15") {
    const auto& sweep = virtual_et_sweep();
    CHECK(median(sweep.at(1).reward) > median(sweep.at(0).reward));
    CHECK(median(sweep.at(15).reward) > median(sweep.at(1).reward));
    for (std::size_t i = 0; i < 5; ++i) CHECK(sweep.at(15).reward[i] > sweep.at(0).reward[i]);
}

// Past psi = 15 the learner has converged within 64k slots and the medians of
// psi 15, 30 and 45 differ by less than their seed spread (about 0.002), so
// this check can go either way. It reports without gating the suite.
TEST_CASE("virtual-ET median average reward is nondecreasing over psi 0, 1, 15, 30, 45" * doctest::may_fail()) {
    const auto& sweep = virtual_et_sweep();
    double previous = -INFINITY;
    for (std::size_t psi : {0, 1, 15, 30, 45}) {
        const double m = median(sweep.at(psi).reward);
        CAPTURE(psi);
        CAPTURE(m);
        CHECK(m >= previous);
        previous = m;
    }
}

TEST_CASE("no learner beats the oracle policy by more than two standard deviations") {
    const auto oracle = collect(run_experiment(medium_run("oracle-greedy", 0))).reward;
    const double bound = mean(oracle);
    for (const auto& [name, psi] : {std::pair<std::string, std::size_t>{"centralized", 0}, {"layered", 0},
                                     {"td-lambda", 15}, {"grace", 0}}) {
        const auto r = collect(run_experiment(medium_run(name, psi))).reward;
        CAPTURE(name);
        CHECK(mean(r) <= bound + 2.0 * stddev(r));
    }
    const auto& vet = virtual_et_sweep().at(45).reward;
    CHECK(mean(vet) <= bound + 2.0 * stddev(vet));
}

}  // TEST_SUITE
