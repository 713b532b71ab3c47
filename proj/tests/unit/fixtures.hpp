#pragma once

// Reduced DMS instance shared by model, assembly and learner tests:
// 2 frequencies, 2 types, 2 configurations, N_q = 5. Cycle counts are
// drawn uniformly from four values so every arrival pmf is known exactly.

#include "dms_model.hpp"
#include "model_assembly.hpp"
#include "trace.hpp"

#include <cmath>
#include <map>
#include <vector>

namespace testing_support {

inline dmsrl::DmsConfig small_config() {
    dmsrl::DmsConfig c;
    c.frequencies = {200e6, 400e6};
    c.type_labels = {"P", "I"};
    c.num_configs = 2;
    c.buffer_capacity = 5;
    c.initial_frequency = 1;
    c.type_transition = {0.8, 0.2, 0.3, 0.7};
    return c;
}

// Cycle support per (type, config); each value has probability 1/4.
inline std::vector<double> small_cycle_values(std::size_t type, std::size_t config) {
    const double base = type == 0 ? 1.0 : 1.5;
    const double shrink = config == 0 ? 1.0 : 0.8;
    std::vector<double> v;
    for (double c : {2e6, 6e6, 1.2e7, 2e7}) v.push_back(c * base * shrink);
    return v;
}

inline dmsrl::SyntheticParams small_params() {
    dmsrl::SyntheticParams p;
    p.num_types = 2;
    p.num_configs = 2;
    for (std::size_t z = 0; z < 2; ++z)
        for (std::size_t h = 0; h < 2; ++h)
            p.cells.push_back({dmsrl::Distribution::point(100.0 + 10.0 * static_cast<double>(h) + 30.0 * z),
                               dmsrl::Distribution::point(8.0 - static_cast<double>(h)),
                               dmsrl::Distribution::empirical(small_cycle_values(z, h))});
    return p;
}

/// Exact arrival statistics of small_params(), computed by enumeration.
inline dmsrl::ArrivalStatistics small_exact_stats(const dmsrl::DmsConfig& cfg) {
    dmsrl::ArrivalStatistics st;
    st.num_frequencies = cfg.frequencies.size();
    st.num_types = 2;
    st.num_configs = 2;
    const auto params = small_params();
    for (std::size_t f = 0; f < st.num_frequencies; ++f)
        for (std::size_t z = 0; z < 2; ++z)
            for (std::size_t h = 0; h < 2; ++h) {
                std::vector<double> pmf;
                for (double c : small_cycle_values(z, h)) {
                    const auto k = static_cast<std::size_t>(std::floor(c / cfg.frequencies[f] * cfg.arrival_rate));
                    if (pmf.size() <= k) pmf.resize(k + 1, 0.0);
                    pmf[k] += 0.25;
                }
                st.pmf.push_back(pmf);
            }
    for (std::size_t z = 0; z < 2; ++z)
        for (std::size_t h = 0; h < 2; ++h) {
            const auto& cell = params.cell(z, h);
            st.mean_cost_app.push_back(cell.distortion.mean() + cfg.lambda_rd * cell.bits.mean());
            st.counts.push_back(1);
        }
    return st;
}

}  // namespace testing_support
