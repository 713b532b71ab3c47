#pragma once

// Per-run accounting and evaluation metrics.

#include "learners.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace dmsrl {

struct SlotLogEntry {
    GlobalState state;
    GlobalAction action;
    double reward;
    double gain;
    double cost_os;
    double cost_app;
    int arrivals;
    int overflow;
};

struct Checkpoint {
    std::uint64_t slot;            // slots completed
    double cumulative_avg_reward;
    double weighted_error;         // NaN without an oracle
};

class RunStats {
public:
    explicit RunStats(bool keep_log = true) : keep_log_(keep_log) {}

    void record(const SlotRecord& rec);
    void add_checkpoint(double weighted_error);

    std::uint64_t slots() const { return slots_; }
    double reward_sum() const { return reward_sum_; }
    double power_sum() const { return power_sum_; }
    double cost_app_sum() const { return cost_app_sum_; }
    double gain_sum() const { return gain_sum_; }
    std::uint64_t overflows() const { return overflows_; }

    bool keeps_log() const { return keep_log_; }
    const std::vector<SlotLogEntry>& log() const { return log_; }
    const std::vector<Checkpoint>& checkpoints() const { return checkpoints_; }

private:
    bool keep_log_;
    std::vector<SlotLogEntry> log_;
    std::vector<Checkpoint> checkpoints_;
    std::uint64_t slots_ = 0;
    double reward_sum_ = 0.0;
    double power_sum_ = 0.0;
    double cost_app_sum_ = 0.0;
    double gain_sum_ = 0.0;
    std::uint64_t overflows_ = 0;
};

struct Summary {
    std::uint64_t slots = 0;
    double avg_reward = 0.0;
    double avg_power = 0.0;
    double avg_rate_distortion = 0.0;
    double avg_gain = 0.0;
    std::uint64_t overflows = 0;
    double final_weighted_error = std::numeric_limits<double>::quiet_NaN();
};

/// Throws MetricError for an empty run.
Summary summarize(const RunStats& stats);

/// Same quantities recomputed from the per-slot log.
Summary summarize_log(const std::vector<SlotLogEntry>& log);

/// sum_s mu(s) |(V*(s) - V(s)) / V*(s)|. Throws MetricError listing states
/// with mu(s) > 0 and V*(s) = 0.
double weighted_estimation_error(const std::vector<double>& v_star, const std::vector<double>& v,
                                 const std::vector<double>& mu);

}  // namespace dmsrl
