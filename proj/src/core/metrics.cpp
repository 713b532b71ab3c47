#include "metrics.hpp"

#include "errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace dmsrl {

void RunStats::record(const SlotRecord& rec) {
    const auto& o = rec.outcome;
    ++slots_;
    reward_sum_ += o.reward;
    power_sum_ += o.cost_os;
    cost_app_sum_ += o.cost_app;
    gain_sum_ += o.gain;
    overflows_ += static_cast<std::uint64_t>(o.overflow);
    if (keep_log_)
        log_.push_back({rec.state, rec.action, o.reward, o.gain, o.cost_os, o.cost_app, o.arrivals, o.overflow});
}

void RunStats::add_checkpoint(double weighted_error) {
    const double avg = slots_ == 0 ? 0.0 : reward_sum_ / static_cast<double>(slots_);
    checkpoints_.push_back({slots_, avg, weighted_error});
}

Summary summarize(const RunStats& stats) {
    if (stats.slots() == 0) throw MetricError("cannot summarize an empty run");
    const double n = static_cast<double>(stats.slots());
    Summary s;
    s.slots = stats.slots();
    s.avg_reward = stats.reward_sum() / n;
    s.avg_power = stats.power_sum() / n;
    s.avg_rate_distortion = stats.cost_app_sum() / n;
    s.avg_gain = stats.gain_sum() / n;
    s.overflows = stats.overflows();
    if (!stats.checkpoints().empty()) s.final_weighted_error = stats.checkpoints().back().weighted_error;
    return s;
}

Summary summarize_log(const std::vector<SlotLogEntry>& log) {
    if (log.empty()) throw MetricError("cannot summarize an empty run");
    double r = 0.0, p = 0.0, j = 0.0, g = 0.0;
    std::uint64_t of = 0;
    for (const auto& e : log) {
        r += e.reward;
        p += e.cost_os;
        j += e.cost_app;
        g += e.gain;
        of += static_cast<std::uint64_t>(e.overflow);
    }
    const double n = static_cast<double>(log.size());
    Summary s;
    s.slots = log.size();
    s.avg_reward = r / n;
    s.avg_power = p / n;
    s.avg_rate_distortion = j / n;
    s.avg_gain = g / n;
    s.overflows = of;
    return s;
}

double weighted_estimation_error(const std::vector<double>& v_star, const std::vector<double>& v,
                                 const std::vector<double>& mu) {
    if (v_star.size() != v.size() || v.size() != mu.size())
        throw MetricError("value vectors and weights must cover the same states");
    std::vector<std::size_t> undefined;
    double err = 0.0;
    for (std::size_t s = 0; s < mu.size(); ++s) {
        if (mu[s] <= 0.0) continue;
        if (v_star[s] == 0.0) {
            undefined.push_back(s);
            continue;
        }
        err += mu[s] * std::abs((v_star[s] - v[s]) / v_star[s]);
    }
    if (!undefined.empty())
        throw MetricError(fmt::format("relative error undefined where V* = 0 on the weighted support: states {}",
                                      fmt::join(undefined, ", ")));
    return err;
}

}  // namespace dmsrl
