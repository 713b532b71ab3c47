#pragma once

// One simulated DMS: model, trace stream and the environment's own random
// source. Learners observe state(), pick an action and call step().

#include "dms_model.hpp"
#include "trace.hpp"

#include <cstdint>
#include <memory>

namespace dmsrl {

class Environment {
public:
    Environment(std::shared_ptr<const DmsModel> model, std::unique_ptr<TraceStream> stream, std::uint64_t seed);

    const DmsModel& model() const { return *model_; }
    const GlobalState& state() const { return state_; }
    /// Data unit that the next step() encodes.
    const TraceSample& sample() const { return *sample_; }
    std::uint64_t slot() const { return slot_; }

    StageOutcome step(const GlobalAction& action);

private:
    std::shared_ptr<const DmsModel> model_;
    std::unique_ptr<TraceStream> stream_;
    Rng rng_;
    GlobalState state_;
    const TraceSample* sample_ = nullptr;
    std::uint64_t slot_ = 0;
};

/// Stationary distribution of the type chain.
std::vector<double> type_stationary_distribution(const DmsModel& model);

}  // namespace dmsrl
