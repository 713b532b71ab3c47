#include "environment.hpp"

#include "errors.hpp"

#include <cmath>

namespace dmsrl {

std::vector<double> type_stationary_distribution(const DmsModel& model) {
    const std::size_t nz = model.config().num_types();
    std::vector<double> pi(nz, 1.0 / static_cast<double>(nz)), next(nz);
    for (int it = 0; it < 100'000; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < nz; ++i)
            for (std::size_t j = 0; j < nz; ++j) next[j] += pi[i] * model.type_transition(i, j);
        double diff = 0.0;
        for (std::size_t i = 0; i < nz; ++i) diff += std::abs(next[i] - pi[i]);
        pi.swap(next);
        if (diff < 1e-14) break;
    }
    return pi;
}

Environment::Environment(std::shared_ptr<const DmsModel> model, std::unique_ptr<TraceStream> stream,
                         std::uint64_t seed)
    : model_(std::move(model)), stream_(std::move(stream)), rng_(seed) {
    if (!model_ || !stream_) throw InvalidInput("environment needs a model and a trace stream");
    std::size_t type = 0;
    if (stream_->dictates_types()) {
        type = stream_->peek_type();
    } else {
        const auto pi = type_stationary_distribution(*model_);
        std::discrete_distribution<std::size_t> pick(pi.begin(), pi.end());
        type = pick(rng_);
    }
    if (type >= model_->config().num_types()) throw TraceError("trace type outside the configured type set");
    state_ = model_->initial_state(type);
    sample_ = &stream_->next(type);
}

StageOutcome Environment::step(const GlobalAction& action) {
    const std::size_t next_type =
        stream_->dictates_types() ? stream_->peek_type() : model_->draw_next_type(state_.type, rng_);
    auto out = model_->step_with_next_type(state_, action, *sample_, next_type, rng_);
    state_ = out.next;
    sample_ = &stream_->next(next_type);
    ++slot_;
    return out;
}

}  // namespace dmsrl
