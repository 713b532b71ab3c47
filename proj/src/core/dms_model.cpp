#include "dms_model.hpp"

#include "errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace dmsrl {

std::string to_string(GainMode mode) { return mode == GainMode::proposed ? "proposed" : "conventional"; }

GainMode gain_mode_from_string(const std::string& text) {
    if (text == "proposed") return GainMode::proposed;
    if (text == "conventional") return GainMode::conventional;
    throw ConfigError("gain must be 'proposed' or 'conventional', got '" + text + "'");
}

std::vector<double> default_type_transition() {
    // Order P, B, I. Each unit keeps its type with probability 0.9 and
    // otherwise redraws from the GOP mix 3:8:1, which leaves that mix stationary.
    constexpr double stay = 0.9;
    const double mix[3] = {3.0 / 12.0, 8.0 / 12.0, 1.0 / 12.0};
    std::vector<double> m(9);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m[i * 3 + j] = (1.0 - stay) * mix[j] + (i == j ? stay : 0.0);
    return m;
}

DmsConfig DmsConfig::defaults() {
    DmsConfig c;
    c.frequencies = {200e6, 400e6, 600e6, 800e6, 1000e6};
    c.type_labels = {"P", "B", "I"};
    c.type_transition = default_type_transition();
    c.initial_frequency = c.frequencies.size() - 1;
    return c;
}

void DmsConfig::validate() const {
    if (frequencies.empty()) throw ConfigError("dms.frequencies must not be empty");
    for (std::size_t i = 0; i < frequencies.size(); ++i) {
        if (!(frequencies[i] > 0.0)) throw ConfigError("dms.frequencies must be positive");
        if (i > 0 && !(frequencies[i] > frequencies[i - 1]))
            throw ConfigError("dms.frequencies must be strictly increasing");
    }
    if (type_labels.empty()) throw ConfigError("dms.types must not be empty");
    if (num_configs == 0) throw ConfigError("dms.configs must be at least 1");
    if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("dms.beta must lie in (0, 1]");
    if (!(kappa > 0.0)) throw ConfigError("dms.kappa must be positive");
    if (!(theta > 0.0)) throw ConfigError("dms.theta must be positive");
    if (buffer_capacity < 1) throw ConfigError("dms.buffer_capacity must be at least 1");
    if (!(arrival_rate > 0.0)) throw ConfigError("dms.arrival_rate must be positive");
    if (initial_occupancy < 0 || initial_occupancy > buffer_capacity)
        throw ConfigError("dms.initial_occupancy must lie in [0, buffer_capacity]");
    if (initial_frequency >= frequencies.size())
        throw ConfigError("dms.initial_frequency must be one of dms.frequencies");
    if (!(omega_os >= 0.0) || !(omega_app >= 0.0) || !(lambda_rd >= 0.0))
        throw ConfigError("dms weights must be non-negative");
    const std::size_t nz = type_labels.size();
    if (type_transition.size() != nz * nz)
        throw ConfigError(fmt::format("dms.type_transition needs {} entries", nz * nz));
    for (std::size_t i = 0; i < nz; ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < nz; ++j) {
            const double p = type_transition[i * nz + j];
            if (!(p >= 0.0)) throw ConfigError("dms.type_transition entries must be non-negative");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw ConfigError(fmt::format("dms.type_transition row {} sums to {}", i, total));
    }
}

int find_type(const DmsConfig& cfg, const std::string& label) {
    const auto it = std::find(cfg.type_labels.begin(), cfg.type_labels.end(), label);
    return it == cfg.type_labels.end() ? -1 : static_cast<int>(it - cfg.type_labels.begin());
}

std::size_t StateSpace::index(const GlobalState& s) const {
    if (!contains(s)) throw InvalidInput("state outside the state space");
    return (s.freq * num_types_ + s.type) * levels_ + static_cast<std::size_t>(s.occupancy);
}

GlobalState StateSpace::state(std::size_t index) const {
    if (index >= size()) throw InvalidInput("state index out of range");
    GlobalState s;
    s.occupancy = static_cast<int>(index % levels_);
    index /= levels_;
    s.type = index % num_types_;
    s.freq = index / num_types_;
    return s;
}

bool StateSpace::contains(const GlobalState& s) const {
    return s.freq < num_frequencies_ && s.type < num_types_ && s.occupancy >= 0 &&
           static_cast<std::size_t>(s.occupancy) < levels_;
}

BufferStep buffer_step(int occupancy, int arrivals, int capacity) {
    const int raw = occupancy + arrivals - 1;
    return {std::min(std::max(raw, 0), capacity), std::max(raw - capacity, 0)};
}

double utility_gain(int occupancy, int arrivals, int capacity, GainMode mode) {
    const int load = occupancy + arrivals - 1;
    if (mode == GainMode::proposed) {
        const double x = static_cast<double>(load) / static_cast<double>(capacity);
        return 1.0 - x * x;
    }
    return load <= capacity ? 1.0 : static_cast<double>(capacity - load);
}

int arrival_count(double cycles, double frequency, double arrival_rate) {
    const double delay = cycles / frequency;
    return static_cast<int>(std::floor(delay * arrival_rate));
}

DmsModel::DmsModel(DmsConfig config) : cfg_(std::move(config)) {
    cfg_.validate();
    states_ = StateSpace(cfg_.num_frequencies(), cfg_.num_types(), cfg_.buffer_capacity);
    actions_ = ActionSpace(cfg_.num_frequencies(), cfg_.num_configs);
    for (double f : cfg_.frequencies) power_.push_back(cfg_.kappa * std::pow(f, cfg_.theta));
}

double DmsModel::power_cost(double frequency) const {
    const auto it = std::find(cfg_.frequencies.begin(), cfg_.frequencies.end(), frequency);
    if (it == cfg_.frequencies.end())
        throw InvalidInput(fmt::format("frequency {} Hz is not an operating frequency", frequency));
    return power_[static_cast<std::size_t>(it - cfg_.frequencies.begin())];
}

double DmsModel::app_cost(const TraceSample& sample, std::size_t config) const {
    if (config >= sample.configs.size())
        throw TraceError(fmt::format("trace sample has no column for configuration h{}", config + 1));
    return app_cost(sample.configs[config]);
}

double DmsModel::compose_reward(double gain, double cost_os, double cost_app) const {
    return gain - cfg_.omega_os * cost_os - cfg_.omega_app * cost_app;
}

void DmsModel::check_state(const GlobalState& s) const {
    if (!states_.contains(s)) throw InvalidInput("state outside the state space");
}

double DmsModel::frequency_transition(std::size_t from, std::size_t command, std::size_t to) const {
    if (command == from) return to == from ? 1.0 : 0.0;
    if (to == command) return cfg_.beta;
    if (to == from) return 1.0 - cfg_.beta;
    return 0.0;
}

std::size_t DmsModel::draw_next_frequency(std::size_t freq, std::size_t command, Rng& rng) const {
    if (command == freq || cfg_.beta >= 1.0) return command;
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    return coin(rng) < cfg_.beta ? command : freq;
}

std::size_t DmsModel::draw_next_type(std::size_t type, Rng& rng) const {
    const std::size_t nz = cfg_.num_types();
    if (nz == 1) return 0;
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    const double u = coin(rng);
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < nz; ++j) {
        acc += type_transition(type, j);
        if (u < acc) return j;
    }
    return nz - 1;
}

StageOutcome DmsModel::forced_step(const GlobalState& state, const GlobalAction& action, double cost_app,
                                   double cycles, int arrivals, std::size_t next_freq,
                                   std::size_t next_type) const {
    check_state(state);
    const auto buf = buffer_step(state.occupancy, arrivals, cfg_.buffer_capacity);
    StageOutcome out;
    out.cost_os = power_[state.freq];
    out.cost_app = cost_app;
    out.cycles = cycles;
    out.delay = cycles / cfg_.frequencies[state.freq];
    out.arrivals = arrivals;
    out.overflow = buf.overflow;
    out.gain = utility_gain(state.occupancy, arrivals, cfg_.buffer_capacity, cfg_.gain);
    out.reward = compose_reward(out.gain, out.cost_os, out.cost_app);
    out.next = GlobalState{next_freq, next_type, buf.next};
    (void)action;
    return out;
}

StageOutcome DmsModel::step_with_next_type(const GlobalState& state, const GlobalAction& action,
                                           const TraceSample& sample, std::size_t next_type,
                                           Rng& rng) const {
    check_state(state);
    if (action.command >= cfg_.num_frequencies() || action.config >= cfg_.num_configs)
        throw InvalidInput("action outside the action space");
    if (sample.type != state.type) throw InvalidInput("trace sample type differs from the state's type");
    if (sample.configs.size() <= action.config)
        throw TraceError(fmt::format("trace sample has no column for configuration h{}", action.config + 1));
    const auto& m = sample.configs[action.config];
    const int arrivals = arrival_count(m.cycles, cfg_.frequencies[state.freq], cfg_.arrival_rate);
    const std::size_t next_freq = draw_next_frequency(state.freq, action.command, rng);
    return forced_step(state, action, app_cost(m), m.cycles, arrivals, next_freq, next_type);
}

StageOutcome DmsModel::step(const GlobalState& state, const GlobalAction& action, const TraceSample& sample,
                            Rng& rng) const {
    check_state(state);
    if (action.command >= cfg_.num_frequencies() || action.config >= cfg_.num_configs)
        throw InvalidInput("action outside the action space");
    if (sample.type != state.type) throw InvalidInput("trace sample type differs from the state's type");
    if (sample.configs.size() <= action.config)
        throw TraceError(fmt::format("trace sample has no column for configuration h{}", action.config + 1));
    const auto& m = sample.configs[action.config];
    const int arrivals = arrival_count(m.cycles, cfg_.frequencies[state.freq], cfg_.arrival_rate);
    const std::size_t next_freq = draw_next_frequency(state.freq, action.command, rng);
    const std::size_t next_type = draw_next_type(state.type, rng);
    return forced_step(state, action, app_cost(m), m.cycles, arrivals, next_freq, next_type);
}

GlobalState DmsModel::initial_state(std::size_t type) const {
    return GlobalState{cfg_.initial_frequency, type, cfg_.initial_occupancy};
}

}  // namespace dmsrl
