#pragma once

// Two-layer dynamic multimedia system: a joint OS/HW layer that switches the
// processor frequency and an application layer that encodes one data unit per
// slot out of a pre-encoding buffer.

#include "mdp.hpp"
#include "trace.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dmsrl {

enum class GainMode { proposed, conventional };

std::string to_string(GainMode mode);
GainMode gain_mode_from_string(const std::string& text);

struct DmsConfig {
    std::vector<double> frequencies;  // Hz, strictly increasing
    std::vector<std::string> type_labels;
    std::size_t num_configs = 3;
    double beta = 0.9;
    double kappa = 1.5e-27;
    double theta = 3.0;
    int buffer_capacity = 50;
    double arrival_rate = 44.0;
    int initial_occupancy = 0;
    std::size_t initial_frequency = 0;  // index into `frequencies`
    double omega_os = 22.0 / 125.0;
    double omega_app = 22.0 / 1875.0;
    double lambda_rd = 1.0 / 16.0;
    std::vector<double> type_transition;  // row-major num_types x num_types
    GainMode gain = GainMode::proposed;

    std::size_t num_frequencies() const { return frequencies.size(); }
    std::size_t num_types() const { return type_labels.size(); }

    /// Defaults: five frequencies 200..1000 MHz, types P/B/I,
    /// three encoder configurations, N_q = 50.
    static DmsConfig defaults();

    void validate() const;
};

/// Default I/P/B chain: stationary ratio I:P:B = 1:3:8 with sticky runs.
std::vector<double> default_type_transition();

/// Type label index lookup; -1 when absent.
int find_type(const DmsConfig& cfg, const std::string& label);

struct GlobalState {
    std::size_t freq = 0;  // index into DmsConfig::frequencies
    std::size_t type = 0;
    int occupancy = 0;

    friend bool operator==(const GlobalState&, const GlobalState&) = default;
};

struct GlobalAction {
    std::size_t command = 0;  // frequency index requested for the next slot
    std::size_t config = 0;   // encoder configuration

    friend bool operator==(const GlobalAction&, const GlobalAction&) = default;
};

/// Dense bijection between GlobalState and [0, |S|). The index is
/// (freq * num_types + type) * (N_q + 1) + occupancy, so the OS-layer state
/// is the slowest-varying component.
class StateSpace {
public:
    StateSpace() = default;
    StateSpace(std::size_t num_frequencies, std::size_t num_types, int buffer_capacity)
        : num_frequencies_(num_frequencies), num_types_(num_types),
          levels_(static_cast<std::size_t>(buffer_capacity) + 1) {}

    std::size_t size() const { return num_frequencies_ * num_types_ * levels_; }
    std::size_t num_frequencies() const { return num_frequencies_; }
    std::size_t num_types() const { return num_types_; }
    std::size_t num_levels() const { return levels_; }
    /// Size of the application-layer state set (type, occupancy).
    std::size_t app_size() const { return num_types_ * levels_; }

    std::size_t index(const GlobalState& s) const;
    GlobalState state(std::size_t index) const;
    bool contains(const GlobalState& s) const;

private:
    std::size_t num_frequencies_ = 0;
    std::size_t num_types_ = 0;
    std::size_t levels_ = 0;
};

/// Dense bijection between GlobalAction and [0, |A|): command * num_configs + config.
class ActionSpace {
public:
    ActionSpace() = default;
    ActionSpace(std::size_t num_commands, std::size_t num_configs)
        : num_commands_(num_commands), num_configs_(num_configs) {}

    std::size_t size() const { return num_commands_ * num_configs_; }
    std::size_t num_commands() const { return num_commands_; }
    std::size_t num_configs() const { return num_configs_; }

    std::size_t index(const GlobalAction& a) const { return a.command * num_configs_ + a.config; }
    GlobalAction action(std::size_t index) const {
        return {index / num_configs_, index % num_configs_};
    }

private:
    std::size_t num_commands_ = 0;
    std::size_t num_configs_ = 0;
};

struct BufferStep {
    int next;
    int overflow;
};

/// q' = min([q + arrivals - 1]^+, N_q); overflow = max(q + arrivals - 1 - N_q, 0).
BufferStep buffer_step(int occupancy, int arrivals, int capacity);

/// Delay-related utility gain for the occupancy seen by the data unit in service.
double utility_gain(int occupancy, int arrivals, int capacity, GainMode mode);

/// floor(cycles / frequency * arrival_rate).
int arrival_count(double cycles, double frequency, double arrival_rate);

struct StageOutcome {
    double reward = 0.0;
    double gain = 0.0;
    double cost_os = 0.0;   // watts
    double cost_app = 0.0;  // distortion + lambda * bits
    int arrivals = 0;
    double delay = 0.0;  // seconds
    double cycles = 0.0;
    int overflow = 0;
    GlobalState next;
};

class DmsModel {
public:
    explicit DmsModel(DmsConfig config);

    const DmsConfig& config() const { return cfg_; }
    const StateSpace& states() const { return states_; }
    const ActionSpace& actions() const { return actions_; }

    /// kappa * f^theta for a frequency in the operating set (Hz).
    double power_cost(double frequency) const;
    double power_cost_at(std::size_t freq_index) const { return power_[freq_index]; }

    /// d + lambda_rd * b for configuration h of `sample`.
    double app_cost(const TraceSample& sample, std::size_t config) const;
    double app_cost(const Measurement& m) const { return m.distortion + cfg_.lambda_rd * m.bits; }

    /// g - omega_os * J_os - omega_app * J_app, evaluated in one fixed order.
    double compose_reward(double gain, double cost_os, double cost_app) const;

    /// Simulates one slot: processing delay, arrivals, buffer recursion,
    /// frequency switch with probability beta and a type transition.
    StageOutcome step(const GlobalState& state, const GlobalAction& action, const TraceSample& sample,
                      Rng& rng) const;

    /// Like step() but with the random transitions supplied explicitly; the
    /// type of the next data unit is `next_type`.
    StageOutcome step_with_next_type(const GlobalState& state, const GlobalAction& action,
                                     const TraceSample& sample, std::size_t next_type, Rng& rng) const;

    /// Deterministic slot given every random quantity.
    StageOutcome forced_step(const GlobalState& state, const GlobalAction& action, double cost_app,
                             double cycles, int arrivals, std::size_t next_freq,
                             std::size_t next_type) const;

    std::size_t draw_next_frequency(std::size_t freq, std::size_t command, Rng& rng) const;
    std::size_t draw_next_type(std::size_t type, Rng& rng) const;

    double type_transition(std::size_t from, std::size_t to) const {
        return cfg_.type_transition[from * cfg_.num_types() + to];
    }

    /// p(f' | f, u) for the frequency-switching layer.
    double frequency_transition(std::size_t from, std::size_t command, std::size_t to) const;

    GlobalState initial_state(std::size_t type) const;

private:
    void check_state(const GlobalState& s) const;

    DmsConfig cfg_;
    StateSpace states_;
    ActionSpace actions_;
    std::vector<double> power_;
};

}  // namespace dmsrl
