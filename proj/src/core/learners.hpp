#pragma once

// Online controllers for the DMS. Every learner acts on an Environment one
// slot at a time and exposes its current state-value estimate.

#include "dms_model.hpp"
#include "environment.hpp"
#include "mdp.hpp"

#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace dmsrl {

struct ExperienceTuple {
    GlobalState s;
    GlobalAction a;
    double r = 0.0;
    GlobalState s_next;
    int arrivals = 0;
    double g = 0.0;
    double cost_os = 0.0;
    double cost_app = 0.0;

    static ExperienceTuple from(const GlobalState& s, const GlobalAction& a, const StageOutcome& out);
};

/// Inter-layer messages of the current slot plus a running total.
class MessageLog {
public:
    void begin_slot() { slot_.clear(); }
    void send(std::string_view label) {
        slot_.push_back(label);
        ++total_;
    }
    const std::vector<std::string_view>& slot() const { return slot_; }
    std::size_t slot_count() const { return slot_.size(); }
    std::uint64_t total() const { return total_; }

private:
    std::vector<std::string_view> slot_;
    std::uint64_t total_ = 0;
};

struct SlotRecord {
    GlobalState state;
    GlobalAction action;
    StageOutcome outcome;
    double delta = 0.0;     // TD error of the (APP-side, for layered) update
    double delta_os = 0.0;  // layered only
    std::size_t cells_updated = 0;
};

class Learner {
public:
    virtual ~Learner() = default;
    virtual std::string name() const = 0;
    virtual SlotRecord step(Environment& env) = 0;
    /// V^n(s) for every global state index.
    virtual std::vector<double> value_estimate() const = 0;
    const MessageLog& messages() const { return log_; }

protected:
    MessageLog log_;
};

// ---- centralized Q-learning and its accelerated variants --------------------

class CentralizedLearner : public Learner {
public:
    CentralizedLearner(const DmsModel& model, LearningSchedule schedule, std::uint64_t seed);

    std::string name() const override { return "centralized"; }
    SlotRecord step(Environment& env) override;
    std::vector<double> value_estimate() const override { return q_.state_values(); }

    const QTable& q() const { return q_; }
    QTable& q() { return q_; }
    std::uint64_t visits(std::size_t s, std::size_t a) const { return visits_[s * q_.num_actions() + a]; }

protected:
    /// Selects, executes and applies the actual-ET update; returns the record
    /// and fills `et`.
    SlotRecord act_and_learn(Environment& env, ExperienceTuple& et);
    /// Q-learning backup with the visit-count rate of the cell; counts the visit.
    QUpdate backup(const ExperienceTuple& et);

    const DmsModel& model_;
    LearningSchedule schedule_;
    QTable q_;
    std::vector<std::uint64_t> visits_;
    Rng rng_;
    std::uint64_t slot_ = 0;
};

/// One virtual ET per buffer level q~, sharing f, z, u, h, the realized
/// arrivals and the next frequency/type of `et`. Index q~ of the result is
/// the virtual ET for that level; index et.s.occupancy equals `et`.
std::vector<ExperienceTuple> virtual_et_expand(const ExperienceTuple& et, const DmsModel& model);

class VirtualEtLearner final : public CentralizedLearner {
public:
    VirtualEtLearner(const DmsModel& model, LearningSchedule schedule, std::size_t psi, std::uint64_t seed);

    std::string name() const override { return "virtual-et"; }
    SlotRecord step(Environment& env) override;
    std::size_t psi() const { return psi_; }

private:
    std::size_t psi_;
    std::vector<ExperienceTuple> sigma_;
    std::vector<std::size_t> pool_;
};

/// Replacing eligibility traces kept lazily: e(s,a) = (gamma*lambda)^(n - last visit).
/// `recent` holds the most recently visited distinct pairs, newest first.
struct EligibilityState {
    double decay = 0.0;  // gamma * lambda
    std::size_t capacity = 1;
    std::deque<std::pair<std::size_t, std::uint64_t>> recent;  // (pair index, slot of last visit)

    void visit(std::size_t pair, std::uint64_t slot);
    double eligibility(std::size_t pair, std::uint64_t slot) const;
};

class TdLambdaLearner final : public CentralizedLearner {
public:
    TdLambdaLearner(const DmsModel& model, LearningSchedule schedule, double lambda, std::size_t psi,
                    std::uint64_t seed);

    std::string name() const override { return "td-lambda"; }
    SlotRecord step(Environment& env) override;
    const EligibilityState& traces() const { return traces_; }

private:
    double lambda_;
    std::size_t psi_;
    EligibilityState traces_;
};

// ---- layered Q-learning ---------------------------------------------------------

/// APP table Q1(s, a2, s1') and OS table Q(s, a1, a2).
struct LayeredQTables {
    std::size_t num_states = 0, num_os_states = 0, num_commands = 0, num_configs = 0;
    std::vector<double> q_app;  // (s * num_configs + a2) * num_os_states + s1'
    std::vector<double> q_os;   // (s * num_commands + a1) * num_configs + a2

    LayeredQTables() = default;
    LayeredQTables(std::size_t ns, std::size_t ns1, std::size_t na1, std::size_t na2);

    std::size_t app_index(std::size_t s, std::size_t a2, std::size_t s1_next) const {
        return (s * num_configs + a2) * num_os_states + s1_next;
    }
    std::size_t os_index(std::size_t s, std::size_t a1, std::size_t a2) const {
        return (s * num_commands + a1) * num_configs + a2;
    }
    std::span<const double> app_row(std::size_t s) const {
        return {q_app.data() + s * num_configs * num_os_states, num_configs * num_os_states};
    }
    std::span<const double> os_row(std::size_t s) const {
        return {q_os.data() + s * num_commands * num_configs, num_commands * num_configs};
    }
    double value(std::size_t s) const;
};

struct AppChoice {
    std::size_t config;
    std::size_t os_next;  // optimistic next OS state
};
struct OsChoice {
    std::size_t command;
    std::size_t config;  // the OS layer's guess of the APP action
};

AppChoice layered_app_select(const LayeredQTables& t, std::size_t s, double epsilon, Rng& rng);
OsChoice layered_os_select(const LayeredQTables& t, std::size_t s, double epsilon, Rng& rng);

struct LayeredDeltas {
    double delta_app;
    double delta_os;
};

/// The four-phase update: V from the OS table, APP update, APP forwards the
/// new Q1 value and a2, OS update. Logs those three messages when `log` is given.
LayeredDeltas layered_update(LayeredQTables& t, const StateSpace& states, const ExperienceTuple& et,
                             double alpha_os, double alpha_app, double gamma, double omega_os, double omega_app,
                             MessageLog* log = nullptr);

class LayeredLearner final : public Learner {
public:
    LayeredLearner(const DmsModel& model, LearningSchedule schedule, std::uint64_t seed);

    std::string name() const override { return "layered"; }
    SlotRecord step(Environment& env) override;
    std::vector<double> value_estimate() const override;

    const LayeredQTables& tables() const { return t_; }
    LayeredQTables& tables() { return t_; }

private:
    const DmsModel& model_;
    LearningSchedule schedule_;
    LayeredQTables t_;
    std::vector<std::uint64_t> visits_app_, visits_os_;
    Rng rng_app_, rng_os_;
    std::uint64_t slot_ = 0;
};

// ---- single-layer best response ---------------------------------------------------

enum class Layer { os, app };

/// Q-learning at one layer while the other follows a fixed policy over global states.
class BestResponseLearner final : public Learner {
public:
    BestResponseLearner(const DmsModel& model, LearningSchedule schedule, Layer learning_layer,
                        std::vector<std::size_t> other_policy, std::uint64_t seed);

    std::string name() const override {
        return layer_ == Layer::app ? "best-response-app" : "best-response-os";
    }
    SlotRecord step(Environment& env) override;
    std::vector<double> value_estimate() const override { return q_.state_values(); }
    const QTable& q() const { return q_; }

private:
    const DmsModel& model_;
    LearningSchedule schedule_;
    Layer layer_;
    std::vector<std::size_t> other_;
    QTable q_;
    std::vector<std::uint64_t> visits_;
    Rng rng_;
    std::uint64_t slot_ = 0;
};

/// Splits a joint policy into the OS command or APP config component.
std::vector<std::size_t> layer_policy(const Policy& joint, const ActionSpace& actions, Layer layer);

// ---- baselines -------------------------------------------------------------------

class OracleGreedyLearner final : public Learner {
public:
    OracleGreedyLearner(const DmsModel& model, Policy policy, std::vector<double> values);

    std::string name() const override { return "oracle-greedy"; }
    SlotRecord step(Environment& env) override;
    std::vector<double> value_estimate() const override { return values_; }

private:
    const DmsModel& model_;
    Policy policy_;
    std::vector<double> values_;
};

enum class GraceDeadline {
    unit,   // every data unit must finish within 1/eta
    queue,  // the unit in service must finish before the buffer overflows
};

std::string to_string(GraceDeadline d);
GraceDeadline grace_deadline_from_string(const std::string& text);

struct GraceParams {
    std::size_t window = 32;
    double rho = 0.9;
    double percentile = 0.95;
    GraceDeadline deadline = GraceDeadline::queue;
};

struct GraceState {
    std::deque<double> window;  // cycles of recently completed units
    double estimate = 0.0;      // exponentially averaged percentile demand
    bool has_estimate = false;
    std::vector<double> cost_sum;  // per (z, h)
    std::vector<std::uint64_t> cost_count;

    /// Pushes a completed unit's cycles and refreshes the estimate.
    void complete(double cycles, const GraceParams& params);
};

/// Nearest-rank percentile of `values` (p in (0, 1]).
double nearest_rank_percentile(std::vector<double> values, double p);

/// Lowest frequency index whose time for `cycles` fits the deadline, else the highest.
std::size_t grace_frequency(double cycles, double deadline_seconds, const std::vector<double>& frequencies);

class GraceLearner final : public Learner {
public:
    GraceLearner(const DmsModel& model, GraceParams params);

    std::string name() const override { return "grace"; }
    SlotRecord step(Environment& env) override;
    /// GRACE has no value function; reports zeros.
    std::vector<double> value_estimate() const override;

    const GraceState& state() const { return g_; }
    double deadline(const GlobalState& s) const;

private:
    const DmsModel& model_;
    GraceParams params_;
    GraceState g_;
};

}  // namespace dmsrl
