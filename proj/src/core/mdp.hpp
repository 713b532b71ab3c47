#pragma once

// Generic finite-MDP machinery: dense Q-tables, greedy / epsilon-greedy
// selection, sparse transition models, value iteration and stationary
// distributions of policy-induced chains.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace dmsrl {

using Rng = std::mt19937_64;

/// Dense |S| x |A| action-value table, row-major by state.
class QTable {
public:
    QTable() = default;
    QTable(std::size_t num_states, std::size_t num_actions, double init = 0.0)
        : num_states_(num_states), num_actions_(num_actions),
          values_(num_states * num_actions, init) {}

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }

    double& operator()(std::size_t s, std::size_t a) { return values_[s * num_actions_ + a]; }
    double operator()(std::size_t s, std::size_t a) const { return values_[s * num_actions_ + a]; }

    std::span<double> row(std::size_t s) { return {values_.data() + s * num_actions_, num_actions_}; }
    std::span<const double> row(std::size_t s) const {
        return {values_.data() + s * num_actions_, num_actions_};
    }

    double max(std::size_t s) const;
    std::size_t argmax(std::size_t s) const;

    /// V(s) = max_a Q(s, a) for every state.
    std::vector<double> state_values() const;

    const std::vector<double>& values() const { return values_; }
    bool all_finite() const;

private:
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<double> values_;
};

using Policy = std::vector<std::size_t>;

struct Transition {
    std::size_t next;
    double prob;
};

/// Sparse controlled Markov chain with expected rewards. Rows are stored in
/// (state, action) order; zero-probability successors are omitted.
class TransitionModel {
public:
    TransitionModel() = default;
    TransitionModel(std::size_t num_states, std::size_t num_actions);

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }

    /// Rows must be appended in (s, a) lexicographic order.
    void append_row(std::span<const Transition> successors, double reward);
    bool complete() const { return rewards_.size() == num_states_ * num_actions_; }

    std::span<const Transition> row(std::size_t s, std::size_t a) const;
    double reward(std::size_t s, std::size_t a) const { return rewards_[s * num_actions_ + a]; }

    /// Probability of `next` from (s, a); linear in the row length.
    double prob(std::size_t s, std::size_t a, std::size_t next) const;

    /// Throws ModelError unless every row is a probability vector within `tol`.
    void validate(double tol = 1e-9) const;

private:
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<std::size_t> offsets_{0};
    std::vector<Transition> entries_;
    std::vector<double> rewards_;
};

/// Visit-count learning rate alpha = alpha0 / (1 + visits)^exponent, or a
/// constant alpha0 when `decaying` is false. Exploration is either constant
/// or epsilon0 / sqrt(1 + n).
struct LearningSchedule {
    double gamma = 0.9;
    bool decaying_alpha = true;
    double alpha0 = 1.0;
    double alpha_exponent = 0.75;
    bool decaying_epsilon = false;
    double epsilon0 = 0.1;

    double alpha(std::uint64_t visits) const;
    double epsilon(std::uint64_t slot) const;
    void validate() const;
};

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

/// With probability 1 - epsilon the argmax of `q_row`, otherwise a uniform
/// index. Throws InvalidInput for an empty row or epsilon outside [0, 1].
std::size_t epsilon_greedy(std::span<const double> q_row, double epsilon, Rng& rng);

struct QUpdate {
    double delta;
    double new_value;
};

/// One Q-learning backup on cell (s, a); only that cell changes.
QUpdate q_update(QTable& q, std::size_t s, std::size_t a, double reward, std::size_t s_next,
                 double alpha, double gamma);

/// Applies the Bellman optimality operator once: (TQ)(s,a) = r + gamma * sum p V(s').
QTable bellman_backup(const TransitionModel& model, const QTable& q, double gamma);

struct ValueIterationResult {
    QTable q;
    Policy policy;
    std::vector<double> values;
    std::size_t iterations = 0;
    double residual = 0.0;
};

ValueIterationResult value_iteration(const TransitionModel& model, double gamma, double tol = 1e-8,
                                     std::size_t max_iterations = 1'000'000);

/// Greedy policy of `q` (lowest index on ties).
Policy greedy_policy(const QTable& q);

struct StationaryOptions {
    double tol = 1e-10;
    std::size_t max_iterations = 200'000;
    /// Power-iteration budget before falling back to the damped chain.
    std::size_t undamped_iterations = 10'000;
    double damping = 1e-6;
};

struct StationaryResult {
    std::vector<double> mu;
    double residual = 0.0;
    std::size_t iterations = 0;
    bool damped = false;
};

/// Power iteration from the uniform distribution on the chain induced by
/// `policy`. When that does not settle (periodic or reducible chains) the
/// fixed point of the damped chain (1-d) P + d * Uniform is solved directly;
/// the reported residual is then measured on the damped chain.
StationaryResult stationary_distribution(const TransitionModel& model, const Policy& policy,
                                         const StationaryOptions& options = {});

}  // namespace dmsrl
