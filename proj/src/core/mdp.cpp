#include "mdp.hpp"

#include "errors.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <string>

namespace dmsrl {

double QTable::max(std::size_t s) const {
    const auto r = row(s);
    return *std::max_element(r.begin(), r.end());
}

std::size_t QTable::argmax(std::size_t s) const { return dmsrl::argmax(row(s)); }

std::vector<double> QTable::state_values() const {
    std::vector<double> v(num_states_);
    for (std::size_t s = 0; s < num_states_; ++s) v[s] = max(s);
    return v;
}

bool QTable::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

TransitionModel::TransitionModel(std::size_t num_states, std::size_t num_actions)
    : num_states_(num_states), num_actions_(num_actions) {
    offsets_.reserve(num_states * num_actions + 1);
    rewards_.reserve(num_states * num_actions);
}

void TransitionModel::append_row(std::span<const Transition> successors, double reward) {
    if (complete()) throw ModelError("transition model already has all rows");
    for (const auto& t : successors) {
        if (t.next >= num_states_) throw ModelError("successor index out of range");
        if (t.prob != 0.0) entries_.push_back(t);
    }
    offsets_.push_back(entries_.size());
    rewards_.push_back(reward);
}

std::span<const Transition> TransitionModel::row(std::size_t s, std::size_t a) const {
    const std::size_t i = s * num_actions_ + a;
    return {entries_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
}

double TransitionModel::prob(std::size_t s, std::size_t a, std::size_t next) const {
    double p = 0.0;
    for (const auto& t : row(s, a))
        if (t.next == next) p += t.prob;
    return p;
}

void TransitionModel::validate(double tol) const {
    if (!complete()) throw ModelError("transition model is missing rows");
    for (std::size_t s = 0; s < num_states_; ++s) {
        for (std::size_t a = 0; a < num_actions_; ++a) {
            double total = 0.0;
            for (const auto& t : row(s, a)) {
                if (!(t.prob >= 0.0)) {
                    throw ModelError("negative transition probability at state " +
                                     std::to_string(s) + ", action " + std::to_string(a));
                }
                total += t.prob;
            }
            if (std::abs(total - 1.0) > tol) {
                throw ModelError("row (" + std::to_string(s) + ", " + std::to_string(a) +
                                 ") sums to " + std::to_string(total));
            }
            if (!std::isfinite(reward(s, a))) throw ModelError("non-finite reward");
        }
    }
}

double LearningSchedule::alpha(std::uint64_t visits) const {
    if (!decaying_alpha) return alpha0;
    return alpha0 / std::pow(1.0 + static_cast<double>(visits), alpha_exponent);
}

double LearningSchedule::epsilon(std::uint64_t slot) const {
    if (!decaying_epsilon) return epsilon0;
    return epsilon0 / std::sqrt(1.0 + static_cast<double>(slot));
}

void LearningSchedule::validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidInput("gamma must lie in [0, 1)");
    if (!(alpha0 >= 0.0 && alpha0 <= 1.0)) throw InvalidInput("alpha must lie in [0, 1]");
    if (decaying_alpha && !(alpha_exponent > 0.5 && alpha_exponent <= 1.0))
        throw InvalidInput("alpha exponent must lie in (0.5, 1] for a convergent schedule");
    if (!(epsilon0 >= 0.0 && epsilon0 <= 1.0)) throw InvalidInput("epsilon must lie in [0, 1]");
}

std::size_t argmax(std::span<const double> values) {
    if (values.empty()) throw InvalidInput("argmax over an empty action row");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

std::size_t epsilon_greedy(std::span<const double> q_row, double epsilon, Rng& rng) {
    if (q_row.empty()) throw InvalidInput("epsilon-greedy over an empty action row");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidInput("epsilon must lie in [0, 1]");
    if (epsilon > 0.0) {
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        if (coin(rng) < epsilon) {
            std::uniform_int_distribution<std::size_t> pick(0, q_row.size() - 1);
            return pick(rng);
        }
    }
    return argmax(q_row);
}

QUpdate q_update(QTable& q, std::size_t s, std::size_t a, double reward, std::size_t s_next,
                 double alpha, double gamma) {
    const double target = reward + gamma * q.max(s_next);
    const double delta = target - q(s, a);
    q(s, a) += alpha * delta;
    return {delta, q(s, a)};
}

namespace {

double expected_next_value(const TransitionModel& model, std::size_t s, std::size_t a,
                           const std::vector<double>& v) {
    double acc = 0.0;
    for (const auto& t : model.row(s, a)) acc += t.prob * v[t.next];
    return acc;
}

}  // namespace

QTable bellman_backup(const TransitionModel& model, const QTable& q, double gamma) {
    const auto v = q.state_values();
    QTable out(model.num_states(), model.num_actions());
    for (std::size_t s = 0; s < model.num_states(); ++s)
        for (std::size_t a = 0; a < model.num_actions(); ++a)
            out(s, a) = model.reward(s, a) + gamma * expected_next_value(model, s, a, v);
    return out;
}

Policy greedy_policy(const QTable& q) {
    Policy pi(q.num_states());
    for (std::size_t s = 0; s < q.num_states(); ++s) pi[s] = q.argmax(s);
    return pi;
}

ValueIterationResult value_iteration(const TransitionModel& model, double gamma, double tol,
                                     std::size_t max_iterations) {
    model.validate();
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidInput("gamma must lie in [0, 1)");
    if (!(tol > 0.0)) throw InvalidInput("value-iteration tolerance must be positive");

    const std::size_t ns = model.num_states();
    const std::size_t na = model.num_actions();
    ValueIterationResult res;
    res.q = QTable(ns, na);
    std::vector<double> v(ns, 0.0);

    // Stopping on |Q_{k+1} - Q_k| <= tol bounds the residual of Q_{k+1} by gamma * tol.
    for (std::size_t it = 1; it <= max_iterations; ++it) {
        double change = 0.0;
        for (std::size_t s = 0; s < ns; ++s) {
            for (std::size_t a = 0; a < na; ++a) {
                const double updated = model.reward(s, a) + gamma * expected_next_value(model, s, a, v);
                change = std::max(change, std::abs(updated - res.q(s, a)));
                res.q(s, a) = updated;
            }
        }
        v = res.q.state_values();
        res.iterations = it;
        res.residual = gamma * change;
        if (change <= tol) {
            res.values = std::move(v);
            res.policy = greedy_policy(res.q);
            return res;
        }
    }
    throw NumericalError("value iteration did not converge", res.residual);
}

StationaryResult stationary_distribution(const TransitionModel& model, const Policy& policy,
                                         const StationaryOptions& options) {
    model.validate();
    const std::size_t ns = model.num_states();
    if (policy.size() != ns) throw PolicyError("policy does not cover every state");
    for (auto a : policy)
        if (a >= model.num_actions()) throw PolicyError("policy action out of range");

    auto iterate = [&](double damping, std::size_t cap, StationaryResult& out) {
        std::vector<double> mu(ns, 1.0 / static_cast<double>(ns));
        std::vector<double> next(ns);
        const double teleport = damping / static_cast<double>(ns);
        for (std::size_t it = 1; it <= cap; ++it) {
            std::fill(next.begin(), next.end(), teleport);
            for (std::size_t s = 0; s < ns; ++s) {
                const double m = (1.0 - damping) * mu[s];
                if (m == 0.0) continue;
                for (const auto& t : model.row(s, policy[s])) next[t.next] += m * t.prob;
            }
            double sum = 0.0;
            for (double x : next) sum += x;
            double residual = 0.0;
            for (std::size_t s = 0; s < ns; ++s) {
                next[s] /= sum;
                residual += std::abs(next[s] - mu[s]);
            }
            mu.swap(next);
            out.iterations = it;
            out.residual = residual;
            if (residual <= options.tol) {
                out.mu = std::move(mu);
                return true;
            }
        }
        return false;
    };

    StationaryResult res;
    if (iterate(0.0, std::min(options.undamped_iterations, options.max_iterations), res)) return res;

    // Periodic or reducible chain. The damped chain (1-d) P + d U is ergodic,
    // but power iteration on it contracts only at rate (1-d), so solve its
    // fixed point directly: mu (I - (1-d) P) = (d/n) 1.
    res.damped = true;
    const double d = options.damping;
    const double keep = 1.0 - d;
    std::vector<Eigen::Triplet<double>> entries;
    for (std::size_t s = 0; s < ns; ++s) {
        entries.emplace_back(static_cast<int>(s), static_cast<int>(s), 1.0);
        for (const auto& t : model.row(s, policy[s]))
            entries.emplace_back(static_cast<int>(t.next), static_cast<int>(s), -keep * t.prob);  // transposed
    }
    Eigen::SparseMatrix<double> a(static_cast<int>(ns), static_cast<int>(ns));
    a.setFromTriplets(entries.begin(), entries.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw NumericalError("damped stationary system is singular", res.residual);
    const Eigen::VectorXd rhs = Eigen::VectorXd::Constant(static_cast<int>(ns), d / static_cast<double>(ns));
    const Eigen::VectorXd x = lu.solve(rhs);

    std::vector<double> mu(ns);
    double sum = 0.0;
    for (std::size_t s = 0; s < ns; ++s) sum += (mu[s] = std::max(0.0, x(static_cast<int>(s))));
    for (auto& m : mu) m /= sum;

    // Residual of the damped chain, for the caller and the check below.
    std::vector<double> next(ns, d / static_cast<double>(ns));
    for (std::size_t s = 0; s < ns; ++s)
        for (const auto& t : model.row(s, policy[s])) next[t.next] += keep * mu[s] * t.prob;
    res.residual = 0.0;
    for (std::size_t s = 0; s < ns; ++s) res.residual += std::abs(next[s] - mu[s]);
    res.mu = std::move(mu);
    if (!(res.residual <= std::max(options.tol, 1e-12 * static_cast<double>(ns))))
        throw NumericalError("stationary distribution did not converge", res.residual);
    return res;
}

}  // namespace dmsrl
