#pragma once

// Small independent reference solvers used as test oracles. They work on
// dense matrices and share no code with the library's solvers.

#include "mdp.hpp"
#include "model_assembly.hpp"

#include <Eigen/Dense>

#include <random>
#include <vector>

namespace testing_support {

struct DenseMdp {
    std::size_t ns = 0, na = 0;
    std::vector<std::vector<std::vector<double>>> p;  // p[s][a][s']
    std::vector<std::vector<double>> r;              // r[s][a]

    dmsrl::TransitionModel to_model() const {
        dmsrl::TransitionModel m(ns, na);
        for (std::size_t s = 0; s < ns; ++s)
            for (std::size_t a = 0; a < na; ++a) {
                std::vector<dmsrl::Transition> row;
                for (std::size_t t = 0; t < ns; ++t)
                    if (p[s][a][t] > 0) row.push_back({t, p[s][a][t]});
                m.append_row(row, r[s][a]);
            }
        return m;
    }
};

inline DenseMdp random_mdp(std::size_t ns, std::size_t na, std::mt19937_64& rng, double reward_lo = 0.0,
                           double reward_hi = 1.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0), rw(reward_lo, reward_hi);
    DenseMdp m;
    m.ns = ns;
    m.na = na;
    m.p.assign(ns, std::vector<std::vector<double>>(na, std::vector<double>(ns)));
    m.r.assign(ns, std::vector<double>(na));
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t a = 0; a < na; ++a) {
            double sum = 0;
            for (auto& x : m.p[s][a]) sum += (x = u(rng) + 0.05);
            for (auto& x : m.p[s][a]) x /= sum;
            m.r[s][a] = rw(rng);
        }
    return m;
}

/// V^pi = (I - gamma P_pi)^{-1} r_pi.
inline Eigen::VectorXd evaluate_policy(const DenseMdp& m, const std::vector<std::size_t>& pi, double gamma) {
    const auto n = static_cast<Eigen::Index>(m.ns);
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd b(n);
    for (Eigen::Index s = 0; s < n; ++s) {
        const auto act = pi[static_cast<std::size_t>(s)];
        b(s) = m.r[static_cast<std::size_t>(s)][act];
        for (Eigen::Index t = 0; t < n; ++t)
            a(s, t) -= gamma * m.p[static_cast<std::size_t>(s)][act][static_cast<std::size_t>(t)];
    }
    return a.partialPivLu().solve(b);
}

inline Eigen::MatrixXd q_from_values(const DenseMdp& m, const Eigen::VectorXd& v, double gamma) {
    Eigen::MatrixXd q(static_cast<Eigen::Index>(m.ns), static_cast<Eigen::Index>(m.na));
    for (std::size_t s = 0; s < m.ns; ++s)
        for (std::size_t a = 0; a < m.na; ++a) {
            double x = m.r[s][a];
            for (std::size_t t = 0; t < m.ns; ++t) x += gamma * m.p[s][a][t] * v(static_cast<Eigen::Index>(t));
            q(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = x;
        }
    return q;
}

/// Exact optimum by policy iteration with linear-solve evaluation.
struct PolicyIterationResult {
    std::vector<std::size_t> policy;
    Eigen::VectorXd values;
    Eigen::MatrixXd q;
};

inline PolicyIterationResult policy_iteration(const DenseMdp& m, double gamma) {
    std::vector<std::size_t> pi(m.ns, 0);
    for (int it = 0; it < 1000; ++it) {
        const auto v = evaluate_policy(m, pi, gamma);
        const auto q = q_from_values(m, v, gamma);
        bool stable = true;
        for (std::size_t s = 0; s < m.ns; ++s) {
            std::size_t best = pi[s];
            for (std::size_t a = 0; a < m.na; ++a)
                if (q(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) >
                    q(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(best)) + 1e-12)
                    best = a;
            if (best != pi[s]) stable = false;
            pi[s] = best;
        }
        if (stable) return {pi, v, q};
    }
    return {pi, evaluate_policy(m, pi, gamma), {}};
}

/// Stationary distribution of a row-stochastic matrix via the null space of (P^T - I).
inline Eigen::VectorXd stationary_exact(const Eigen::MatrixXd& p) {
    const auto n = p.rows();
    Eigen::MatrixXd a = p.transpose() - Eigen::MatrixXd::Identity(n, n);
    a.row(n - 1).setOnes();  // replace one equation by normalization
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;
    return a.fullPivLu().solve(b);
}

inline DenseMdp dense_from(const dmsrl::TransitionModel& m) {
    DenseMdp d;
    d.ns = m.num_states();
    d.na = m.num_actions();
    d.p.assign(d.ns, std::vector<std::vector<double>>(d.na, std::vector<double>(d.ns, 0.0)));
    d.r.assign(d.ns, std::vector<double>(d.na));
    for (std::size_t s = 0; s < d.ns; ++s)
        for (std::size_t a = 0; a < d.na; ++a) {
            for (const auto& t : m.row(s, a)) d.p[s][a][t.next] += t.prob;
            d.r[s][a] = m.reward(s, a);
        }
    return d;
}

inline dmsrl::FactoredModel random_factored(std::size_t ns1, std::size_t na1, std::size_t ns2, std::size_t na2,
                                            std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    dmsrl::FactoredModel f(ns1, na1, ns2, na2);
    auto fill = [&](double* row, std::size_t n) {
        double sum = 0;
        for (std::size_t i = 0; i < n; ++i) sum += (row[i] = u(rng) + 0.05);
        for (std::size_t i = 0; i < n; ++i) row[i] /= sum;
    };
    for (std::size_t i = 0; i < ns1 * na1; ++i) fill(f.p1.data() + i * ns1, ns1);
    for (std::size_t i = 0; i < ns1 * ns2 * na2; ++i) fill(f.p2.data() + i * ns2, ns2);
    for (auto& r : f.r1) r = u(rng) - 0.5;
    for (auto& r : f.r2) r = u(rng);
    return f;
}

/// Joint MDP of a factored model built by brute force over every
/// (s, a, s') triple.
inline DenseMdp brute_force_joint(const dmsrl::FactoredModel& f) {
    DenseMdp d;
    d.ns = f.ns1 * f.ns2;
    d.na = f.na1 * f.na2;
    d.p.assign(d.ns, std::vector<std::vector<double>>(d.na, std::vector<double>(d.ns, 0.0)));
    d.r.assign(d.ns, std::vector<double>(d.na));
    for (std::size_t s1 = 0; s1 < f.ns1; ++s1)
        for (std::size_t s2 = 0; s2 < f.ns2; ++s2)
            for (std::size_t a1 = 0; a1 < f.na1; ++a1)
                for (std::size_t a2 = 0; a2 < f.na2; ++a2) {
                    const std::size_t s = s1 * f.ns2 + s2, a = a1 * f.na2 + a2;
                    d.r[s][a] = f.R1(s1, a1) + f.R2(s, a2);
                    for (std::size_t n1 = 0; n1 < f.ns1; ++n1)
                        for (std::size_t n2 = 0; n2 < f.ns2; ++n2)
                            d.p[s][a][n1 * f.ns2 + n2] = f.P1(s1, a1, n1) * f.P2(s, a2, n2);
                }
    return d;
}

}  // namespace testing_support
