#pragma once

// Exact transition models for the oracle: empirical arrival statistics from a
// trace sample, the two-layer factored model and its joint expansion, and the
// layered decomposition of Q*.

#include "dms_model.hpp"
#include "mdp.hpp"
#include "trace.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace dmsrl {

/// Per-(f, z, h) pmf of the arrival count floor(eta * c / f) and per-(z, h)
/// mean application cost.
struct ArrivalStatistics {
    std::size_t num_frequencies = 0;
    std::size_t num_types = 0;
    std::size_t num_configs = 0;
    std::vector<std::vector<double>> pmf;  // (f * num_types + z) * num_configs + h -> pmf[k]
    std::vector<double> mean_cost_app;     // z * num_configs + h
    std::vector<std::size_t> counts;       // observations per (z, h)

    const std::vector<double>& arrivals(std::size_t f, std::size_t z, std::size_t h) const {
        return pmf[(f * num_types + z) * num_configs + h];
    }
    double cost_app(std::size_t z, std::size_t h) const { return mean_cost_app[z * num_configs + h]; }

    /// Throws ModelError unless every pmf sums to 1 within `tol`.
    void validate(double tol = 1e-9) const;
};

/// Throws CoverageError naming every (type, config) cell without
/// observations, InvalidInput when the sample is shorter than `min_length`.
ArrivalStatistics empirical_arrival_distribution(std::span<const TraceSample> samples, const DmsModel& model,
                                                 std::size_t min_length = 10'000);

/// Row-stochastic type chain estimated from consecutive samples, wrapping
/// from the last sample to the first as replay does.
std::vector<double> estimate_type_transition(std::span<const TraceSample> samples, std::size_t num_types);

/// Two-layer model with p(s'|s,a) = p1(s1'|s1,a1) * p2(s2'|s,a2) and
/// r(s,a) = r1(s1,a1) + r2(s,a2). Joint indices are s = s1 * ns2 + s2 and
/// a = a1 * na2 + a2.
struct FactoredModel {
    std::size_t ns1 = 0, na1 = 0, ns2 = 0, na2 = 0;
    std::vector<double> p1;  // [s1][a1][s1']
    std::vector<double> r1;  // [s1][a1]
    std::vector<double> p2;  // [s][a2][s2']
    std::vector<double> r2;  // [s][a2]

    FactoredModel() = default;
    FactoredModel(std::size_t ns1_, std::size_t na1_, std::size_t ns2_, std::size_t na2_);

    std::size_t num_states() const { return ns1 * ns2; }
    std::size_t num_actions() const { return na1 * na2; }

    double& P1(std::size_t s1, std::size_t a1, std::size_t n1) { return p1[(s1 * na1 + a1) * ns1 + n1]; }
    double P1(std::size_t s1, std::size_t a1, std::size_t n1) const { return p1[(s1 * na1 + a1) * ns1 + n1]; }
    double& R1(std::size_t s1, std::size_t a1) { return r1[s1 * na1 + a1]; }
    double R1(std::size_t s1, std::size_t a1) const { return r1[s1 * na1 + a1]; }
    double& P2(std::size_t s, std::size_t a2, std::size_t n2) { return p2[(s * na2 + a2) * ns2 + n2]; }
    double P2(std::size_t s, std::size_t a2, std::size_t n2) const { return p2[(s * na2 + a2) * ns2 + n2]; }
    double& R2(std::size_t s, std::size_t a2) { return r2[s * na2 + a2]; }
    double R2(std::size_t s, std::size_t a2) const { return r2[s * na2 + a2]; }

    /// Throws ModelError when a factor row is not a probability vector.
    void validate(double tol = 1e-9) const;

    TransitionModel joint() const;
};

FactoredModel assemble_factored_model(const DmsModel& model, const ArrivalStatistics& stats);

/// Joint sparse model of the DMS, equal to assemble_factored_model(...).joint().
TransitionModel assemble_transition_model(const DmsModel& model, const ArrivalStatistics& stats);

/// q' pmf from buffer level q for a given arrival pmf.
std::vector<double> buffer_transition(int occupancy, const std::vector<double>& arrival_pmf, int capacity);

struct Decomposition {
    ValueIterationResult joint;
    std::vector<double> q_app;          // Q1*(s, a2, s1'), index (s * na2 + a2) * ns1 + s1'
    QTable q_reassembled;               // Q(s, a1 * na2 + a2) rebuilt from Q1*
    double max_discrepancy = 0.0;
};

/// Value iteration on the joint model, then Q1* from V* and Q reassembled
/// from Q1*; reports max |Q_reassembled - Q*|.
Decomposition decompose(const FactoredModel& fm, double gamma, double tol = 1e-8);

double decomposition_check(const FactoredModel& fm, double gamma, double tol = 1e-8);

}  // namespace dmsrl
