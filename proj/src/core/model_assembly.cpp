#include "model_assembly.hpp"

#include "errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <string>

namespace dmsrl {

void ArrivalStatistics::validate(double tol) const {
    if (pmf.size() != num_frequencies * num_types * num_configs)
        throw ModelError("arrival statistics do not cover every (f, z, h) cell");
    for (const auto& p : pmf) {
        double total = 0.0;
        for (double x : p) {
            if (!(x >= 0.0)) throw ModelError("negative arrival probability");
            total += x;
        }
        if (std::abs(total - 1.0) > tol) throw ModelError(fmt::format("arrival pmf sums to {}", total));
    }
}

ArrivalStatistics empirical_arrival_distribution(std::span<const TraceSample> samples, const DmsModel& model,
                                                 std::size_t min_length) {
    const auto& cfg = model.config();
    if (samples.size() < min_length)
        throw InvalidInput(fmt::format("oracle needs at least {} trace samples, got {}", min_length, samples.size()));
    ArrivalStatistics st;
    st.num_frequencies = cfg.num_frequencies();
    st.num_types = cfg.num_types();
    st.num_configs = cfg.num_configs;
    const std::size_t nf = st.num_frequencies, nz = st.num_types, nh = st.num_configs;

    std::vector<std::vector<std::size_t>> hist(nf * nz * nh);
    std::vector<double> cost_sum(nz * nh, 0.0);
    st.counts.assign(nz * nh, 0);
    for (const auto& s : samples) {
        if (s.type >= nz) throw InvalidInput("trace sample type out of range");
        if (s.configs.size() < nh)
            throw TraceError(fmt::format("trace sample {} has {} configurations, expected {}", s.index,
                                         s.configs.size(), nh));
        for (std::size_t h = 0; h < nh; ++h) {
            const auto& m = s.configs[h];
            st.counts[s.type * nh + h] += 1;
            cost_sum[s.type * nh + h] += model.app_cost(m);
            for (std::size_t f = 0; f < nf; ++f) {
                const auto k = static_cast<std::size_t>(arrival_count(m.cycles, cfg.frequencies[f], cfg.arrival_rate));
                auto& bins = hist[(f * nz + s.type) * nh + h];
                if (bins.size() <= k) bins.resize(k + 1, 0);
                bins[k] += 1;
            }
        }
    }

    std::vector<std::string> missing;
    for (std::size_t z = 0; z < nz; ++z)
        for (std::size_t h = 0; h < nh; ++h)
            if (st.counts[z * nh + h] == 0) missing.push_back(fmt::format("({}, h{})", cfg.type_labels[z], h + 1));
    if (!missing.empty())
        throw CoverageError("trace has no observations for cells " + fmt::format("{}", fmt::join(missing, ", ")));

    st.pmf.resize(hist.size());
    for (std::size_t i = 0; i < hist.size(); ++i) {
        const double n = static_cast<double>(st.counts[i % (nz * nh)]);
        st.pmf[i].resize(hist[i].size());
        for (std::size_t k = 0; k < hist[i].size(); ++k) st.pmf[i][k] = static_cast<double>(hist[i][k]) / n;
    }
    st.mean_cost_app.resize(nz * nh);
    for (std::size_t i = 0; i < nz * nh; ++i) st.mean_cost_app[i] = cost_sum[i] / static_cast<double>(st.counts[i]);
    return st;
}

std::vector<double> estimate_type_transition(std::span<const TraceSample> samples, std::size_t num_types) {
    if (samples.empty()) throw InvalidInput("cannot estimate a type chain from an empty trace");
    std::vector<double> counts(num_types * num_types, 0.0);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto from = samples[i].type;
        const auto to = samples[(i + 1) % samples.size()].type;
        counts.at(from * num_types + to) += 1.0;
    }
    for (std::size_t i = 0; i < num_types; ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < num_types; ++j) total += counts[i * num_types + j];
        for (std::size_t j = 0; j < num_types; ++j) {
            // A type that never occurs keeps its own row as an absorbing self-loop;
            // it is unreachable, so the choice does not affect the oracle.
            counts[i * num_types + j] = total > 0.0 ? counts[i * num_types + j] / total : (i == j ? 1.0 : 0.0);
        }
    }
    return counts;
}

FactoredModel::FactoredModel(std::size_t ns1_, std::size_t na1_, std::size_t ns2_, std::size_t na2_)
    : ns1(ns1_), na1(na1_), ns2(ns2_), na2(na2_), p1(ns1_ * na1_ * ns1_, 0.0), r1(ns1_ * na1_, 0.0),
      p2(ns1_ * ns2_ * na2_ * ns2_, 0.0), r2(ns1_ * ns2_ * na2_, 0.0) {}

void FactoredModel::validate(double tol) const {
    if (p1.size() != ns1 * na1 * ns1 || p2.size() != num_states() * na2 * ns2 || r1.size() != ns1 * na1 ||
        r2.size() != num_states() * na2)
        throw ModelError("factored model has inconsistent dimensions");
    auto check_row = [tol](const double* row, std::size_t n, const char* which) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(row[i] >= 0.0)) throw ModelError(fmt::format("negative probability in {} factor", which));
            total += row[i];
        }
        if (std::abs(total - 1.0) > tol)
            throw ModelError(fmt::format("{} factor row sums to {}", which, total));
    };
    for (std::size_t i = 0; i < ns1 * na1; ++i) check_row(p1.data() + i * ns1, ns1, "OS");
    for (std::size_t i = 0; i < num_states() * na2; ++i) check_row(p2.data() + i * ns2, ns2, "APP");
}

TransitionModel FactoredModel::joint() const {
    validate();
    TransitionModel tm(num_states(), num_actions());
    std::vector<Transition> row;
    for (std::size_t s = 0; s < num_states(); ++s) {
        const std::size_t s1 = s / ns2;
        for (std::size_t a1 = 0; a1 < na1; ++a1) {
            for (std::size_t a2 = 0; a2 < na2; ++a2) {
                row.clear();
                for (std::size_t n1 = 0; n1 < ns1; ++n1) {
                    const double q1 = P1(s1, a1, n1);
                    if (q1 == 0.0) continue;
                    for (std::size_t n2 = 0; n2 < ns2; ++n2) {
                        const double q2 = P2(s, a2, n2);
                        if (q2 != 0.0) row.push_back({n1 * ns2 + n2, q1 * q2});
                    }
                }
                tm.append_row(row, R1(s1, a1) + R2(s, a2));
            }
        }
    }
    return tm;
}

std::vector<double> buffer_transition(int occupancy, const std::vector<double>& arrival_pmf, int capacity) {
    std::vector<double> out(static_cast<std::size_t>(capacity) + 1, 0.0);
    for (std::size_t k = 0; k < arrival_pmf.size(); ++k) {
        if (arrival_pmf[k] == 0.0) continue;
        const auto step = buffer_step(occupancy, static_cast<int>(k), capacity);
        out[static_cast<std::size_t>(step.next)] += arrival_pmf[k];
    }
    return out;
}

FactoredModel assemble_factored_model(const DmsModel& model, const ArrivalStatistics& stats) {
    const auto& cfg = model.config();
    if (stats.num_frequencies != cfg.num_frequencies() || stats.num_types != cfg.num_types() ||
        stats.num_configs != cfg.num_configs)
        throw ModelError("arrival statistics do not match the model dimensions");
    stats.validate();

    const std::size_t nf = cfg.num_frequencies(), nz = cfg.num_types(), nh = cfg.num_configs;
    const int nq = cfg.buffer_capacity;
    const std::size_t levels = static_cast<std::size_t>(nq) + 1;
    FactoredModel fm(nf, nf, nz * levels, nh);

    for (std::size_t f = 0; f < nf; ++f) {
        for (std::size_t u = 0; u < nf; ++u) {
            for (std::size_t n = 0; n < nf; ++n) fm.P1(f, u, n) = model.frequency_transition(f, u, n);
            fm.R1(f, u) = -cfg.omega_os * model.power_cost_at(f);
        }
    }

    for (std::size_t f = 0; f < nf; ++f) {
        for (std::size_t z = 0; z < nz; ++z) {
            for (int q = 0; q <= nq; ++q) {
                const std::size_t s = model.states().index({f, z, q});
                for (std::size_t h = 0; h < nh; ++h) {
                    const auto& pmf = stats.arrivals(f, z, h);
                    const auto pq = buffer_transition(q, pmf, nq);
                    double gain = 0.0;
                    for (std::size_t k = 0; k < pmf.size(); ++k)
                        if (pmf[k] != 0.0) gain += pmf[k] * utility_gain(q, static_cast<int>(k), nq, cfg.gain);
                    for (std::size_t z2 = 0; z2 < nz; ++z2) {
                        const double pz = model.type_transition(z, z2);
                        if (pz == 0.0) continue;
                        for (std::size_t q2 = 0; q2 < levels; ++q2) fm.P2(s, h, z2 * levels + q2) = pz * pq[q2];
                    }
                    fm.R2(s, h) = gain - cfg.omega_app * stats.cost_app(z, h);
                }
            }
        }
    }
    return fm;
}

TransitionModel assemble_transition_model(const DmsModel& model, const ArrivalStatistics& stats) {
    return assemble_factored_model(model, stats).joint();
}

Decomposition decompose(const FactoredModel& fm, double gamma, double tol) {
    Decomposition out;
    out.joint = value_iteration(fm.joint(), gamma, tol);
    const auto& v = out.joint.values;
    const std::size_t ns = fm.num_states();

    out.q_app.assign(ns * fm.na2 * fm.ns1, 0.0);
    for (std::size_t s = 0; s < ns; ++s) {
        for (std::size_t a2 = 0; a2 < fm.na2; ++a2) {
            for (std::size_t n1 = 0; n1 < fm.ns1; ++n1) {
                double future = 0.0;
                for (std::size_t n2 = 0; n2 < fm.ns2; ++n2) future += fm.P2(s, a2, n2) * v[n1 * fm.ns2 + n2];
                out.q_app[(s * fm.na2 + a2) * fm.ns1 + n1] = fm.R2(s, a2) + gamma * future;
            }
        }
    }

    out.q_reassembled = QTable(ns, fm.num_actions());
    for (std::size_t s = 0; s < ns; ++s) {
        const std::size_t s1 = s / fm.ns2;
        for (std::size_t a1 = 0; a1 < fm.na1; ++a1) {
            for (std::size_t a2 = 0; a2 < fm.na2; ++a2) {
                double acc = fm.R1(s1, a1);
                for (std::size_t n1 = 0; n1 < fm.ns1; ++n1)
                    acc += fm.P1(s1, a1, n1) * out.q_app[(s * fm.na2 + a2) * fm.ns1 + n1];
                out.q_reassembled(s, a1 * fm.na2 + a2) = acc;
                out.max_discrepancy =
                    std::max(out.max_discrepancy, std::abs(acc - out.joint.q(s, a1 * fm.na2 + a2)));
            }
        }
    }
    return out;
}

double decomposition_check(const FactoredModel& fm, double gamma, double tol) {
    return decompose(fm, gamma, tol).max_discrepancy;
}

}  // namespace dmsrl
