#include "dms_model.hpp"
#include "errors.hpp"
#include "fixtures.hpp"
#include "model_assembly.hpp"

#include <doctest.h>

#include <cmath>

using namespace dmsrl;

namespace {

TraceSample sample_with(std::size_t type, std::vector<Measurement> configs) {
    TraceSample s;
    s.type = type;
    s.configs = std::move(configs);
    return s;
}

}  // namespace

TEST_SUITE("dms_model") {

TEST_CASE("default spaces have 765 states and 15 actions") {
    const DmsModel m(DmsConfig::defaults());
    CHECK(m.states().size() == 765);
    CHECK(m.actions().size() == 15);
}

TEST_CASE("state and action indexing are bijections") {
    const DmsModel m(DmsConfig::defaults());
    for (std::size_t i = 0; i < m.states().size(); ++i) CHECK(m.states().index(m.states().state(i)) == i);
    for (std::size_t i = 0; i < m.actions().size(); ++i) CHECK(m.actions().index(m.actions().action(i)) == i);
    CHECK(m.states().index({0, 0, 0}) == 0);
    CHECK(m.states().index({1, 2, 7}) == (1 * 3 + 2) * 51 + 7);
    CHECK_THROWS_AS(m.states().index({0, 0, 51}), InvalidInput);
}

TEST_CASE("power cost examples") {
    const DmsModel m(DmsConfig::defaults());
    CHECK(m.power_cost(200e6) == doctest::Approx(0.012));
    CHECK(m.power_cost(600e6) == doctest::Approx(0.324));
    CHECK(m.power_cost(1000e6) == doctest::Approx(1.5));
    CHECK_THROWS_AS(m.power_cost(300e6), InvalidInput);
}

TEST_CASE("application cost examples") {
    const DmsModel m(DmsConfig::defaults());
    CHECK(m.app_cost(Measurement{80, 10, 1}) == doctest::Approx(15.0));
    CHECK(m.app_cost(Measurement{0, 0, 1}) == 0.0);
    auto cfg = DmsConfig::defaults();
    cfg.lambda_rd = 0.0;
    CHECK(DmsModel(cfg).app_cost(Measurement{123, 7.5, 1}) == 7.5);
    const auto s = sample_with(0, {Measurement{80, 10, 1}});
    CHECK_THROWS_AS(m.app_cost(s, 2), TraceError);
}

TEST_CASE("buffer_step examples") {
    auto a = buffer_step(10, 3, 50);
    CHECK(a.next == 12);
    CHECK(a.overflow == 0);
    auto b = buffer_step(0, 0, 50);
    CHECK(b.next == 0);
    CHECK(b.overflow == 0);
    auto c = buffer_step(50, 5, 50);
    CHECK(c.next == 50);
    CHECK(c.overflow == 4);
}

TEST_CASE("utility gain examples") {
    CHECK(utility_gain(1, 0, 50, GainMode::proposed) == 1.0);
    CHECK(utility_gain(26, 0, 50, GainMode::proposed) == doctest::Approx(0.75));
    CHECK(utility_gain(50, 5, 50, GainMode::conventional) == -4.0);
    CHECK(utility_gain(20, 3, 50, GainMode::conventional) == 1.0);
}

TEST_CASE("gain bounds over every (q, arrivals)") {
    const int nq = 50, amax = 12;
    const double lo = 1.0 - std::pow((nq + amax - 1.0) / nq, 2);
    for (int q = 0; q <= nq; ++q)
        for (int k = 0; k <= amax; ++k) {
            const double g = utility_gain(q, k, nq, GainMode::proposed);
            CHECK(g <= 1.0);
            CHECK(g >= lo);
            CHECK(utility_gain(q, k, nq, GainMode::conventional) <= 1.0);
        }
}

TEST_CASE("buffer never drains by more than one unit per slot") {
    for (int q = 0; q <= 50; ++q)
        for (int k = 0; k <= 20; ++k) {
            const auto b = buffer_step(q, k, 50);
            CHECK(b.next - q >= -1);
            CHECK(b.overflow == std::max(q + k - 1 - 50, 0));
        }
}

TEST_CASE("step: delay and arrivals") {
    const DmsModel m(DmsConfig::defaults());
    Rng rng(1);
    const auto s = sample_with(0, {Measurement{100, 8, 6e6}, Measurement{100, 8, 6e6}, Measurement{100, 8, 6e6}});
    const auto out = m.step({2, 0, 10}, {2, 0}, s, rng);
    CHECK(out.delay == doctest::Approx(0.01));
    CHECK(out.arrivals == 0);
    CHECK(out.next.occupancy == 9);
    CHECK(arrival_count(6e6, 200e6, 44) == 1);
}

TEST_CASE("step: beta 1 switches deterministically, beta 0.9 switches 90% of the time") {
    auto cfg = DmsConfig::defaults();
    cfg.beta = 1.0;
    const DmsModel det(cfg);
    const auto s = sample_with(0, {Measurement{100, 8, 6e6}, Measurement{100, 8, 6e6}, Measurement{100, 8, 6e6}});
    Rng rng(3);
    for (int i = 0; i < 100; ++i) CHECK(det.step({0, 0, 5}, {4, 1}, s, rng).next.freq == 4);

    const DmsModel m(DmsConfig::defaults());
    int switched = 0;
    const int n = 100'000;
    for (int i = 0; i < n; ++i) switched += m.step({0, 0, 5}, {4, 1}, s, rng).next.freq == 4;
    CHECK(std::abs(switched / double(n) - 0.9) <= 0.01);
}

TEST_CASE("step: reward composition holds exactly") {
    const DmsModel m(DmsConfig::defaults());
    const auto params = SyntheticParams::defaults_pbi();
    Rng rng(17), trng(18);
    TraceSample s;
    for (int i = 0; i < 2000; ++i) {
        const std::size_t z = static_cast<std::size_t>(i % 3);
        draw_sample(params, z, trng, s);
        const GlobalState st{static_cast<std::size_t>(i % 5), z, i % 51};
        const GlobalAction a{static_cast<std::size_t>(i % 5), static_cast<std::size_t>(i % 3)};
        const auto out = m.step(st, a, s, rng);
        const auto& cfg = m.config();
        CHECK(out.reward == out.gain - cfg.omega_os * out.cost_os - cfg.omega_app * out.cost_app);
        CHECK(out.overflow == std::max(st.occupancy + out.arrivals - 1 - cfg.buffer_capacity, 0));
        CHECK(out.next.occupancy - st.occupancy >= -1);
    }
}

TEST_CASE("step: errors") {
    const DmsModel m(DmsConfig::defaults());
    Rng rng(1);
    const auto s = sample_with(1, {Measurement{100, 8, 6e6}});
    CHECK_THROWS_AS(m.step({0, 0, 0}, {0, 0}, s, rng), InvalidInput);  // type mismatch
    CHECK_THROWS_AS(m.step({0, 1, 0}, {0, 2}, s, rng), TraceError);    // missing column
    CHECK_THROWS_AS(m.step({0, 1, 0}, {9, 0}, s, rng), InvalidInput);
}

TEST_CASE("step is deterministic given the seed when beta is 1 and the trace is fixed") {
    auto cfg = DmsConfig::defaults();
    cfg.beta = 1.0;
    const DmsModel m(cfg);
    const auto s0 = sample_with(0, {Measurement{100, 8, 6e6}, Measurement{90, 9, 5e6}, Measurement{80, 10, 4e6}});
    auto run = [&](std::uint64_t seed) {
        Rng rng(seed);
        GlobalState st{0, 0, 3};
        std::vector<std::size_t> seq;
        for (int i = 0; i < 200; ++i) {
            auto s = s0;
            s.type = st.type;
            st = m.step(st, {static_cast<std::size_t>(i % 5), 1}, s, rng).next;
            seq.push_back(m.states().index(st));
        }
        return seq;
    };
    CHECK(run(5) == run(5));
}

TEST_CASE("config validation") {
    auto bad = [](auto mutate) {
        auto c = DmsConfig::defaults();
        mutate(c);
        CHECK_THROWS_AS(c.validate(), ConfigError);
    };
    bad([](DmsConfig& c) { c.frequencies = {400e6, 200e6}; });
    bad([](DmsConfig& c) { c.beta = 0.0; });
    bad([](DmsConfig& c) { c.beta = 1.1; });
    bad([](DmsConfig& c) { c.buffer_capacity = 0; });
    bad([](DmsConfig& c) { c.arrival_rate = 0.0; });
    bad([](DmsConfig& c) { c.type_transition[0] += 0.01; });
    bad([](DmsConfig& c) { c.frequencies[0] = 0.0; });
    CHECK_NOTHROW(DmsConfig::defaults().validate());
}

TEST_CASE("default type chain keeps the 3:8:1 P:B:I mix stationary") {
    const auto t = default_type_transition();
    const double mix[3] = {3 / 12.0, 8 / 12.0, 1 / 12.0};
    for (int j = 0; j < 3; ++j) {
        double x = 0;
        for (int i = 0; i < 3; ++i) x += mix[i] * t[i * 3 + j];
        CHECK(x == doctest::Approx(mix[j]).epsilon(1e-12));
    }
}

TEST_CASE("assembly: degenerate and uniform arrival examples") {
    const std::vector<double> zero{1.0};
    const auto p0 = buffer_transition(0, zero, 50);
    CHECK(p0[0] == 1.0);
    const std::vector<double> uni{1 / 3.0, 1 / 3.0, 1 / 3.0};
    const auto p5 = buffer_transition(5, uni, 50);
    CHECK(p5[4] == doctest::Approx(1 / 3.0));
    CHECK(p5[5] == doctest::Approx(1 / 3.0));
    CHECK(p5[6] == doctest::Approx(1 / 3.0));
    double mass = 0;
    for (double x : p5) mass += x;
    CHECK(mass == doctest::Approx(1.0));
}

TEST_CASE("assembly: rows normalize and the joint factorizes into its marginals") {
    const auto cfg = testing_support::small_config();
    const DmsModel m(cfg);
    const auto stats = testing_support::small_exact_stats(cfg);
    const auto tm = assemble_transition_model(m, stats);
    CHECK_NOTHROW(tm.validate(1e-9));
    const auto& S = m.states();
    const std::size_t nf = 2, nz = 2, nl = 6;
    for (std::size_t s = 0; s < S.size(); ++s)
        for (std::size_t a = 0; a < m.actions().size(); ++a) {
            const auto st = S.state(s);
            const auto act = m.actions().action(a);
            std::vector<double> pf(nf, 0), pz(nz, 0), pq(nl, 0);
            for (const auto& t : tm.row(s, a)) {
                const auto n = S.state(t.next);
                pf[n.freq] += t.prob;
                pz[n.type] += t.prob;
                pq[static_cast<std::size_t>(n.occupancy)] += t.prob;
                CHECK(n.occupancy - st.occupancy >= -1);
            }
            // Frequency factor: command reached with probability beta.
            for (std::size_t f = 0; f < nf; ++f) {
                const double expect = act.command == st.freq ? (f == st.freq ? 1.0 : 0.0)
                                      : f == act.command     ? cfg.beta
                                      : f == st.freq         ? 1 - cfg.beta
                                                             : 0.0;
                CHECK(pf[f] == doctest::Approx(expect).epsilon(1e-12));
            }
            for (std::size_t z = 0; z < nz; ++z)
                CHECK(pz[z] == doctest::Approx(cfg.type_transition[st.type * nz + z]).epsilon(1e-12));
            // Buffer factor by enumerating the four equally likely cycle counts.
            std::vector<double> expect_q(nl, 0);
            for (double c : testing_support::small_cycle_values(st.type, act.config)) {
                const int k = static_cast<int>(std::floor(c / cfg.frequencies[st.freq] * cfg.arrival_rate));
                expect_q[static_cast<std::size_t>(std::clamp(st.occupancy + k - 1, 0, 5))] += 0.25;
            }
            for (std::size_t q = 0; q < nl; ++q) CHECK(pq[q] == doctest::Approx(expect_q[q]).epsilon(1e-12));
            for (const auto& t : tm.row(s, a)) {
                const auto n = S.state(t.next);
                CHECK(t.prob == doctest::Approx(pf[n.freq] * pz[n.type] * pq[static_cast<std::size_t>(n.occupancy)])
                                    .epsilon(1e-12));
            }
            // Expected reward from the same enumeration.
            double g = 0;
            for (double c : testing_support::small_cycle_values(st.type, act.config)) {
                const int k = static_cast<int>(std::floor(c / cfg.frequencies[st.freq] * cfg.arrival_rate));
                g += 0.25 * utility_gain(st.occupancy, k, 5, cfg.gain);
            }
            const double japp = stats.cost_app(st.type, act.config);
            CHECK(tm.reward(s, a) ==
                  doctest::Approx(g - cfg.omega_os * m.power_cost_at(st.freq) - cfg.omega_app * japp).epsilon(1e-12));
        }
}

TEST_CASE("assembly: Monte Carlo step() frequencies match the assembled rows") {
    // Reduced-size version of the acceptance check: 2e5 draws per pair.
    const auto cfg = testing_support::small_config();
    const DmsModel m(cfg);
    const auto tm = assemble_transition_model(m, testing_support::small_exact_stats(cfg));
    const auto params = testing_support::small_params();
    Rng rng(2), trng(3);
    TraceSample sample;
    const int n = 200'000;
    double worst = 0;
    for (std::size_t s = 0; s < m.states().size(); s += 5)
        for (std::size_t a = 0; a < m.actions().size(); ++a) {
            const auto st = m.states().state(s);
            std::vector<double> freq(m.states().size(), 0);
            for (int i = 0; i < n; ++i) {
                draw_sample(params, st.type, trng, sample);
                freq[m.states().index(m.step(st, m.actions().action(a), sample, rng).next)] += 1.0 / n;
            }
            for (const auto& t : tm.row(s, a)) freq[t.next] -= t.prob;
            double l1 = 0;
            for (double x : freq) l1 += std::abs(x);
            worst = std::max(worst, l1);
        }
    CHECK(worst <= 0.02);
}

}  // TEST_SUITE
