#include "learners.hpp"

#include "errors.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dmsrl {

ExperienceTuple ExperienceTuple::from(const GlobalState& s, const GlobalAction& a, const StageOutcome& out) {
    ExperienceTuple et;
    et.s = s;
    et.a = a;
    et.r = out.reward;
    et.s_next = out.next;
    et.arrivals = out.arrivals;
    et.g = out.gain;
    et.cost_os = out.cost_os;
    et.cost_app = out.cost_app;
    return et;
}

// ---- centralized ---------------------------------------------------------------

CentralizedLearner::CentralizedLearner(const DmsModel& model, LearningSchedule schedule, std::uint64_t seed)
    : model_(model), schedule_(schedule), q_(model.states().size(), model.actions().size()),
      visits_(q_.num_states() * q_.num_actions(), 0), rng_(seed) {
    schedule_.validate();
}

QUpdate CentralizedLearner::backup(const ExperienceTuple& et) {
    const auto& S = model_.states();
    const std::size_t s = S.index(et.s);
    const std::size_t a = model_.actions().index(et.a);
    const double alpha = schedule_.alpha(visits_[s * q_.num_actions() + a]++);
    return q_update(q_, s, a, et.r, S.index(et.s_next), alpha, schedule_.gamma);
}

SlotRecord CentralizedLearner::act_and_learn(Environment& env, ExperienceTuple& et) {
    log_.begin_slot();
    SlotRecord rec;
    rec.state = env.state();
    log_.send("s1->ctl");
    log_.send("s2->ctl");
    const std::size_t s = model_.states().index(rec.state);
    const std::size_t a = epsilon_greedy(q_.row(s), schedule_.epsilon(slot_), rng_);
    rec.action = model_.actions().action(a);
    log_.send("a1->OS");
    log_.send("a2->APP");
    rec.outcome = env.step(rec.action);
    log_.send("J1->ctl");
    log_.send("g2-w2J2->ctl");
    log_.send("s1'->ctl");
    log_.send("s2'->ctl");
    et = ExperienceTuple::from(rec.state, rec.action, rec.outcome);
    rec.delta = backup(et).delta;
    rec.cells_updated = 1;
    ++slot_;
    return rec;
}

SlotRecord CentralizedLearner::step(Environment& env) {
    ExperienceTuple et;
    return act_and_learn(env, et);
}

// ---- virtual experience ------------------------------------------------------

std::vector<ExperienceTuple> virtual_et_expand(const ExperienceTuple& et, const DmsModel& model) {
    const auto& cfg = model.config();
    std::vector<ExperienceTuple> out(static_cast<std::size_t>(cfg.buffer_capacity) + 1);
    for (int q = 0; q <= cfg.buffer_capacity; ++q) {
        auto& v = out[static_cast<std::size_t>(q)];
        v = et;
        v.s.occupancy = q;
        const auto buf = buffer_step(q, et.arrivals, cfg.buffer_capacity);
        v.s_next.occupancy = buf.next;
        v.g = utility_gain(q, et.arrivals, cfg.buffer_capacity, cfg.gain);
        v.r = model.compose_reward(v.g, et.cost_os, et.cost_app);
    }
    return out;
}

VirtualEtLearner::VirtualEtLearner(const DmsModel& model, LearningSchedule schedule, std::size_t psi,
                                   std::uint64_t seed)
    : CentralizedLearner(model, schedule, seed), psi_(psi) {
    const auto others = static_cast<std::size_t>(model.config().buffer_capacity);
    if (psi_ > others) {
        spdlog::warn("virtual-ET budget {} exceeds the {} other buffer levels; clamped", psi_, others);
        psi_ = others;
    }
}

SlotRecord VirtualEtLearner::step(Environment& env) {
    ExperienceTuple et;
    auto rec = act_and_learn(env, et);
    if (psi_ == 0) return rec;

    sigma_ = virtual_et_expand(et, model_);
    pool_.clear();
    for (std::size_t q = 0; q < sigma_.size(); ++q)
        if (static_cast<int>(q) != et.s.occupancy) pool_.push_back(q);
    // Partial Fisher-Yates: the first psi entries are a uniform draw without replacement.
    for (std::size_t i = 0; i < psi_; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool_.size() - 1);
        std::swap(pool_[i], pool_[pick(rng_)]);
        backup(sigma_[pool_[i]]);
    }
    rec.cells_updated += psi_;
    return rec;
}

// ---- TD(lambda) -------------------------------------------------------------

void EligibilityState::visit(std::size_t pair, std::uint64_t slot) {
    const auto it = std::find_if(recent.begin(), recent.end(), [&](const auto& e) { return e.first == pair; });
    if (it != recent.end()) recent.erase(it);
    recent.emplace_front(pair, slot);
    while (recent.size() > capacity) recent.pop_back();
}

double EligibilityState::eligibility(std::size_t pair, std::uint64_t slot) const {
    for (const auto& [p, last] : recent)
        if (p == pair) return last == slot ? 1.0 : std::pow(decay, static_cast<double>(slot - last));
    return 0.0;
}

TdLambdaLearner::TdLambdaLearner(const DmsModel& model, LearningSchedule schedule, double lambda, std::size_t psi,
                                 std::uint64_t seed)
    : CentralizedLearner(model, schedule, seed), lambda_(lambda), psi_(psi) {
    if (!(lambda_ >= 0.0 && lambda_ <= 1.0)) throw InvalidInput("lambda must lie in [0, 1]");
    traces_.decay = schedule_.gamma * lambda_;
    traces_.capacity = psi_ + 1;
}

SlotRecord TdLambdaLearner::step(Environment& env) {
    const std::uint64_t n = slot_;
    ExperienceTuple et;
    auto rec = act_and_learn(env, et);
    const std::size_t na = q_.num_actions();
    const std::size_t current = model_.states().index(et.s) * na + model_.actions().index(et.a);
    traces_.visit(current, n);

    // The actual pair took its full update in act_and_learn; older pairs get
    // the same TD error scaled by their decayed trace.
    for (std::size_t i = 1; i < traces_.recent.size(); ++i) {
        const auto [pair, last] = traces_.recent[i];
        const double e = std::pow(traces_.decay, static_cast<double>(n - last));
        if (e == 0.0) continue;
        const double alpha = schedule_.alpha(visits_[pair]);
        q_(pair / na, pair % na) += alpha * rec.delta * e;
        ++rec.cells_updated;
    }
    return rec;
}

// ---- layered ----------------------------------------------------------------------

LayeredQTables::LayeredQTables(std::size_t ns, std::size_t ns1, std::size_t na1, std::size_t na2)
    : num_states(ns), num_os_states(ns1), num_commands(na1), num_configs(na2), q_app(ns * na2 * ns1, 0.0),
      q_os(ns * na1 * na2, 0.0) {}

double LayeredQTables::value(std::size_t s) const {
    const auto r = os_row(s);
    return *std::max_element(r.begin(), r.end());
}

AppChoice layered_app_select(const LayeredQTables& t, std::size_t s, double epsilon, Rng& rng) {
    const std::size_t i = epsilon_greedy(t.app_row(s), epsilon, rng);
    return {i / t.num_os_states, i % t.num_os_states};
}

OsChoice layered_os_select(const LayeredQTables& t, std::size_t s, double epsilon, Rng& rng) {
    const std::size_t i = epsilon_greedy(t.os_row(s), epsilon, rng);
    return {i / t.num_configs, i % t.num_configs};
}

LayeredDeltas layered_update(LayeredQTables& t, const StateSpace& states, const ExperienceTuple& et,
                             double alpha_os, double alpha_app, double gamma, double omega_os, double omega_app,
                             MessageLog* log) {
    const std::size_t s = states.index(et.s);
    const std::size_t s_next = states.index(et.s_next);

    const double v_next = t.value(s_next);
    if (log) log->send("V->APP");

    double& q1 = t.q_app[t.app_index(s, et.a.config, et.s_next.freq)];
    const double delta_app = (et.g - omega_app * et.cost_app + gamma * v_next) - q1;
    q1 += alpha_app * delta_app;
    if (log) {
        log->send("Q1->OS");
        log->send("a2->OS");
    }

    double& q = t.q_os[t.os_index(s, et.a.command, et.a.config)];
    const double delta_os = (-omega_os * et.cost_os + q1) - q;
    q += alpha_os * delta_os;
    return {delta_app, delta_os};
}

LayeredLearner::LayeredLearner(const DmsModel& model, LearningSchedule schedule, std::uint64_t seed)
    : model_(model), schedule_(schedule),
      t_(model.states().size(), model.states().num_frequencies(), model.actions().num_commands(),
         model.actions().num_configs()),
      visits_app_(t_.q_app.size(), 0), visits_os_(t_.q_os.size(), 0) {
    schedule_.validate();
    // Each layer explores with its own random source.
    std::seed_seq app_seq{seed, std::uint64_t{1}}, os_seq{seed, std::uint64_t{2}};
    rng_app_.seed(app_seq);
    rng_os_.seed(os_seq);
}

SlotRecord LayeredLearner::step(Environment& env) {
    log_.begin_slot();
    SlotRecord rec;
    rec.state = env.state();
    const std::size_t s = model_.states().index(rec.state);
    log_.send("s2->OS");
    log_.send("s1->APP");
    const double eps = schedule_.epsilon(slot_);
    const auto app = layered_app_select(t_, s, eps, rng_app_);
    const auto os = layered_os_select(t_, s, eps, rng_os_);
    rec.action = {os.command, app.config};
    rec.outcome = env.step(rec.action);
    log_.send("s2'->OS");
    log_.send("s1'->APP");

    const auto et = ExperienceTuple::from(rec.state, rec.action, rec.outcome);
    const double alpha_app = schedule_.alpha(visits_app_[t_.app_index(s, et.a.config, et.s_next.freq)]++);
    const double alpha_os = schedule_.alpha(visits_os_[t_.os_index(s, et.a.command, et.a.config)]++);
    const auto& cfg = model_.config();
    const auto d = layered_update(t_, model_.states(), et, alpha_os, alpha_app, schedule_.gamma, cfg.omega_os,
                                  cfg.omega_app, &log_);
    rec.delta = d.delta_app;
    rec.delta_os = d.delta_os;
    rec.cells_updated = 2;
    ++slot_;
    return rec;
}

std::vector<double> LayeredLearner::value_estimate() const {
    std::vector<double> v(t_.num_states);
    for (std::size_t s = 0; s < v.size(); ++s) v[s] = t_.value(s);
    return v;
}

// ---- best response ---------------------------------------------------------------

std::vector<std::size_t> layer_policy(const Policy& joint, const ActionSpace& actions, Layer layer) {
    std::vector<std::size_t> out(joint.size());
    for (std::size_t s = 0; s < joint.size(); ++s) {
        const auto a = actions.action(joint[s]);
        out[s] = layer == Layer::os ? a.command : a.config;
    }
    return out;
}

BestResponseLearner::BestResponseLearner(const DmsModel& model, LearningSchedule schedule, Layer learning_layer,
                                         std::vector<std::size_t> other_policy, std::uint64_t seed)
    : model_(model), schedule_(schedule), layer_(learning_layer), other_(std::move(other_policy)),
      q_(model.states().size(),
         learning_layer == Layer::app ? model.actions().num_configs() : model.actions().num_commands()),
      visits_(q_.num_states() * q_.num_actions(), 0), rng_(seed) {
    schedule_.validate();
    if (other_.size() != model.states().size())
        throw PolicyError("fixed policy of the other layer does not cover every state");
    const std::size_t other_actions =
        learning_layer == Layer::app ? model.actions().num_commands() : model.actions().num_configs();
    for (auto a : other_)
        if (a >= other_actions) throw PolicyError("fixed policy of the other layer has an invalid action");
}

SlotRecord BestResponseLearner::step(Environment& env) {
    log_.begin_slot();
    SlotRecord rec;
    rec.state = env.state();
    const std::size_t s = model_.states().index(rec.state);
    const std::size_t a = epsilon_greedy(q_.row(s), schedule_.epsilon(slot_), rng_);
    rec.action = layer_ == Layer::app ? GlobalAction{other_[s], a} : GlobalAction{a, other_[s]};
    rec.outcome = env.step(rec.action);
    const double alpha = schedule_.alpha(visits_[s * q_.num_actions() + a]++);
    rec.delta = q_update(q_, s, a, rec.outcome.reward, model_.states().index(rec.outcome.next), alpha,
                         schedule_.gamma)
                    .delta;
    rec.cells_updated = 1;
    ++slot_;
    return rec;
}

// ---- oracle and GRACE -------------------------------------------------------------

OracleGreedyLearner::OracleGreedyLearner(const DmsModel& model, Policy policy, std::vector<double> values)
    : model_(model), policy_(std::move(policy)), values_(std::move(values)) {
    if (policy_.size() != model.states().size()) throw PolicyError("oracle policy does not cover every state");
    for (auto a : policy_)
        if (a >= model.actions().size()) throw PolicyError("oracle policy has an invalid action");
}

SlotRecord OracleGreedyLearner::step(Environment& env) {
    log_.begin_slot();
    SlotRecord rec;
    rec.state = env.state();
    rec.action = model_.actions().action(policy_[model_.states().index(rec.state)]);
    rec.outcome = env.step(rec.action);
    return rec;
}

std::string to_string(GraceDeadline d) { return d == GraceDeadline::unit ? "unit" : "queue"; }

GraceDeadline grace_deadline_from_string(const std::string& text) {
    if (text == "unit") return GraceDeadline::unit;
    if (text == "queue") return GraceDeadline::queue;
    throw ConfigError("grace deadline must be 'unit' or 'queue', got '" + text + "'");
}

double nearest_rank_percentile(std::vector<double> values, double p) {
    if (values.empty()) throw InvalidInput("percentile of an empty window");
    if (!(p > 0.0 && p <= 1.0)) throw InvalidInput("percentile must lie in (0, 1]");
    std::sort(values.begin(), values.end());
    const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(values.size())));
    return values[std::max<std::size_t>(rank, 1) - 1];
}

void GraceState::complete(double cycles, const GraceParams& params) {
    window.push_back(cycles);
    while (window.size() > params.window) window.pop_front();
    const double p = nearest_rank_percentile({window.begin(), window.end()}, params.percentile);
    estimate = has_estimate ? params.rho * estimate + (1.0 - params.rho) * p : p;
    has_estimate = true;
}

std::size_t grace_frequency(double cycles, double deadline_seconds, const std::vector<double>& frequencies) {
    for (std::size_t i = 0; i < frequencies.size(); ++i)
        if (cycles / frequencies[i] <= deadline_seconds) return i;
    return frequencies.size() - 1;
}

GraceLearner::GraceLearner(const DmsModel& model, GraceParams params) : model_(model), params_(params) {
    if (params_.window == 0) throw ConfigError("grace window must hold at least one unit");
    if (!(params_.rho >= 0.0 && params_.rho < 1.0)) throw ConfigError("grace rho must lie in [0, 1)");
    if (!(params_.percentile > 0.0 && params_.percentile <= 1.0))
        throw ConfigError("grace percentile must lie in (0, 1]");
    const auto cells = model.config().num_types() * model.config().num_configs;
    g_.cost_sum.assign(cells, 0.0);
    g_.cost_count.assign(cells, 0);
}

double GraceLearner::deadline(const GlobalState& s) const {
    const auto& cfg = model_.config();
    if (params_.deadline == GraceDeadline::unit) return 1.0 / cfg.arrival_rate;
    // The buffer overflows once q + eta*t - 1 exceeds N_q.
    return static_cast<double>(cfg.buffer_capacity + 1 - s.occupancy) / cfg.arrival_rate;
}

SlotRecord GraceLearner::step(Environment& env) {
    log_.begin_slot();
    const auto& cfg = model_.config();
    SlotRecord rec;
    rec.state = env.state();
    const std::size_t u = g_.has_estimate ? grace_frequency(g_.estimate, deadline(rec.state), cfg.frequencies)
                                          : cfg.num_frequencies() - 1;

    const std::size_t nh = cfg.num_configs;
    const std::size_t base = rec.state.type * nh;
    std::size_t h = nh;
    for (std::size_t i = 0; i < nh && h == nh; ++i)
        if (g_.cost_count[base + i] == 0) h = i;
    if (h == nh) {
        h = 0;
        double best = g_.cost_sum[base] / static_cast<double>(g_.cost_count[base]);
        for (std::size_t i = 1; i < nh; ++i) {
            const double mean = g_.cost_sum[base + i] / static_cast<double>(g_.cost_count[base + i]);
            if (mean < best) {
                best = mean;
                h = i;
            }
        }
    }

    rec.action = {u, h};
    rec.outcome = env.step(rec.action);
    g_.complete(rec.outcome.cycles, params_);
    g_.cost_sum[base + h] += rec.outcome.cost_app;
    g_.cost_count[base + h] += 1;
    return rec;
}

std::vector<double> GraceLearner::value_estimate() const {
    return std::vector<double>(model_.states().size(), 0.0);
}

}  // namespace dmsrl
