#include "config.hpp"

#include "errors.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace dmsrl {

std::string to_string(TraceMode mode) {
    switch (mode) {
        case TraceMode::stationary: return "stationary";
        case TraceMode::nonstationary: return "nonstationary";
        case TraceMode::csv: return "csv";
    }
    return {};
}

const std::vector<std::string>& algorithm_names() {
    static const std::vector<std::string> names{"centralized", "layered",    "best-response-app",
                                                "best-response-os", "virtual-et", "td-lambda",
                                                "grace",       "oracle-greedy"};
    return names;
}

std::uint64_t parse_horizon(const std::string& text) {
    if (text == "short") return 20'000;
    if (text == "medium") return 64'000;
    if (text == "long") return 192'000;
    std::uint64_t n = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
    if (ec != std::errc() || ptr != text.data() + text.size() || n == 0)
        throw ConfigError("horizon must be short, medium, long or a positive integer, got '" + text + "'");
    return n;
}

void ExperimentConfig::validate() const {
    dms.validate();
    learner.schedule.validate();
    if (horizon == 0) throw ConfigError("experiment.horizon must be at least 1");
    if (seeds.empty()) throw ConfigError("experiment.seeds must list at least one seed");
    if (checkpoint_interval == 0) throw ConfigError("experiment.checkpoint_interval must be positive");
    const auto& names = algorithm_names();
    if (std::find(names.begin(), names.end(), learner.algorithm) == names.end())
        throw ConfigError("experiment.learner: unknown algorithm '" + learner.algorithm + "'");
    if (!(learner.lambda >= 0.0 && learner.lambda <= 1.0)) throw ConfigError("learning.lambda must lie in [0, 1]");
    if (trace.mode != TraceMode::csv) {
        const auto check = [&](const SyntheticParams& p) {
            if (p.num_types != dms.num_types() || p.num_configs != dms.num_configs)
                throw ConfigError("trace parameters do not match dms.types x dms.configs");
            p.validate();
        };
        check(trace.params);
        for (const auto& s : trace.segments) check(s.params);
        if (trace.mode == TraceMode::nonstationary && trace.segments.size() < 2)
            throw ConfigError("nonstationary trace needs at least two [segment.N] sections");
    }
    if (oracle.samples == 0 || !(oracle.tol > 0.0)) throw ConfigError("oracle.samples and oracle.tol must be positive");
    const bool needs_oracle = learner.algorithm == "oracle-greedy" || learner.algorithm == "best-response-app" ||
                              learner.algorithm == "best-response-os";
    if (needs_oracle && !oracle.enabled)
        throw ConfigError("experiment.learner '" + learner.algorithm + "' requires oracle.enabled = true");
}

namespace {

using Section = std::map<std::string, std::string>;

class Reader {
public:
    Reader(std::map<std::string, Section> sections) : sections_(std::move(sections)) {}

    bool has_section(const std::string& sec) const { return sections_.count(sec) > 0; }

    std::optional<std::string> get(const std::string& sec, const std::string& key) {
        const auto s = sections_.find(sec);
        if (s == sections_.end()) return std::nullopt;
        const auto k = s->second.find(key);
        if (k == s->second.end()) return std::nullopt;
        used_.insert(sec + "\x1f" + key);
        return k->second;
    }

    template <class T, class F>
    void read(const std::string& sec, const std::string& key, T& target, F&& convert) {
        if (auto v = get(sec, key)) {
            try {
                target = convert(*v);
            } catch (const ConfigError& e) {
                throw ConfigError(fmt::format("[{}] {}: {}", sec, key, e.what()));
            }
        }
    }

    void check_all_used() const {
        for (const auto& [sec, keys] : sections_)
            for (const auto& [key, value] : keys)
                if (!used_.count(sec + "\x1f" + key)) throw ConfigError(fmt::format("[{}] {}: unknown key", sec, key));
    }

    std::vector<std::string> sections_with_prefix(const std::string& prefix) const {
        std::vector<std::string> out;
        for (const auto& [sec, keys] : sections_)
            if (sec.rfind(prefix, 0) == 0) out.push_back(sec);
        return out;
    }

    std::vector<std::string> section_names() const {
        std::vector<std::string> out;
        for (const auto& [sec, keys] : sections_) out.push_back(sec);
        return out;
    }

private:
    std::map<std::string, Section> sections_;
    std::set<std::string> used_;
};

std::string trim(std::string s) {
    boost::algorithm::trim(s);
    return s;
}

double to_double(const std::string& text) {
    const auto t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw ConfigError("expected a number, got '" + text + "'");
    return v;
}

std::uint64_t to_uint(const std::string& text) {
    const auto t = trim(text);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw ConfigError("expected a non-negative integer, got '" + text + "'");
    return v;
}

bool to_bool(const std::string& text) {
    const auto t = boost::algorithm::to_lower_copy(trim(text));
    if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
    if (t == "false" || t == "no" || t == "off" || t == "0") return false;
    throw ConfigError("expected true or false, got '" + text + "'");
}

std::vector<std::string> to_list(const std::string& text, const char* sep) {
    std::vector<std::string> parts;
    boost::algorithm::split(parts, text, boost::algorithm::is_any_of(sep));
    for (auto& p : parts) p = trim(p);
    if (parts.size() == 1 && parts[0].empty()) parts.clear();
    return parts;
}

std::vector<double> to_doubles(const std::string& text) {
    std::vector<double> out;
    for (const auto& p : to_list(text, ",")) out.push_back(to_double(p));
    return out;
}

std::vector<double> to_matrix(const std::string& text) {
    std::vector<double> out;
    for (const auto& row : to_list(text, ";"))
        for (double v : to_doubles(row)) out.push_back(v);
    return out;
}

// Distributions of one quantity for every configuration, separated by ';'.
std::vector<Distribution> to_distributions(const std::string& text) {
    std::vector<Distribution> out;
    for (const auto& p : to_list(text, ";")) out.push_back(Distribution::parse(p));
    return out;
}

void apply_cell_overrides(Reader& r, const std::string& sec, const DmsConfig& dms, SyntheticParams& params) {
    for (std::size_t z = 0; z < dms.num_types(); ++z) {
        for (const char* quantity : {"bits", "distortion", "cycles"}) {
            const std::string key = std::string(quantity) + "." + dms.type_labels[z];
            const auto v = r.get(sec, key);
            if (!v) continue;
            std::vector<Distribution> d;
            try {
                d = to_distributions(*v);
            } catch (const ConfigError& e) {
                throw ConfigError(fmt::format("[{}] {}: {}", sec, key, e.what()));
            }
            if (d.size() != dms.num_configs)
                throw ConfigError(fmt::format("[{}] {}: expected {} distributions separated by ';', got {}", sec, key,
                                              dms.num_configs, d.size()));
            for (std::size_t h = 0; h < dms.num_configs; ++h) {
                auto& cell = params.cell(z, h);
                if (quantity[0] == 'b') cell.bits = d[h];
                else if (quantity[0] == 'd') cell.distortion = d[h];
                else cell.cycles = d[h];
            }
        }
    }
}

SyntheticParams empty_params(const DmsConfig& dms) {
    SyntheticParams p;
    p.num_types = dms.num_types();
    p.num_configs = dms.num_configs;
    p.cells.assign(p.num_types * p.num_configs,
                   CellParams{Distribution::point(-1.0), Distribution::point(-1.0), Distribution::point(-1.0)});
    return p;
}

bool is_default_layout(const DmsConfig& dms) {
    return dms.type_labels == std::vector<std::string>{"P", "B", "I"} && dms.num_configs == 3;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                              const std::string& default_label) {
    boost::property_tree::ptree tree;
    try {
        std::istringstream in(text);
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(fmt::format("line {}: {}", e.line(), e.message()));
    }

    std::map<std::string, Section> sections;
    for (const auto& [sec, child] : tree) {
        if (child.empty() && !child.data().empty())
            throw ConfigError("key '" + sec + "' appears outside any section");
        for (const auto& [key, value] : child) sections[sec][key] = value.data();
    }
    Reader r(std::move(sections));
    for (const auto& sec : r.section_names()) {
        static const std::set<std::string> known{"experiment", "learning", "dms", "trace", "oracle"};
        if (!known.count(sec) && sec.rfind("segment.", 0) != 0)
            throw ConfigError("unknown section [" + sec + "]");
    }

    ExperimentConfig cfg;

    // [dms]
    auto& d = cfg.dms;
    const std::string D = "dms";
    r.read(D, "frequencies", d.frequencies, to_doubles);
    r.read(D, "types", d.type_labels, [](const std::string& v) { return to_list(v, ","); });
    r.read(D, "configs", d.num_configs, to_uint);
    r.read(D, "beta", d.beta, to_double);
    r.read(D, "kappa", d.kappa, to_double);
    r.read(D, "theta", d.theta, to_double);
    r.read(D, "buffer_capacity", d.buffer_capacity, [](const std::string& v) { return static_cast<int>(to_uint(v)); });
    r.read(D, "arrival_rate", d.arrival_rate, to_double);
    r.read(D, "initial_occupancy", d.initial_occupancy,
           [](const std::string& v) { return static_cast<int>(to_uint(v)); });
    d.initial_frequency = d.frequencies.empty() ? 0 : d.frequencies.size() - 1;
    if (auto v = r.get(D, "initial_frequency")) {
        double f = 0.0;
        try {
            f = to_double(*v);
        } catch (const ConfigError& e) {
            throw ConfigError(fmt::format("[dms] initial_frequency: {}", e.what()));
        }
        const auto it = std::find(d.frequencies.begin(), d.frequencies.end(), f);
        if (it == d.frequencies.end())
            throw ConfigError("[dms] initial_frequency: must be one of dms.frequencies");
        d.initial_frequency = static_cast<std::size_t>(it - d.frequencies.begin());
    }
    r.read(D, "omega_os", d.omega_os, to_double);
    r.read(D, "omega_app", d.omega_app, to_double);
    r.read(D, "lambda_rd", d.lambda_rd, to_double);
    r.read(D, "gain", d.gain, gain_mode_from_string);
    const bool custom_types = d.type_labels != DmsConfig::defaults().type_labels;
    if (auto v = r.get(D, "type_transition")) {
        try {
            d.type_transition = to_matrix(*v);
        } catch (const ConfigError& e) {
            throw ConfigError(fmt::format("[dms] type_transition: {}", e.what()));
        }
    } else if (custom_types) {
        throw ConfigError("[dms] type_transition: required when dms.types differs from P,B,I");
    }
    try {
        d.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("[dms] {}", e.what()));
    }

    // [experiment]
    const std::string E = "experiment";
    cfg.label = default_label;
    r.read(E, "label", cfg.label, trim);
    r.read(E, "learner", cfg.learner.algorithm, trim);
    r.read(E, "horizon", cfg.horizon, [](const std::string& v) { return parse_horizon(trim(v)); });
    r.read(E, "seeds", cfg.seeds, [](const std::string& v) {
        std::vector<std::uint64_t> out;
        for (const auto& p : to_list(v, ",")) out.push_back(to_uint(p));
        return out;
    });
    r.read(E, "checkpoint_interval", cfg.checkpoint_interval, to_uint);
    r.read(E, "slot_log", cfg.slot_log, to_bool);

    // [learning]
    const std::string L = "learning";
    auto& sch = cfg.learner.schedule;
    r.read(L, "gamma", sch.gamma, to_double);
    r.read(L, "alpha", sch.decaying_alpha, [](const std::string& v) {
        const auto t = trim(v);
        if (t == "visit") return true;
        if (t == "constant") return false;
        throw ConfigError("expected visit or constant, got '" + v + "'");
    });
    r.read(L, "alpha0", sch.alpha0, to_double);
    r.read(L, "alpha_exponent", sch.alpha_exponent, to_double);
    r.read(L, "epsilon", sch.decaying_epsilon, [](const std::string& v) {
        const auto t = trim(v);
        if (t == "decaying") return true;
        if (t == "constant") return false;
        throw ConfigError("expected constant or decaying, got '" + v + "'");
    });
    r.read(L, "epsilon0", sch.epsilon0, to_double);
    r.read(L, "psi", cfg.learner.psi, to_uint);
    r.read(L, "lambda", cfg.learner.lambda, to_double);
    r.read(L, "grace_window", cfg.learner.grace.window, to_uint);
    r.read(L, "grace_rho", cfg.learner.grace.rho, to_double);
    r.read(L, "grace_percentile", cfg.learner.grace.percentile, to_double);
    r.read(L, "grace_deadline", cfg.learner.grace.deadline,
           [](const std::string& v) { return grace_deadline_from_string(trim(v)); });
    try {
        sch.validate();
    } catch (const InvalidInput& e) {
        throw ConfigError(fmt::format("[learning] {}", e.what()));
    }

    // [trace]
    const std::string T = "trace";
    auto& tr = cfg.trace;
    r.read(T, "mode", tr.mode, [](const std::string& v) {
        const auto t = trim(v);
        if (t == "stationary") return TraceMode::stationary;
        if (t == "nonstationary") return TraceMode::nonstationary;
        if (t == "csv") return TraceMode::csv;
        throw ConfigError("expected stationary, nonstationary or csv, got '" + v + "'");
    });
    if (auto v = r.get(T, "path")) {
        std::filesystem::path p = trim(*v);
        tr.csv_path = p.is_absolute() ? p : std::filesystem::absolute(base_dir / p).lexically_normal();
    }
    if (tr.mode == TraceMode::csv && tr.csv_path.empty()) throw ConfigError("[trace] path: required in csv mode");
    tr.params = is_default_layout(d) ? SyntheticParams::defaults_pbi() : empty_params(d);
    apply_cell_overrides(r, T, d, tr.params);

    // [segment.N], ordered by N
    auto segs = r.sections_with_prefix("segment.");
    std::vector<std::pair<std::uint64_t, std::string>> ordered;
    for (const auto& s : segs) {
        try {
            ordered.emplace_back(to_uint(s.substr(8)), s);
        } catch (const ConfigError&) {
            throw ConfigError("section [" + s + "] must be named segment.<number>");
        }
    }
    std::sort(ordered.begin(), ordered.end());
    for (const auto& [n, sec] : ordered) {
        Segment seg;
        seg.params = tr.params;
        r.read(sec, "duration", seg.duration, to_uint);
        if (seg.duration == 0) throw ConfigError(fmt::format("[{}] duration: required and positive", sec));
        double cs = 1.0, bs = 1.0, ds = 1.0;
        r.read(sec, "cycles_scale", cs, to_double);
        r.read(sec, "bits_scale", bs, to_double);
        r.read(sec, "distortion_scale", ds, to_double);
        apply_cell_overrides(r, sec, d, seg.params);
        try {
            if (cs != 1.0 || bs != 1.0 || ds != 1.0) seg.params = seg.params.scaled(cs, bs, ds);
        } catch (const ConfigError& e) {
            throw ConfigError(fmt::format("[{}] {}", sec, e.what()));
        }
        tr.segments.push_back(std::move(seg));
    }
    if (tr.mode != TraceMode::nonstationary && !tr.segments.empty())
        throw ConfigError("[segment.N] sections need trace.mode = nonstationary");

    // [oracle]
    const std::string O = "oracle";
    r.read(O, "enabled", cfg.oracle.enabled, to_bool);
    r.read(O, "samples", cfg.oracle.samples, to_uint);
    r.read(O, "seed", cfg.oracle.seed, to_uint);
    r.read(O, "tol", cfg.oracle.tol, to_double);
    r.read(O, "min_trace_length", cfg.oracle.min_trace_length, to_uint);

    r.check_all_used();
    try {
        cfg.validate();
    } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.parent_path(), path.stem().string());
}

namespace {

void write_cells(std::ostringstream& out, const DmsConfig& dms, const SyntheticParams& p) {
    for (std::size_t z = 0; z < dms.num_types(); ++z) {
        for (const char* quantity : {"bits", "distortion", "cycles"}) {
            std::vector<std::string> parts;
            for (std::size_t h = 0; h < dms.num_configs; ++h) {
                const auto& c = p.cell(z, h);
                const auto& dist = quantity[0] == 'b' ? c.bits : quantity[0] == 'd' ? c.distortion : c.cycles;
                parts.push_back(dist.to_string());
            }
            out << fmt::format("{}.{} = {}\n", quantity, dms.type_labels[z], fmt::join(parts, "; "));
        }
    }
}

void write_system(std::ostringstream& out, const ExperimentConfig& cfg) {
    const auto& d = cfg.dms;
    out << "[dms]\n";
    out << fmt::format("frequencies = {}\n", fmt::join(d.frequencies, ", "));
    out << fmt::format("types = {}\n", fmt::join(d.type_labels, ", "));
    out << fmt::format("configs = {}\n", d.num_configs);
    out << fmt::format("beta = {}\n", d.beta);
    out << fmt::format("kappa = {}\n", d.kappa);
    out << fmt::format("theta = {}\n", d.theta);
    out << fmt::format("buffer_capacity = {}\n", d.buffer_capacity);
    out << fmt::format("arrival_rate = {}\n", d.arrival_rate);
    out << fmt::format("initial_occupancy = {}\n", d.initial_occupancy);
    out << fmt::format("initial_frequency = {}\n", d.frequencies[d.initial_frequency]);
    out << fmt::format("omega_os = {}\n", d.omega_os);
    out << fmt::format("omega_app = {}\n", d.omega_app);
    out << fmt::format("lambda_rd = {}\n", d.lambda_rd);
    std::vector<std::string> rows;
    for (std::size_t i = 0; i < d.num_types(); ++i) {
        std::vector<double> row(d.type_transition.begin() + static_cast<std::ptrdiff_t>(i * d.num_types()),
                                d.type_transition.begin() + static_cast<std::ptrdiff_t>((i + 1) * d.num_types()));
        rows.push_back(fmt::format("{}", fmt::join(row, ", ")));
    }
    out << fmt::format("type_transition = {}\n", fmt::join(rows, "; "));
    out << fmt::format("gain = {}\n\n", to_string(d.gain));

    out << "[trace]\n";
    out << fmt::format("mode = {}\n", to_string(cfg.trace.mode));
    if (!cfg.trace.csv_path.empty()) out << fmt::format("path = {}\n", cfg.trace.csv_path.string());
    if (cfg.trace.mode != TraceMode::csv) write_cells(out, d, cfg.trace.params);
    out << "\n";
    for (std::size_t i = 0; i < cfg.trace.segments.size(); ++i) {
        const auto& s = cfg.trace.segments[i];
        out << fmt::format("[segment.{}]\nduration = {}\n", i + 1, s.duration);
        write_cells(out, d, s.params);
        out << "\n";
    }
}

}  // namespace

std::string system_fingerprint(const ExperimentConfig& cfg) {
    std::ostringstream out;
    write_system(out, cfg);
    return out.str();
}

std::string resolved_ini(const ExperimentConfig& cfg) {
    std::ostringstream out;
    const auto& l = cfg.learner;
    const auto& s = l.schedule;
    out << "[experiment]\n";
    out << fmt::format("label = {}\n", cfg.label);
    out << fmt::format("learner = {}\n", l.algorithm);
    out << fmt::format("horizon = {}\n", cfg.horizon);
    out << fmt::format("seeds = {}\n", fmt::join(cfg.seeds, ", "));
    out << fmt::format("checkpoint_interval = {}\n", cfg.checkpoint_interval);
    out << fmt::format("slot_log = {}\n\n", cfg.slot_log);

    out << "[learning]\n";
    out << fmt::format("gamma = {}\n", s.gamma);
    out << fmt::format("alpha = {}\n", s.decaying_alpha ? "visit" : "constant");
    out << fmt::format("alpha0 = {}\n", s.alpha0);
    out << fmt::format("alpha_exponent = {}\n", s.alpha_exponent);
    out << fmt::format("epsilon = {}\n", s.decaying_epsilon ? "decaying" : "constant");
    out << fmt::format("epsilon0 = {}\n", s.epsilon0);
    out << fmt::format("psi = {}\n", l.psi);
    out << fmt::format("lambda = {}\n", l.lambda);
    out << fmt::format("grace_window = {}\n", l.grace.window);
    out << fmt::format("grace_rho = {}\n", l.grace.rho);
    out << fmt::format("grace_percentile = {}\n", l.grace.percentile);
    out << fmt::format("grace_deadline = {}\n\n", to_string(l.grace.deadline));

    write_system(out, cfg);

    out << "[oracle]\n";
    out << fmt::format("enabled = {}\n", cfg.oracle.enabled);
    out << fmt::format("samples = {}\n", cfg.oracle.samples);
    out << fmt::format("seed = {}\n", cfg.oracle.seed);
    out << fmt::format("tol = {}\n", cfg.oracle.tol);
    out << fmt::format("min_trace_length = {}\n", cfg.oracle.min_trace_length);
    return out.str();
}

}  // namespace dmsrl
