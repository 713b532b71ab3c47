#include "trace.hpp"

#include "errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace dmsrl {

namespace {

double parse_number(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
        throw ConfigError("not a number: '" + std::string(text) + "'");
    return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(text.substr(start));
            return out;
        }
        out.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace

Distribution Distribution::point(double value) {
    Distribution d;
    d.family_ = Family::point;
    d.a_ = value;
    return d;
}

Distribution Distribution::normal(double mean, double sd) {
    if (!(sd >= 0.0) || !std::isfinite(mean)) throw ConfigError("normal: invalid parameters");
    Distribution d;
    d.family_ = Family::normal;
    d.a_ = mean;
    d.b_ = sd;
    return d;
}

Distribution Distribution::lognormal(double mu, double sigma) {
    if (!(sigma >= 0.0) || !std::isfinite(mu)) throw ConfigError("lognormal: invalid parameters");
    Distribution d;
    d.family_ = Family::lognormal;
    d.a_ = mu;
    d.b_ = sigma;
    return d;
}

Distribution Distribution::lognormal_from_mean(double mean, double cv) {
    if (!(mean > 0.0) || !(cv >= 0.0)) throw ConfigError("lognormal: mean must be positive");
    const double sigma2 = std::log1p(cv * cv);
    return lognormal(std::log(mean) - 0.5 * sigma2, std::sqrt(sigma2));
}

Distribution Distribution::empirical(std::vector<double> values) {
    if (values.empty()) throw ConfigError("empirical distribution needs at least one value");
    Distribution d;
    d.family_ = Family::empirical;
    d.values_ = std::move(values);
    return d;
}

Distribution Distribution::parse(const std::string& text) {
    const auto open = text.find('(');
    const auto close = text.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open)
        throw ConfigError("malformed distribution '" + text + "'");
    std::string name = text.substr(0, open);
    name.erase(std::remove_if(name.begin(), name.end(), ::isspace), name.end());
    std::vector<double> args;
    const std::string_view inner = std::string_view(text).substr(open + 1, close - open - 1);
    for (auto part : split(inner, ',')) args.push_back(parse_number(part));

    auto want = [&](std::size_t n) {
        if (args.size() != n)
            throw ConfigError(fmt::format("{} expects {} parameter(s) in '{}'", name, n, text));
    };
    if (name == "point") {
        want(1);
        return point(args[0]);
    }
    if (name == "normal") {
        want(2);
        return normal(args[0], args[1]);
    }
    if (name == "lognormal") {
        want(2);
        return lognormal(args[0], args[1]);
    }
    if (name == "lognormal_mean") {
        want(2);
        return lognormal_from_mean(args[0], args[1]);
    }
    if (name == "empirical") return empirical(std::move(args));
    throw ConfigError("unknown distribution family '" + name + "'");
}

std::string Distribution::to_string() const {
    switch (family_) {
        case Family::point: return fmt::format("point({})", a_);
        case Family::normal: return fmt::format("normal({},{})", a_, b_);
        case Family::lognormal: return fmt::format("lognormal({},{})", a_, b_);
        case Family::empirical: return fmt::format("empirical({})", fmt::join(values_, ","));
    }
    return {};
}

double Distribution::draw(Rng& rng) const {
    switch (family_) {
        case Family::point: return a_;
        case Family::normal: {
            std::normal_distribution<double> n(a_, b_);
            return std::max(0.0, n(rng));
        }
        case Family::lognormal: {
            std::normal_distribution<double> n(a_, b_);
            return std::exp(n(rng));
        }
        case Family::empirical: {
            std::uniform_int_distribution<std::size_t> pick(0, values_.size() - 1);
            return values_[pick(rng)];
        }
    }
    return 0.0;
}

double Distribution::mean() const {
    switch (family_) {
        case Family::point: return a_;
        case Family::normal: {
            // Mean of max(0, X) for X ~ N(m, s).
            if (b_ == 0.0) return std::max(0.0, a_);
            const double z = a_ / b_;
            const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
            const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
            return a_ * cdf + b_ * pdf;
        }
        case Family::lognormal: return std::exp(a_ + 0.5 * b_ * b_);
        case Family::empirical:
            return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
    }
    return 0.0;
}

double Distribution::min_support() const {
    switch (family_) {
        case Family::point: return a_;
        case Family::normal: return 0.0;
        case Family::lognormal: return std::numeric_limits<double>::min();
        case Family::empirical: return *std::min_element(values_.begin(), values_.end());
    }
    return 0.0;
}

Distribution Distribution::scaled(double factor) const {
    if (!(factor > 0.0)) throw ConfigError("scale factor must be positive");
    Distribution d = *this;
    switch (family_) {
        case Family::point: d.a_ *= factor; break;
        case Family::normal:
            d.a_ *= factor;
            d.b_ *= factor;
            break;
        case Family::lognormal: d.a_ += std::log(factor); break;
        case Family::empirical:
            for (auto& v : d.values_) v *= factor;
            break;
    }
    return d;
}

void SyntheticParams::validate() const {
    if (num_types == 0 || num_configs == 0) throw ConfigError("trace parameters are empty");
    if (cells.size() != num_types * num_configs)
        throw ConfigError("trace parameters must cover every (type, config) cell");
    for (const auto& c : cells) {
        if (c.cycles.family() == Distribution::Family::normal)
            throw ConfigError("cycles need a strictly positive family (point, lognormal, empirical)");
        if (!(c.cycles.min_support() > 0.0)) throw ConfigError("cycles must be positive");
        if (c.bits.min_support() < 0.0 || c.distortion.min_support() < 0.0)
            throw ConfigError("bits and distortion must be non-negative");
    }
}

SyntheticParams SyntheticParams::scaled(double cycles_factor, double bits_factor,
                                        double distortion_factor) const {
    SyntheticParams out = *this;
    for (auto& c : out.cells) {
        c.cycles = c.cycles.scaled(cycles_factor);
        c.bits = c.bits.scaled(bits_factor);
        c.distortion = c.distortion.scaled(distortion_factor);
    }
    return out;
}

SyntheticParams SyntheticParams::defaults_pbi() {
    struct Row {
        double cycles, bits, distortion;
    };
    // [type][config]: h1 quarter-pel 8x8 ME, h2 full-pel 8x8, h3 full-pel 16x16.
    // Intra units ignore motion search, so their configurations differ little.
    const Row table[3][3] = {
        {{9.0e6, 112.0, 7.6}, {7.4e6, 118.0, 7.9}, {6.2e6, 124.0, 8.2}},     // P
        {{7.2e6, 84.0, 8.3}, {6.0e6, 89.0, 8.6}, {5.1e6, 94.0, 8.9}},        // B
        {{1.30e7, 150.0, 6.1}, {1.26e7, 151.0, 6.2}, {1.22e7, 152.0, 6.3}},  // I
    };
    constexpr double cycles_cv = 0.35;
    constexpr double rel_sd = 0.15;

    SyntheticParams p;
    p.num_types = 3;
    p.num_configs = 3;
    for (const auto& type_row : table) {
        for (const auto& r : type_row) {
            p.cells.push_back({Distribution::normal(r.bits, rel_sd * r.bits),
                               Distribution::normal(r.distortion, rel_sd * r.distortion),
                               Distribution::lognormal_from_mean(r.cycles, cycles_cv)});
        }
    }
    return p;
}

void draw_sample(const SyntheticParams& params, std::size_t type, Rng& rng, TraceSample& out) {
    if (type >= params.num_types) throw InvalidInput("data-unit type out of range");
    out.type = type;
    out.configs.resize(params.num_configs);
    for (std::size_t h = 0; h < params.num_configs; ++h) {
        const auto& cell = params.cell(type, h);
        out.configs[h].bits = cell.bits.draw(rng);
        out.configs[h].distortion = cell.distortion.draw(rng);
        out.configs[h].cycles = cell.cycles.draw(rng);
    }
}

StationaryStream::StationaryStream(SyntheticParams params, std::uint64_t seed)
    : params_(std::move(params)), rng_(seed) {
    params_.validate();
}

const TraceSample& StationaryStream::next(std::size_t type) {
    draw_sample(params_, type, rng_, sample_);
    ++sample_.index;
    return sample_;
}

NonstationaryStream::NonstationaryStream(std::vector<Segment> segments, std::uint64_t seed)
    : segments_(std::move(segments)), rng_(seed) {
    if (segments_.empty()) throw ConfigError("non-stationary trace needs at least one segment");
    for (const auto& s : segments_) {
        if (s.duration == 0) throw ConfigError("segment duration must be positive");
        s.params.validate();
        period_ += s.duration;
    }
    sample_.index = 0;
}

std::size_t NonstationaryStream::segment_at(std::size_t index) const {
    std::size_t pos = index % period_;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        if (pos < segments_[i].duration) return i;
        pos -= segments_[i].duration;
    }
    return segments_.size() - 1;
}

const TraceSample& NonstationaryStream::next(std::size_t type) {
    // sample_.index counts samples already produced, so it is the index of this one.
    const std::size_t n = sample_.index;
    draw_sample(segments_[segment_at(n)].params, type, rng_, sample_);
    sample_.index = n + 1;
    return sample_;
}

ReplayStream::ReplayStream(std::shared_ptr<const std::vector<TraceSample>> samples)
    : samples_(std::move(samples)) {
    if (!samples_ || samples_->empty()) throw TraceError("replay trace is empty");
}

const TraceSample& ReplayStream::next(std::size_t) {
    sample_ = (*samples_)[cursor_];
    cursor_ = (cursor_ + 1) % samples_->size();
    return sample_;
}

std::size_t ReplayStream::peek_type() const { return (*samples_)[cursor_].type; }

std::vector<TraceSample> synth_stationary(const SyntheticParams& params,
                                          const std::vector<std::size_t>& types, std::uint64_t seed) {
    StationaryStream stream(params, seed);
    std::vector<TraceSample> out;
    out.reserve(types.size());
    for (auto z : types) out.push_back(stream.next(z));
    return out;
}

std::vector<TraceSample> synth_nonstationary(const std::vector<Segment>& segments,
                                             const std::vector<std::size_t>& types,
                                             std::uint64_t seed) {
    NonstationaryStream stream(segments, seed);
    std::vector<TraceSample> out;
    out.reserve(types.size());
    for (auto z : types) out.push_back(stream.next(z));
    return out;
}

std::vector<TraceSample> parse_csv(const std::string& text, const std::vector<std::string>& type_labels) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw TraceError("trace file is empty", 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split(line, ',');
    if (header.size() < 5 || (header.size() - 2) % 3 != 0 || header[0] != "n" || header[1] != "z")
        throw TraceError("header must read n,z,b_h1,d_h1,c_h1,...", 1);
    const std::size_t num_configs = (header.size() - 2) / 3;
    for (std::size_t h = 0; h < num_configs; ++h) {
        const auto k = std::to_string(h + 1);
        if (header[2 + 3 * h] != "b_h" + k || header[3 + 3 * h] != "d_h" + k ||
            header[4 + 3 * h] != "c_h" + k)
            throw TraceError("unexpected header column for configuration h" + k, 1);
    }

    std::vector<TraceSample> samples;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cols = split(line, ',');
        if (cols.size() != header.size())
            throw TraceError(fmt::format("expected {} columns, found {}", header.size(), cols.size()), line_no);
        TraceSample s;
        double n = -1.0;
        try {
            n = parse_number(cols[0]);
        } catch (const ConfigError&) {
        }
        if (n < 0 || n != std::floor(n)) throw TraceError("malformed data-unit index", line_no);
        s.index = static_cast<std::size_t>(n);
        const auto label = std::find(type_labels.begin(), type_labels.end(), std::string(cols[1]));
        if (label == type_labels.end())
            throw TraceError("unknown data-unit type '" + std::string(cols[1]) + "'", line_no);
        s.type = static_cast<std::size_t>(label - type_labels.begin());
        s.configs.resize(num_configs);
        for (std::size_t h = 0; h < num_configs; ++h) {
            auto& m = s.configs[h];
            try {
                m.bits = parse_number(cols[2 + 3 * h]);
                m.distortion = parse_number(cols[3 + 3 * h]);
                m.cycles = parse_number(cols[4 + 3 * h]);
            } catch (const ConfigError&) {
                throw TraceError("malformed number", line_no);
            }
            if (m.cycles != std::floor(m.cycles)) throw TraceError("cycles must be an integer", line_no);
            if (!(m.cycles > 0.0)) throw TraceError("cycles must be positive", line_no);
            if (m.bits < 0.0 || m.distortion < 0.0)
                throw TraceError("bits and distortion must be non-negative", line_no);
        }
        samples.push_back(std::move(s));
    }
    if (samples.empty()) throw TraceError("trace has no data rows", line_no);
    return samples;
}

std::vector<TraceSample> load_csv(const std::filesystem::path& path,
                                  const std::vector<std::string>& type_labels) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TraceError("cannot open trace file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), type_labels);
}

void write_csv(const std::filesystem::path& path, const std::vector<TraceSample>& samples,
               const std::vector<std::string>& type_labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw TraceError("cannot write trace file " + path.string());
    const std::size_t configs = samples.empty() ? 0 : samples.front().configs.size();
    out << "n,z";
    for (std::size_t h = 1; h <= configs; ++h) out << fmt::format(",b_h{0},d_h{0},c_h{0}", h);
    out << '\n';
    for (const auto& s : samples) {
        out << s.index << ',' << type_labels.at(s.type);
        for (const auto& m : s.configs)
            out << fmt::format(",{},{},{}", m.bits, m.distortion,
                               std::max<long long>(1, std::llround(m.cycles)));
        out << '\n';
    }
}

SyntheticParams empirical_params(const std::vector<TraceSample>& samples, std::size_t num_types,
                                 std::size_t num_configs) {
    std::vector<std::vector<double>> bits(num_types * num_configs), dist(num_types * num_configs),
        cyc(num_types * num_configs);
    for (const auto& s : samples) {
        if (s.configs.size() != num_configs) throw TraceError("sample has the wrong number of configurations");
        for (std::size_t h = 0; h < num_configs; ++h) {
            const std::size_t i = s.type * num_configs + h;
            bits[i].push_back(s.configs[h].bits);
            dist[i].push_back(s.configs[h].distortion);
            cyc[i].push_back(s.configs[h].cycles);
        }
    }
    SyntheticParams p;
    p.num_types = num_types;
    p.num_configs = num_configs;
    for (std::size_t i = 0; i < num_types * num_configs; ++i) {
        if (cyc[i].empty())
            throw CoverageError(fmt::format("trace has no samples for type {} config h{}",
                                            i / num_configs, i % num_configs + 1));
        p.cells.push_back({Distribution::empirical(std::move(bits[i])),
                           Distribution::empirical(std::move(dist[i])),
                           Distribution::empirical(std::move(cyc[i]))});
    }
    return p;
}

}  // namespace dmsrl
