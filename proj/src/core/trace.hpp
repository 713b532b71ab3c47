#pragma once

// Per-data-unit encoder measurements: CSV replay of recorded traces and
// synthetic stationary / piecewise-stationary generators.

#include "mdp.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace dmsrl {

struct Measurement {
    double bits = 0.0;        // bits per data unit
    double distortion = 0.0;  // MSE
    double cycles = 0.0;      // encoding complexity
};

struct TraceSample {
    std::size_t index = 0;
    std::size_t type = 0;
    std::vector<Measurement> configs;  // one entry per encoder configuration
};

/// Scalar distribution used by the synthetic generators.
class Distribution {
public:
    enum class Family { point, normal, lognormal, empirical };

    static Distribution point(double value);
    /// Normal(mean, sd) clipped at zero.
    static Distribution normal(double mean, double sd);
    /// exp(Normal(mu, sigma)).
    static Distribution lognormal(double mu, double sigma);
    /// Lognormal with the given mean and coefficient of variation.
    static Distribution lognormal_from_mean(double mean, double cv);
    /// Uniform resampling of the given observations.
    static Distribution empirical(std::vector<double> values);

    /// Parses "point(x)", "normal(m,sd)", "lognormal(mu,sigma)", "lognormal_mean(mean,cv)"
    /// or "empirical(x1,x2,...)".
    static Distribution parse(const std::string& text);
    std::string to_string() const;

    double draw(Rng& rng) const;
    double mean() const;
    double min_support() const;
    Family family() const { return family_; }

    /// Same family with the support scaled by `factor` > 0.
    Distribution scaled(double factor) const;

private:
    Family family_ = Family::point;
    double a_ = 0.0;
    double b_ = 0.0;
    std::vector<double> values_;
};

struct CellParams {
    Distribution bits;
    Distribution distortion;
    Distribution cycles;
};

/// Generator parameters indexed by (type, config).
struct SyntheticParams {
    std::size_t num_types = 0;
    std::size_t num_configs = 0;
    std::vector<CellParams> cells;  // type * num_configs + config

    CellParams& cell(std::size_t type, std::size_t config) { return cells[type * num_configs + config]; }
    const CellParams& cell(std::size_t type, std::size_t config) const {
        return cells[type * num_configs + config];
    }

    /// Throws ConfigError for missing cells or supports violating b,d >= 0, c > 0.
    void validate() const;

    SyntheticParams scaled(double cycles_factor, double bits_factor, double distortion_factor) const;

    /// Defaults for types {P, B, I} and three configurations ordered from the
    /// most complex / highest quality (h1) to the cheapest (h3).
    static SyntheticParams defaults_pbi();
};

/// Sample stream consumed one data unit per slot.
class TraceStream {
public:
    virtual ~TraceStream() = default;

    /// Next data unit. Synthetic streams produce a sample of `type`; replay
    /// streams return the recorded sample and ignore the argument.
    virtual const TraceSample& next(std::size_t type) = 0;

    /// True when the stream decides data-unit types itself (CSV replay).
    virtual bool dictates_types() const { return false; }
    /// Type of the sample the next call to next() returns (replay streams only).
    virtual std::size_t peek_type() const { return 0; }
};

class StationaryStream final : public TraceStream {
public:
    StationaryStream(SyntheticParams params, std::uint64_t seed);
    const TraceSample& next(std::size_t type) override;

private:
    SyntheticParams params_;
    Rng rng_;
    TraceSample sample_;
};

struct Segment {
    std::size_t duration = 0;
    SyntheticParams params;
};

/// Piecewise-stationary stream; parameters switch at segment boundaries and
/// the segment list repeats after the last one.
class NonstationaryStream final : public TraceStream {
public:
    NonstationaryStream(std::vector<Segment> segments, std::uint64_t seed);
    const TraceSample& next(std::size_t type) override;
    std::size_t segment_at(std::size_t index) const;

private:
    std::vector<Segment> segments_;
    std::size_t period_ = 0;
    Rng rng_;
    TraceSample sample_;
};

/// Replays a recorded trace in order, looping to the start when exhausted.
class ReplayStream final : public TraceStream {
public:
    explicit ReplayStream(std::shared_ptr<const std::vector<TraceSample>> samples);
    const TraceSample& next(std::size_t type) override;
    bool dictates_types() const override { return true; }
    std::size_t peek_type() const override;

private:
    std::shared_ptr<const std::vector<TraceSample>> samples_;
    std::size_t cursor_ = 0;
    TraceSample sample_;
};

/// Draws one sample of `type` from `params` into `out`.
void draw_sample(const SyntheticParams& params, std::size_t type, Rng& rng, TraceSample& out);

/// Generates `count` stationary samples with types supplied by `types`.
std::vector<TraceSample> synth_stationary(const SyntheticParams& params,
                                          const std::vector<std::size_t>& types, std::uint64_t seed);

/// Generates a piecewise-stationary sequence following `types`.
std::vector<TraceSample> synth_nonstationary(const std::vector<Segment>& segments,
                                             const std::vector<std::size_t>& types,
                                             std::uint64_t seed);

/// Reads a trace CSV with header `n,z,b_h1,d_h1,c_h1,...`. `type_labels`
/// maps the z column onto type indices.
std::vector<TraceSample> load_csv(const std::filesystem::path& path,
                                  const std::vector<std::string>& type_labels);
std::vector<TraceSample> parse_csv(const std::string& text, const std::vector<std::string>& type_labels);

void write_csv(const std::filesystem::path& path, const std::vector<TraceSample>& samples,
               const std::vector<std::string>& type_labels);

/// Per-(type, config) empirical distributions from recorded samples, for
/// resampling a stationary stream out of a measured trace.
SyntheticParams empirical_params(const std::vector<TraceSample>& samples, std::size_t num_types,
                                 std::size_t num_configs);

}  // namespace dmsrl
