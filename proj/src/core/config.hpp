#pragma once

// Experiment configuration: an INI file with sections [experiment],
// [learning], [dms], [trace], [segment.N] and [oracle]. See configs/README.md
// for the schema.

#include "dms_model.hpp"
#include "learners.hpp"
#include "mdp.hpp"
#include "trace.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dmsrl {

enum class TraceMode { stationary, nonstationary, csv };

std::string to_string(TraceMode mode);

struct TraceConfig {
    TraceMode mode = TraceMode::stationary;
    SyntheticParams params = SyntheticParams::defaults_pbi();
    std::vector<Segment> segments;  // nonstationary mode
    std::filesystem::path csv_path; // csv mode, absolute after loading
};

struct LearnerConfig {
    std::string algorithm = "centralized";
    LearningSchedule schedule;
    std::size_t psi = 0;
    double lambda = 0.8;
    GraceParams grace;
};

struct OracleConfig {
    bool enabled = true;
    std::size_t samples = 200'000;
    std::uint64_t seed = 20'240'601;
    double tol = 1e-8;
    std::size_t min_trace_length = 10'000;
};

struct ExperimentConfig {
    std::string label = "experiment";
    DmsConfig dms = DmsConfig::defaults();
    TraceConfig trace;
    LearnerConfig learner;
    std::uint64_t horizon = 192'000;
    std::vector<std::uint64_t> seeds{1};
    std::uint64_t checkpoint_interval = 500;
    bool slot_log = true;
    OracleConfig oracle;

    void validate() const;
};

/// Algorithms accepted by learner.algorithm.
const std::vector<std::string>& algorithm_names();

/// Horizon presets: short, medium, long, or a positive integer.
std::uint64_t parse_horizon(const std::string& text);

/// Parses INI text; relative paths resolve against `base_dir`. Throws
/// ConfigError naming the offending section and key. `default_label` applies
/// when [experiment] has no label (load_config uses the file stem).
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                              const std::string& default_label = "experiment");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Full-precision INI echo of every resolved setting; parse_config of the
/// echo reproduces the same configuration.
std::string resolved_ini(const ExperimentConfig& cfg);

/// The [dms], [trace] and [segment.N] portion of the echo, used to check that
/// compared experiments share one system.
std::string system_fingerprint(const ExperimentConfig& cfg);

}  // namespace dmsrl
