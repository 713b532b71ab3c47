#pragma once

// Seeded batch runs, oracle computation and artifact writing.

#include "config.hpp"
#include "environment.hpp"
#include "learners.hpp"
#include "metrics.hpp"
#include "model_assembly.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

namespace dmsrl {

/// Model plus anything loaded once and shared read-only by every run.
struct PreparedSystem {
    std::shared_ptr<const DmsModel> model;
    std::shared_ptr<const std::vector<TraceSample>> recorded;  // csv mode
};

/// In csv mode the type chain of the model is estimated from the file.
PreparedSystem prepare_system(const ExperimentConfig& cfg);

struct OracleSolution {
    ArrivalStatistics stats;
    ValueIterationResult vi;
    StationaryResult stationary;
};

/// Trace sample the oracle estimates its distributions from.
std::vector<TraceSample> oracle_samples(const ExperimentConfig& cfg, const PreparedSystem& sys);
OracleSolution solve_oracle(const ExperimentConfig& cfg, const PreparedSystem& sys);

struct RunSeeds {
    std::uint64_t trace, environment, learner;
};
RunSeeds derive_seeds(std::uint64_t run_seed);

std::unique_ptr<TraceStream> make_stream(const ExperimentConfig& cfg, const PreparedSystem& sys, std::uint64_t seed);
std::unique_ptr<Learner> make_learner(const ExperimentConfig& cfg, const DmsModel& model,
                                      const OracleSolution* oracle, std::uint64_t seed);

struct RunResult {
    std::uint64_t seed = 0;
    Summary summary;
    RunStats stats;
};

RunResult run_single(const ExperimentConfig& cfg, const PreparedSystem& sys, const OracleSolution* oracle,
                     std::uint64_t seed);

struct ExperimentResult {
    ExperimentConfig config;
    PreparedSystem system;
    std::optional<OracleSolution> oracle;
    std::vector<RunResult> runs;  // in config.seeds order
};

/// Runs every seed, in parallel when `threads` != 1 (0 = hardware concurrency).
ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned threads = 0);

/// summary.csv, slots_seed<S>.csv, checkpoints_seed<S>.csv, reward.svg,
/// error.svg (with an oracle) and config.resolved.ini.
void write_run_artifacts(const ExperimentResult& result, const std::filesystem::path& out);

/// Runs each configuration into out/<label>/ and writes comparison.csv with
/// overlaid reward.svg / error.svg. Throws ConfigError when the systems differ.
std::vector<ExperimentResult> compare(const std::vector<ExperimentConfig>& configs, const std::filesystem::path& out,
                                      unsigned threads = 0);

/// policy.csv (pi*, V*, mu* per state), policy_f<Hz>.csv slices and oracle.csv.
void write_oracle_artifacts(const ExperimentConfig& cfg, const PreparedSystem& sys, const OracleSolution& oracle,
                            const std::filesystem::path& out);

std::string summary_csv_header();
std::string summary_csv_row(const ExperimentConfig& cfg, const RunResult& run);

}  // namespace dmsrl
