#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fedcox/config.hpp"
#include "fedcox/federation.hpp"

namespace fedcox {

// Simulated centers with their held-out cohorts (when holdout_fraction > 0).
std::vector<Center> simulate_centers(const SimulationConfig& config);

struct ImprovementRow {
    int repetition = 0;
    int clusters = 0;
    int alg1 = 0;
    int ifca = 0;
    int alg2 = 0;
    double t_stat = 0.0;
    double p_value = 1.0;
};

struct CenterResultRow {
    int repetition = 0;
    int clusters = 0;
    std::string algorithm;
    std::string center;
    double cindex_before = 0.5;
    double cindex_after = 0.5;
};

struct ImprovementResult {
    int n_centers = 0;
    std::vector<ImprovementRow> rows;
    std::vector<CenterResultRow> per_center;
};

/// Counts of centers whose held-out C-index improved under each algorithm,
/// for every repetition and cluster count, with a paired t-test on the
/// per-center C-index after Alg. 2 versus after Alg. 1.
ImprovementResult run_improvement_experiment(const ExperimentConfig& config);

struct EventRow {
    std::string group;
    int round = 0;
    double selection_ratio = 0.0;
    double stderr_ = 0.0;
};

struct EventResult {
    std::vector<EventRow> rows;
    // Removal requests that had to be clipped to keep 10 rows.
    int clipped_perturbations = 0;
};

EventResult run_event_experiment(const ExperimentConfig& config);

struct TimingRow {
    std::string algorithm;
    int clusters = 0;
    std::string phase;
    double seconds = 0.0;
};

struct TimingTable {
    int centers = 0;
    std::vector<TimingRow> rows;

    // Total seconds of `algorithm` at `clusters`.
    double total(const std::string& algorithm, int clusters) const;
};

/**
 * Wall-clock sweep over bench.centers and the cluster range. Local models are
 * fitted once per center count and that time is charged to every algorithm;
 * the remaining phases keep the fastest of bench.repeats runs.
 */
std::vector<TimingTable> run_bench(const ExperimentConfig& config);

struct ConvergeRow {
    int iteration = 0;
    double squared_distance = 0.0;
    double bound = 0.0;
};

struct ConvergeReport {
    GradientModeResult result;
    double eta = 0.0;
    std::vector<ConvergeRow> rows;
    // eta >= mu / L^2 for the curvature seen along the run.
    bool outside_guarantee = false;
    bool bound_holds = true;
};

// Shared-feature ridge instance from the converge.* settings.
std::vector<Center> converge_instance(const ExperimentConfig& config, std::uint64_t seed);
ConvergeReport run_converge(const ExperimentConfig& config, std::uint64_t seed);

void write_improvement_csv(std::ostream& out, const ImprovementResult& result);
void write_center_results_csv(std::ostream& out, const ImprovementResult& result);
void write_event_csv(std::ostream& out, const EventResult& result);
void write_timing_csv(std::ostream& out, const TimingTable& table);
void write_converge_csv(std::ostream& out, const ConvergeReport& report);

void print_improvement_table(std::ostream& out, const ImprovementResult& result);
void print_event_table(std::ostream& out, const EventResult& result);
void print_timing_table(std::ostream& out, const TimingTable& table);
void print_converge_summary(std::ostream& out, const ConvergeReport& report);

// center_000.csv, center_000_holdout.csv, ..., true_beta.csv under `directory`.
std::vector<std::string> write_scenario(const std::string& directory, const SimulationConfig& config);

}  // namespace fedcox
