#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fedcox/datagen.hpp"
#include "fedcox/federation.hpp"

namespace fedcox {

enum class Algorithm { Alg1, Alg2, Ifca, Event };

// Perturbation direction in the event experiment; Alternate flips add/remove per round.
enum class EventMode { Add, Remove, Alternate };

struct ClusterRange {
    int first = 2;
    int last = 9;

    std::vector<int> values() const;
    bool operator==(const ClusterRange&) const = default;
};

struct ConvergeSettings {
    int centers = 3;
    int rows_min = 150;
    int rows_max = 250;
    int features = 3;
    double ridge_lambda = 1.0;
    int iterations = 200;
    // Step size as a fraction of mu / L^2 when `eta` is 0.
    double eta_fraction = 0.5;

    bool operator==(const ConvergeSettings&) const = default;
};

struct BenchSettings {
    std::vector<int> centers{10, 25, 50};
    int repeats = 3;

    bool operator==(const BenchSettings&) const = default;
};

struct ExperimentConfig {
    Algorithm algorithm = Algorithm::Alg2;
    ClusterRange clusters;
    double epsilon = 1e-5;
    // 0 picks eta from the probed curvature.
    double eta = 0.0;
    int rounds = 5;
    int repetitions = 1;
    std::uint64_t seed = 0;
    std::string output_path = "results";
    // simulation.seed is not read from the file; each repetition uses seed + repetition.
    SimulationConfig simulation;
    FitOptions fit;
    KMeansOptions kmeans;
    int ifca_max_rounds = 20;
    std::vector<PerturbationGroup> event_groups{PerturbationGroup::None, PerturbationGroup::Small,
                                                PerturbationGroup::Medium,
                                                PerturbationGroup::Large};
    EventMode event_mode = EventMode::Add;
    Aggregator event_aggregator = Aggregator::Alg2;
    ConvergeSettings converge;
    BenchSettings bench;

    void validate() const;
    FederationOptions federation_options() const;
    bool operator==(const ExperimentConfig&) const = default;
};

/// Parses flat `key = value` text. Blank lines and `#` comments are skipped;
/// unknown keys, duplicates and malformed values raise InputError naming the line.
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

// Every key in a fixed order; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

std::string to_string(Algorithm algorithm);
std::string to_string(EventMode mode);
std::string to_string(Aggregator aggregator);

}  // namespace fedcox
