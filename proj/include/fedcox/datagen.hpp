#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fedcox/random.hpp"
#include "fedcox/survival.hpp"

namespace fedcox {

enum class CensoringLaw {
    // U(0, ln2 / (lambda0 exp(beta'x_i))): each subject's own median event time.
    Individual,
    // U(0, ln2 / lambda0): the beta = 0 median for everyone.
    Population,
};

struct SimulationConfig {
    int n_centers = 50;
    int rows_min = 900;
    int rows_max = 1100;
    int p_total = 100;
    int n_common = 11;
    // Chance that each non-common feature is present at a center.
    double presence_probability = 0.5;
    // Empty means draw N(0, 1) per feature from `seed`.
    Coefficients true_beta;
    double baseline_lambda = 1.0;
    CensoringLaw censoring = CensoringLaw::Individual;
    // Held-out evaluation rows per center, as a fraction of r_k.
    double holdout_fraction = 0.25;
    std::uint64_t seed = 0;

    void validate() const;
    // "x001" ... in registry order; the first n_common are shared by all centers.
    std::vector<std::string> feature_names() const;
    Coefficients resolved_true_beta() const;
    bool operator==(const SimulationConfig&) const = default;
};

enum class PerturbationGroup { None, Small, Medium, Large };
enum class PerturbationMode { Add, Remove };

struct PerturbationSchedule {
    PerturbationGroup group = PerturbationGroup::None;
    PerturbationMode mode = PerturbationMode::Add;

    // Exclusive upper bound on rows changed per round (0 for None).
    int upper_bound() const;
};

std::string to_string(PerturbationGroup group);
PerturbationGroup parse_perturbation_group(const std::string& text);

// Draws `n` subjects over `features` from the simulation law.
SurvivalDataset generate_rows(const SimulationConfig& config, const Coefficients& true_beta,
                              const std::vector<std::string>& features, int n,
                              std::mt19937_64& rng);

std::vector<std::string> center_features(const SimulationConfig& config, int center_index);

SurvivalDataset generate_center(const SimulationConfig& config, int center_index);

// Evaluation cohort drawn from the same center law on a separate stream.
SurvivalDataset generate_center_holdout(const SimulationConfig& config, int center_index,
                                        const std::vector<std::string>& features, int train_rows);

struct PerturbationOutcome {
    SurvivalDataset data;
    int requested = 0;
    int applied = 0;
    bool clipped = false;
};

/// Adds freshly generated rows or removes random rows, with the count drawn
/// uniformly from [1, bound). Removal keeps at least 10 rows.
PerturbationOutcome perturb_dataset(const SurvivalDataset& data,
                                    const PerturbationSchedule& schedule,
                                    const SimulationConfig& config, int center_index, int round);

struct PlantedScenario {
    std::vector<SurvivalDataset> datasets;
    std::vector<SurvivalDataset> holdouts;
    std::vector<int> groups;
    // Feature set of each group.
    std::vector<std::vector<std::string>> group_features;
};

/**
 * Centers split into c contiguous groups. Group g holds the common features
 * plus the g-th disjoint block of the remaining ones; with `distinct_beta`
 * each group g > 0 also redraws the true coefficients on the common features.
 */
PlantedScenario generate_planted_clusters(const SimulationConfig& config, int c,
                                          std::uint64_t seed, bool distinct_beta = true);

}  // namespace fedcox
