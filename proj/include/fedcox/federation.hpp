#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fedcox/feature_cluster.hpp"
#include "fedcox/survival.hpp"

namespace fedcox {

struct Center {
    std::string id;
    SurvivalDataset dataset;
    // Held-out cohort for C-index evaluation; the training data is used when absent.
    std::optional<SurvivalDataset> evaluation;
    // The center's own fit. Cleared whenever the dataset changes.
    std::optional<CoxModel> local_model;
    // No events or a non-convergent fit: the center acts with beta = 0.
    bool degenerate = false;
    // Coefficients currently deployed at the center (local or federated).
    Coefficients model;
    std::optional<double> last_cindex;

    double weight() const { return static_cast<double>(dataset.rows()); }
    const SurvivalDataset& evaluation_data() const { return evaluation ? *evaluation : dataset; }
    std::set<std::string> feature_set() const;
};

struct FederationOptions {
    FitOptions fit;
    KMeansOptions kmeans;
};

struct Contribution {
    const Coefficients* beta;
    double weight;
};

/// r-weighted mean of `feature` over the contributors that carry it, or
/// nullopt when none does. Throws InputError on a nonpositive weight.
std::optional<double> weighted_average(std::span<const Contribution> contributions,
                                       const std::string& feature);

// Component-wise weighted average of every feature carried by any contributor.
Coefficients componentwise_average(std::span<const Contribution> contributions);

struct AggregationResult {
    std::map<int, Coefficients> per_cluster_beta;
    std::optional<ClusterAssignment> cluster_assignment;
    std::set<std::string> common_features;
    // alg1 ran with an empty common feature set.
    bool empty_common_features = false;
};

struct CenterOutcome {
    std::string id;
    double cindex_before = 0.5;
    double cindex_after = 0.5;
    bool participated = true;
};

struct PhaseTimes {
    double local_fit = 0.0;
    double clustering = 0.0;
    double aggregation = 0.0;
    double evaluation = 0.0;

    double total() const { return local_fit + clustering + aggregation + evaluation; }
};

struct RoundReport {
    int round = 0;
    std::vector<CenterOutcome> per_center;
    AggregationResult aggregation;
    PhaseTimes wall_time;
    // Parameter uploads that reached the server this round.
    int uploads = 0;
    // IFCA only: assignment rounds executed.
    int assignment_rounds = 0;

    int improved_count() const;
};

/// Fits every center lacking a local model. Zero-event or non-convergent
/// centers are marked degenerate and carry beta = 0 on their features.
void fit_local_models(std::span<Center> centers, const FitOptions& options);

// C-index of `beta` on the center's evaluation data.
double center_cindex(const Center& center, const Coefficients& beta);

/// Naive common-feature averaging: every center fits locally, the
/// coefficients of the features shared by all centers are replaced by their
/// r-weighted mean, and the rest stay local.
RoundReport run_alg1(std::span<Center> centers, const FederationOptions& options = {});

/// Feature-presence clustering: centers are grouped by Hamming k-means on
/// their presence vectors and each cluster deploys the component-wise
/// weighted average of its members' coefficients.
RoundReport run_alg2(std::span<Center> centers, int c, std::uint64_t seed,
                     const FederationOptions& options = {});

/**
 * Loss-based iterative clustering baseline. Keeps c candidate coefficient
 * maps seeded from c distinct centers' local fits; each round every center
 * joins the candidate with the lowest local loss (missing features read as
 * 0) and candidates are re-aggregated over their members. Stops once the
 * assignment repeats, so at least two assignment rounds always run.
 */
RoundReport run_ifca(std::span<Center> centers, int c, int max_rounds, std::uint64_t seed,
                     const FederationOptions& options = {});

bool participation_decision(double ci_current, double ci_previous, double epsilon);

enum class Aggregator { Alg1, Alg2 };

struct EventReportingConfig {
    double epsilon = 1e-5;
    int rounds = 5;
    Aggregator aggregator = Aggregator::Alg2;
    int clusters = 2;

    void validate() const;
    bool operator==(const EventReportingConfig&) const = default;
};

// Mutates the centers' datasets before round `round` (>= 1).
using PerturbationHook = std::function<void(std::span<Center>, int round)>;

/**
 * Event-based reporting. Round 0 is a full round. In later rounds datasets
 * are perturbed, centers refit, and only those whose C-index rose by at
 * least epsilon upload; everyone still receives the broadcast coefficients.
 */
std::vector<RoundReport> run_event_based(std::span<Center> centers,
                                         const EventReportingConfig& config,
                                         const PerturbationHook& perturb, std::uint64_t seed,
                                         const FederationOptions& options = {});

struct GradientModeOptions {
    double eta = 0.0;
    int iterations = 200;
    double ridge_lambda = 1.0;
    // Starting point; zero when absent.
    std::optional<Eigen::VectorXd> start;
};

struct GradientModeResult {
    std::vector<std::string> features;
    Eigen::VectorXd beta_star;
    std::vector<Eigen::VectorXd> iterates;
    // |beta^(t) - beta*| for t = 0..iterations.
    std::vector<double> distances;
    // Smallest pooled-Hessian eigenvalue at beta*.
    double mu_at_optimum = 0.0;
    // Extreme pooled-Hessian eigenvalues over beta* and every iterate.
    double mu = 0.0;
    double lipschitz = 0.0;
    bool in_guarantee_region = false;

    // 1 - eta mu (1 - eta L^2 / mu)
    double contraction_factor(double eta) const;
    // Squared-distance bound at iteration t.
    double bound(double eta, int t) const;
};

// Pooled objective sum_k r_k L_k(beta) / sum_k r_k over centers sharing `features`.
LossEvaluation pooled_loss(std::span<const Center> centers, const std::vector<std::string>& features,
                           const Eigen::VectorXd& beta, double ridge_lambda, Derivatives order);

// Minimizer of the pooled objective, refined to working precision.
Eigen::VectorXd pooled_optimum(std::span<const Center> centers,
                               const std::vector<std::string>& features, double ridge_lambda);

// (min, max) eigenvalue of the pooled Hessian over the given points.
std::pair<double, double> curvature_range(std::span<const Center> centers,
                                          const std::vector<std::string>& features,
                                          const std::vector<Eigen::VectorXd>& points,
                                          double ridge_lambda);

/// Synchronized gradient rounds: each center steps along its own gradient from
/// the shared iterate and the server takes the r-weighted mean.
GradientModeResult run_gradient_mode(std::span<const Center> centers,
                                     const GradientModeOptions& options);

}  // namespace fedcox
