#include "fedcox/federation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/random/uniform_int_distribution.hpp>

#include "fedcox/random.hpp"

namespace fedcox {

namespace {

constexpr std::uint32_t kIfcaStream = 101;

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

const Coefficients& local_coefficients(const Center& center) {
    return center.local_model->coefficients;
}

void require_centers(std::span<Center> centers) {
    if (centers.empty()) throw InputError("federation needs at least one center");
}

void require_cluster_count(std::span<Center> centers, int c) {
    if (c < 1 || static_cast<std::size_t>(c) > centers.size()) {
        throw InputError("cluster count must be in [1, " + std::to_string(centers.size()) + "]");
    }
}

// Local coefficients with every feature present in `global` overwritten.
Coefficients deploy(const Center& center, const Coefficients& global) {
    Coefficients model = local_coefficients(center);
    for (auto& [feature, value] : model) {
        auto it = global.find(feature);
        if (it != global.end()) value = it->second;
    }
    return model;
}

std::vector<Contribution> contributions_of(std::span<Center> centers,
                                           const std::vector<std::size_t>& members) {
    std::vector<Contribution> out;
    out.reserve(members.size());
    for (std::size_t k : members) {
        out.push_back({&local_coefficients(centers[k]), centers[k].weight()});
    }
    return out;
}

std::vector<CenterOutcome> outcomes_before(std::span<Center> centers) {
    std::vector<CenterOutcome> out;
    out.reserve(centers.size());
    for (const auto& center : centers) {
        out.push_back({center.id, center_cindex(center, local_coefficients(center)), 0.5, true});
    }
    return out;
}

void evaluate_after(std::span<Center> centers, RoundReport& report) {
    Stopwatch watch;
    for (std::size_t k = 0; k < centers.size(); ++k) {
        const double ci = center_cindex(centers[k], centers[k].model);
        report.per_center[k].cindex_after = ci;
        centers[k].last_cindex = ci;
    }
    report.wall_time.evaluation += watch.seconds();
}

std::vector<FeaturePresenceVector> presence_vectors(std::span<Center> centers) {
    std::vector<std::vector<std::string>> lists;
    for (const auto& center : centers) lists.push_back(center.dataset.feature_names);
    const FeatureRegistry registry = FeatureRegistry::from_feature_lists(lists);
    std::vector<FeaturePresenceVector> vectors;
    for (const auto& center : centers) {
        vectors.push_back(build_presence_vector(center.feature_set(), registry, center.id));
    }
    return vectors;
}

std::set<std::string> common_features(std::span<Center> centers) {
    std::set<std::string> common = centers.front().feature_set();
    for (const auto& center : centers.subspan(1)) {
        std::set<std::string> next;
        const auto features = center.feature_set();
        std::set_intersection(common.begin(), common.end(), features.begin(), features.end(),
                              std::inserter(next, next.begin()));
        common = std::move(next);
    }
    return common;
}

std::vector<std::vector<std::size_t>> members_by_cluster(const std::vector<int>& labels, int c) {
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(c));
    for (std::size_t k = 0; k < labels.size(); ++k) {
        members[static_cast<std::size_t>(labels[k])].push_back(k);
    }
    return members;
}

}  // namespace

std::set<std::string> Center::feature_set() const {
    return {dataset.feature_names.begin(), dataset.feature_names.end()};
}

std::optional<double> weighted_average(std::span<const Contribution> contributions,
                                       const std::string& feature) {
    double total = 0.0;
    for (const auto& c : contributions) {
        if (!(c.weight > 0.0)) throw InputError("contribution weights must be positive");
        if (c.beta->count(feature)) total += c.weight;
    }
    if (total == 0.0) return std::nullopt;
    // Normalizing first keeps a lone contributor's value exact.
    double mean = 0.0;
    for (const auto& c : contributions) {
        auto it = c.beta->find(feature);
        if (it != c.beta->end()) mean += (c.weight / total) * it->second;
    }
    return mean;
}

Coefficients componentwise_average(std::span<const Contribution> contributions) {
    std::set<std::string> features;
    for (const auto& c : contributions) {
        for (const auto& entry : *c.beta) features.insert(entry.first);
    }
    Coefficients out;
    for (const auto& feature : features) out[feature] = *weighted_average(contributions, feature);
    return out;
}

int RoundReport::improved_count() const {
    return static_cast<int>(std::count_if(per_center.begin(), per_center.end(), [](const auto& o) {
        return o.cindex_after > o.cindex_before;
    }));
}

void fit_local_models(std::span<Center> centers, const FitOptions& options) {
    for (auto& center : centers) {
        if (center.local_model) continue;
        center.dataset.validate();
        CoxModel model;
        bool degenerate = false;
        try {
            model = fit_cox(center.dataset, options);
            degenerate = !model.converged || !std::all_of(
                model.coefficients.begin(), model.coefficients.end(),
                [](const auto& entry) { return std::isfinite(entry.second); });
        } catch (const DegenerateFit&) {
            degenerate = true;
        }
        if (degenerate) {
            model.coefficients.clear();
            for (const auto& name : center.dataset.feature_names) model.coefficients[name] = 0.0;
            model.baseline = breslow_baseline(center.dataset,
                                              Eigen::VectorXd::Zero(center.dataset.features()));
        }
        center.degenerate = degenerate;
        center.model = model.coefficients;
        center.local_model = std::move(model);
    }
}

double center_cindex(const Center& center, const Coefficients& beta) {
    const SurvivalDataset& data = center.evaluation_data();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(data.features());
    for (Eigen::Index j = 0; j < data.features(); ++j) {
        auto it = beta.find(data.feature_names[static_cast<std::size_t>(j)]);
        if (it != beta.end()) b[j] = it->second;
    }
    return concordance_index(data, b);
}

RoundReport run_alg1(std::span<Center> centers, const FederationOptions& options) {
    require_centers(centers);
    RoundReport report;
    {
        Stopwatch watch;
        fit_local_models(centers, options.fit);
        report.wall_time.local_fit = watch.seconds();
    }
    {
        Stopwatch watch;
        report.per_center = outcomes_before(centers);
        report.wall_time.evaluation = watch.seconds();
    }

    Stopwatch watch;
    AggregationResult& agg = report.aggregation;
    agg.common_features = common_features(centers);
    agg.empty_common_features = agg.common_features.empty();

    std::vector<std::size_t> everyone(centers.size());
    std::iota(everyone.begin(), everyone.end(), std::size_t{0});
    const auto contributions = contributions_of(centers, everyone);
    Coefficients global;
    for (const auto& feature : agg.common_features) {
        global[feature] = *weighted_average(contributions, feature);
    }
    agg.per_cluster_beta[0] = global;
    for (auto& center : centers) center.model = deploy(center, global);
    report.uploads = static_cast<int>(centers.size());
    report.wall_time.aggregation = watch.seconds();

    evaluate_after(centers, report);
    return report;
}

RoundReport run_alg2(std::span<Center> centers, int c, std::uint64_t seed,
                     const FederationOptions& options) {
    require_centers(centers);
    require_cluster_count(centers, c);
    RoundReport report;
    {
        Stopwatch watch;
        fit_local_models(centers, options.fit);
        report.wall_time.local_fit = watch.seconds();
    }
    {
        Stopwatch watch;
        report.per_center = outcomes_before(centers);
        report.wall_time.evaluation = watch.seconds();
    }
    {
        Stopwatch watch;
        report.aggregation.cluster_assignment =
            hamming_kmeans(presence_vectors(centers), c, seed, options.kmeans);
        report.wall_time.clustering = watch.seconds();
    }

    Stopwatch watch;
    const auto members = members_by_cluster(report.aggregation.cluster_assignment->labels, c);
    for (int i = 0; i < c; ++i) {
        const auto& cluster = members[static_cast<std::size_t>(i)];
        const auto contributions = contributions_of(centers, cluster);
        const Coefficients global = componentwise_average(contributions);
        for (std::size_t k : cluster) centers[k].model = deploy(centers[k], global);
        report.aggregation.per_cluster_beta[i] = global;
    }
    report.uploads = static_cast<int>(centers.size());
    report.wall_time.aggregation = watch.seconds();

    evaluate_after(centers, report);
    return report;
}

RoundReport run_ifca(std::span<Center> centers, int c, int max_rounds, std::uint64_t seed,
                     const FederationOptions& options) {
    require_centers(centers);
    require_cluster_count(centers, c);
    if (max_rounds < 1) throw InputError("IFCA needs at least one round");
    RoundReport report;
    {
        Stopwatch watch;
        fit_local_models(centers, options.fit);
        report.wall_time.local_fit = watch.seconds();
    }
    {
        Stopwatch watch;
        report.per_center = outcomes_before(centers);
        report.wall_time.evaluation = watch.seconds();
    }

    Stopwatch clustering_watch;
    double aggregation_seconds = 0.0;
    auto rng = substream(seed, kIfcaStream);
    std::vector<std::size_t> pick(centers.size());
    std::iota(pick.begin(), pick.end(), std::size_t{0});
    std::vector<Coefficients> candidates;
    for (std::size_t j = 0; j < static_cast<std::size_t>(c); ++j) {
        boost::random::uniform_int_distribution<std::size_t> draw(j, pick.size() - 1);
        std::swap(pick[j], pick[draw(rng)]);
        candidates.push_back(local_coefficients(centers[pick[j]]));
    }

    std::vector<int> labels;
    for (int round = 1; round <= max_rounds; ++round) {
        std::vector<int> next(centers.size(), 0);
        for (std::size_t k = 0; k < centers.size(); ++k) {
            const SurvivalDataset& data = centers[k].dataset;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < candidates.size(); ++j) {
                Eigen::VectorXd beta = Eigen::VectorXd::Zero(data.features());
                for (Eigen::Index f = 0; f < data.features(); ++f) {
                    auto it = candidates[j].find(data.feature_names[static_cast<std::size_t>(f)]);
                    if (it != candidates[j].end()) beta[f] = it->second;
                }
                const double loss =
                    neg_log_partial_likelihood(data, beta, options.fit.ridge_lambda);
                if (loss < best) {
                    best = loss;
                    next[k] = static_cast<int>(j);
                }
            }
        }
        report.assignment_rounds = round;
        if (next == labels) break;
        labels = std::move(next);

        Stopwatch watch;
        const auto members = members_by_cluster(labels, c);
        for (int i = 0; i < c; ++i) {
            const auto& cluster = members[static_cast<std::size_t>(i)];
            if (cluster.empty()) continue;
            candidates[static_cast<std::size_t>(i)] =
                componentwise_average(contributions_of(centers, cluster));
        }
        aggregation_seconds += watch.seconds();
    }

    ClusterAssignment assignment;
    assignment.labels = labels;
    for (std::size_t k = 0; k < centers.size(); ++k) {
        assignment.assignment[centers[k].id] = labels[k];
    }
    assignment.iterations = report.assignment_rounds;
    report.aggregation.cluster_assignment = std::move(assignment);
    report.wall_time.clustering = clustering_watch.seconds() - aggregation_seconds;

    Stopwatch watch;
    for (std::size_t k = 0; k < centers.size(); ++k) {
        centers[k].model = deploy(centers[k], candidates[static_cast<std::size_t>(labels[k])]);
    }
    for (int i = 0; i < c; ++i) {
        report.aggregation.per_cluster_beta[i] = candidates[static_cast<std::size_t>(i)];
    }
    report.uploads = static_cast<int>(centers.size());
    report.wall_time.aggregation = aggregation_seconds + watch.seconds();

    evaluate_after(centers, report);
    return report;
}

bool participation_decision(double ci_current, double ci_previous, double epsilon) {
    return ci_current - ci_previous >= epsilon;
}

void EventReportingConfig::validate() const {
    if (!(epsilon >= 0.0)) throw InputError("epsilon must be >= 0");
    if (rounds < 2) throw InputError("event-based reporting needs at least 2 rounds");
    if (clusters < 1) throw InputError("cluster count must be >= 1");
}

std::vector<RoundReport> run_event_based(std::span<Center> centers,
                                         const EventReportingConfig& config,
                                         const PerturbationHook& perturb, std::uint64_t seed,
                                         const FederationOptions& options) {
    require_centers(centers);
    config.validate();
    const int c = config.aggregator == Aggregator::Alg2 ? config.clusters : 1;
    require_cluster_count(centers, c);

    std::vector<int> labels(centers.size(), 0);
    std::optional<ClusterAssignment> assignment;
    std::set<std::string> common;
    if (config.aggregator == Aggregator::Alg2) {
        assignment = hamming_kmeans(presence_vectors(centers), c, seed, options.kmeans);
        labels = assignment->labels;
    } else {
        common = common_features(centers);
    }
    const auto members = members_by_cluster(labels, c);

    std::vector<RoundReport> reports;
    std::map<int, Coefficients> broadcast;
    std::vector<double> previous_ci(centers.size(), 0.5);
    for (int round = 0; round < config.rounds; ++round) {
        RoundReport report;
        report.round = round;
        if (round > 0 && perturb) perturb(centers, round);
        {
            Stopwatch watch;
            fit_local_models(centers, options.fit);
            report.wall_time.local_fit = watch.seconds();
        }
        {
            Stopwatch watch;
            report.per_center = outcomes_before(centers);
            for (std::size_t k = 0; k < centers.size(); ++k) {
                auto& outcome = report.per_center[k];
                outcome.participated = round == 0 || participation_decision(
                                                         outcome.cindex_before, previous_ci[k],
                                                         config.epsilon);
                previous_ci[k] = outcome.cindex_before;
            }
            report.wall_time.evaluation = watch.seconds();
        }

        Stopwatch watch;
        for (int i = 0; i < c; ++i) {
            std::vector<std::size_t> uploaders;
            for (std::size_t k : members[static_cast<std::size_t>(i)]) {
                if (report.per_center[k].participated) uploaders.push_back(k);
            }
            report.uploads += static_cast<int>(uploaders.size());
            Coefficients& global = broadcast[i];
            if (!uploaders.empty()) {
                const auto contributions = contributions_of(centers, uploaders);
                if (config.aggregator == Aggregator::Alg2) {
                    for (auto& [feature, value] : componentwise_average(contributions)) {
                        global[feature] = value;
                    }
                } else {
                    for (const auto& feature : common) {
                        global[feature] = *weighted_average(contributions, feature);
                    }
                }
            }
            for (std::size_t k : members[static_cast<std::size_t>(i)]) {
                centers[k].model = deploy(centers[k], global);
            }
        }
        report.aggregation.per_cluster_beta = broadcast;
        report.aggregation.cluster_assignment = assignment;
        report.aggregation.common_features = common;
        report.aggregation.empty_common_features =
            config.aggregator == Aggregator::Alg1 && common.empty();
        report.wall_time.aggregation = watch.seconds();

        evaluate_after(centers, report);
        reports.push_back(std::move(report));
    }
    return reports;
}

namespace {

// Position in `features` of each of the center's columns.
std::vector<Eigen::Index> column_map(const Center& center,
                                     const std::vector<std::string>& features) {
    const auto& names = center.dataset.feature_names;
    if (names.size() != features.size()) {
        throw InputError("center " + center.id + " does not share the cluster feature space");
    }
    std::vector<Eigen::Index> map;
    for (const auto& name : names) {
        auto it = std::find(features.begin(), features.end(), name);
        if (it == features.end()) {
            throw InputError("center " + center.id + " does not share the cluster feature space");
        }
        map.push_back(std::distance(features.begin(), it));
    }
    return map;
}

LossEvaluation center_loss(const Center& center, const std::vector<Eigen::Index>& map,
                           const Eigen::VectorXd& beta, double ridge_lambda, Derivatives order) {
    const auto p = static_cast<Eigen::Index>(map.size());
    Eigen::VectorXd local(p);
    for (Eigen::Index j = 0; j < p; ++j) local[j] = beta[map[static_cast<std::size_t>(j)]];
    LossEvaluation ev = evaluate_loss(center.dataset, local, ridge_lambda, order);
    // Back to the shared feature order.
    LossEvaluation out;
    out.value = ev.value;
    out.no_events = ev.no_events;
    if (order != Derivatives::None) {
        out.gradient = Eigen::VectorXd::Zero(p);
        for (Eigen::Index j = 0; j < p; ++j) {
            out.gradient[map[static_cast<std::size_t>(j)]] = ev.gradient[j];
        }
    }
    if (order == Derivatives::Hessian) {
        out.hessian = Eigen::MatrixXd::Zero(p, p);
        for (Eigen::Index a = 0; a < p; ++a) {
            for (Eigen::Index b = 0; b < p; ++b) {
                out.hessian(map[static_cast<std::size_t>(a)], map[static_cast<std::size_t>(b)]) =
                    ev.hessian(a, b);
            }
        }
    }
    return out;
}

}  // namespace

LossEvaluation pooled_loss(std::span<const Center> centers, const std::vector<std::string>& features,
                           const Eigen::VectorXd& beta, double ridge_lambda, Derivatives order) {
    if (centers.empty()) throw InputError("pooled loss needs at least one center");
    const auto p = static_cast<Eigen::Index>(features.size());
    if (beta.size() != p) throw InputError("beta does not match the pooled feature space");
    LossEvaluation out;
    if (order != Derivatives::None) out.gradient = Eigen::VectorXd::Zero(p);
    if (order == Derivatives::Hessian) out.hessian = Eigen::MatrixXd::Zero(p, p);
    double total_weight = 0.0;
    for (const auto& center : centers) total_weight += center.weight();
    for (const auto& center : centers) {
        const double w = center.weight() / total_weight;
        const LossEvaluation ev =
            center_loss(center, column_map(center, features), beta, ridge_lambda, order);
        out.value += w * ev.value;
        if (order != Derivatives::None) out.gradient += w * ev.gradient;
        if (order == Derivatives::Hessian) out.hessian += w * ev.hessian;
    }
    return out;
}

Eigen::VectorXd pooled_optimum(std::span<const Center> centers,
                               const std::vector<std::string>& features, double ridge_lambda) {
    FitOptions options;
    options.max_iterations = 100;
    options.gradient_tolerance = 1e-13;
    options.step_halving_max = 60;
    const Objective objective = [&](const Eigen::VectorXd& beta, Derivatives order) {
        return pooled_loss(centers, features, beta, ridge_lambda, order);
    };
    const auto p = static_cast<Eigen::Index>(features.size());
    return newton_minimize(objective, Eigen::VectorXd::Zero(p), options).beta;
}

std::pair<double, double> curvature_range(std::span<const Center> centers,
                                          const std::vector<std::string>& features,
                                          const std::vector<Eigen::VectorXd>& points,
                                          double ridge_lambda) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& point : points) {
        const Eigen::MatrixXd h =
            pooled_loss(centers, features, point, ridge_lambda, Derivatives::Hessian).hessian;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
        lo = std::min(lo, eig.eigenvalues().minCoeff());
        hi = std::max(hi, eig.eigenvalues().maxCoeff());
    }
    return {lo, hi};
}

double GradientModeResult::contraction_factor(double eta) const {
    return 1.0 - eta * mu * (1.0 - eta * lipschitz * lipschitz / mu);
}

double GradientModeResult::bound(double eta, int t) const {
    return std::pow(contraction_factor(eta), t) * distances.front() * distances.front();
}

GradientModeResult run_gradient_mode(std::span<const Center> centers,
                                     const GradientModeOptions& options) {
    if (centers.empty()) throw InputError("gradient mode needs at least one center");
    if (!(options.eta > 0.0)) throw InputError("eta must be > 0");
    if (!(options.ridge_lambda > 0.0)) throw InputError("gradient mode needs ridge_lambda > 0");
    if (options.iterations < 0) throw InputError("iterations must be >= 0");

    GradientModeResult result;
    result.features = centers.front().dataset.feature_names;
    const auto p = static_cast<Eigen::Index>(result.features.size());
    std::vector<std::vector<Eigen::Index>> maps;
    for (const auto& center : centers) maps.push_back(column_map(center, result.features));

    result.beta_star = pooled_optimum(centers, result.features, options.ridge_lambda);

    Eigen::VectorXd beta = options.start ? *options.start : Eigen::VectorXd::Zero(p);
    if (beta.size() != p) throw InputError("start point does not match the feature space");
    double total_weight = 0.0;
    for (const auto& center : centers) total_weight += center.weight();

    result.iterates.push_back(beta);
    for (int t = 0; t < options.iterations; ++t) {
        Eigen::VectorXd next = Eigen::VectorXd::Zero(p);
        for (std::size_t k = 0; k < centers.size(); ++k) {
            const Eigen::VectorXd grad = center_loss(centers[k], maps[k], beta,
                                                     options.ridge_lambda, Derivatives::Gradient)
                                             .gradient;
            const Eigen::VectorXd local_step = beta - options.eta * grad;
            next += (centers[k].weight() / total_weight) * local_step;
        }
        beta = std::move(next);
        result.iterates.push_back(beta);
    }
    for (const auto& iterate : result.iterates) {
        result.distances.push_back((iterate - result.beta_star).norm());
    }

    std::vector<Eigen::VectorXd> points = result.iterates;
    points.push_back(result.beta_star);
    std::tie(result.mu, result.lipschitz) =
        curvature_range(centers, result.features, points, options.ridge_lambda);
    result.mu_at_optimum =
        curvature_range(centers, result.features, {result.beta_star}, options.ridge_lambda).first;
    result.in_guarantee_region =
        options.eta < result.mu / (result.lipschitz * result.lipschitz);
    return result;
}

}  // namespace fedcox
