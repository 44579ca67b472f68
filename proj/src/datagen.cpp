#include "fedcox/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace fedcox {

namespace {

enum Stream : std::uint32_t {
    kTrueBeta = 1,
    kFeatureSet = 2,
    kRows = 3,
    kHoldout = 4,
    kPerturb = 5,
    kPlantedBeta = 6,
};

}  // namespace

void SimulationConfig::validate() const {
    if (n_centers < 1) throw InputError("simulation.n_centers must be >= 1");
    if (rows_min < 1 || rows_min > rows_max) {
        throw InputError("simulation rows_min/rows_max must satisfy 1 <= rows_min <= rows_max");
    }
    if (p_total < 1) throw InputError("simulation.p_total must be >= 1");
    if (n_common < 0 || n_common > p_total) {
        throw InputError("simulation.n_common must be in [0, p_total]");
    }
    if (!(presence_probability >= 0.0 && presence_probability <= 1.0)) {
        throw InputError("simulation.presence_probability must be in [0, 1]");
    }
    if (!(baseline_lambda > 0.0)) throw InputError("simulation.baseline_lambda must be > 0");
    if (!(holdout_fraction >= 0.0)) throw InputError("simulation.holdout_fraction must be >= 0");
}

std::vector<std::string> SimulationConfig::feature_names() const {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(p_total));
    for (int i = 1; i <= p_total; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "x%03d", i);
        names.emplace_back(buf);
    }
    return names;
}

Coefficients SimulationConfig::resolved_true_beta() const {
    if (!true_beta.empty()) return true_beta;
    Coefficients beta;
    auto rng = substream(seed, kTrueBeta);
    boost::random::normal_distribution<double> normal(0.0, 1.0);
    for (const auto& name : feature_names()) beta[name] = normal(rng);
    return beta;
}

int PerturbationSchedule::upper_bound() const {
    switch (group) {
        case PerturbationGroup::None: return 0;
        case PerturbationGroup::Small: return 50;
        case PerturbationGroup::Medium: return 100;
        case PerturbationGroup::Large: return 200;
    }
    return 0;
}

std::string to_string(PerturbationGroup group) {
    switch (group) {
        case PerturbationGroup::None: return "none";
        case PerturbationGroup::Small: return "small";
        case PerturbationGroup::Medium: return "medium";
        case PerturbationGroup::Large: return "large";
    }
    return "none";
}

PerturbationGroup parse_perturbation_group(const std::string& text) {
    if (text == "none") return PerturbationGroup::None;
    if (text == "small") return PerturbationGroup::Small;
    if (text == "medium") return PerturbationGroup::Medium;
    if (text == "large") return PerturbationGroup::Large;
    throw InputError("unknown perturbation group: " + text);
}

SurvivalDataset generate_rows(const SimulationConfig& config, const Coefficients& true_beta,
                              const std::vector<std::string>& features, int n,
                              std::mt19937_64& rng) {
    const auto p = static_cast<Eigen::Index>(features.size());
    SurvivalDataset data;
    data.feature_names = features;
    data.covariates.resize(n, p);
    data.time.resize(n);
    data.event.assign(static_cast<std::size_t>(n), 0);

    Eigen::VectorXd beta(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        auto it = true_beta.find(features[static_cast<std::size_t>(j)]);
        beta[j] = it == true_beta.end() ? 0.0 : it->second;
    }

    // Variance 1/p_total per coordinate regardless of how many are present.
    boost::random::normal_distribution<double> covariate(0.0,
                                                         1.0 / std::sqrt(double(config.p_total)));
    boost::random::uniform_01<double> uniform;
    const double lambda0 = config.baseline_lambda;
    for (int i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) data.covariates(i, j) = covariate(rng);
        const double rate = lambda0 * std::exp(data.covariates.row(i).dot(beta));
        const double event_time = -std::log1p(-uniform(rng)) / rate;
        const double median = config.censoring == CensoringLaw::Individual
                                  ? std::log(2.0) / rate
                                  : std::log(2.0) / lambda0;
        const double censor_time = uniform(rng) * median;
        data.time[i] = std::min(event_time, censor_time);
        data.event[static_cast<std::size_t>(i)] = event_time <= censor_time ? 1 : 0;
    }
    return data;
}

std::vector<std::string> center_features(const SimulationConfig& config, int center_index) {
    const auto names = config.feature_names();
    auto rng = substream(config.seed, kFeatureSet, static_cast<std::uint64_t>(center_index));
    boost::random::bernoulli_distribution<double> present(config.presence_probability);
    std::vector<std::string> features(names.begin(), names.begin() + config.n_common);
    for (std::size_t j = static_cast<std::size_t>(config.n_common); j < names.size(); ++j) {
        if (present(rng)) features.push_back(names[j]);
    }
    return features;
}

SurvivalDataset generate_center(const SimulationConfig& config, int center_index) {
    config.validate();
    auto rng = substream(config.seed, kRows, static_cast<std::uint64_t>(center_index));
    boost::random::uniform_int_distribution<int> rows(config.rows_min, config.rows_max);
    const int n = rows(rng);
    return generate_rows(config, config.resolved_true_beta(), center_features(config, center_index),
                         n, rng);
}

SurvivalDataset generate_center_holdout(const SimulationConfig& config, int center_index,
                                        const std::vector<std::string>& features, int train_rows) {
    auto rng = substream(config.seed, kHoldout, static_cast<std::uint64_t>(center_index));
    const int n = std::max(1, static_cast<int>(std::ceil(config.holdout_fraction * train_rows)));
    return generate_rows(config, config.resolved_true_beta(), features, n, rng);
}

PerturbationOutcome perturb_dataset(const SurvivalDataset& data,
                                    const PerturbationSchedule& schedule,
                                    const SimulationConfig& config, int center_index, int round) {
    PerturbationOutcome out{data, 0, 0, false};
    if (schedule.group == PerturbationGroup::None) return out;

    auto rng = substream(config.seed, kPerturb, static_cast<std::uint64_t>(center_index),
                         static_cast<std::uint64_t>(round));
    boost::random::uniform_int_distribution<int> count(1, schedule.upper_bound() - 1);
    out.requested = count(rng);

    if (schedule.mode == PerturbationMode::Add) {
        SurvivalDataset extra = generate_rows(config, config.resolved_true_beta(),
                                              data.feature_names, out.requested, rng);
        const Eigen::Index n = data.rows();
        const Eigen::Index total = n + extra.rows();
        out.data.covariates.resize(total, data.features());
        out.data.covariates << data.covariates, extra.covariates;
        out.data.time.resize(total);
        out.data.time << data.time, extra.time;
        out.data.event.insert(out.data.event.end(), extra.event.begin(), extra.event.end());
        out.applied = out.requested;
        return out;
    }

    constexpr int kMinRows = 10;
    const int n = static_cast<int>(data.rows());
    const int removable = std::max(0, n - kMinRows);
    out.applied = std::min(out.requested, removable);
    out.clipped = out.applied < out.requested;

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    for (int j = 0; j < out.applied; ++j) {
        boost::random::uniform_int_distribution<int> draw(j, n - 1);
        std::swap(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(draw(rng))]);
    }
    std::vector<int> keep(order.begin() + out.applied, order.end());
    std::sort(keep.begin(), keep.end());

    const auto kept = static_cast<Eigen::Index>(keep.size());
    out.data.covariates.resize(kept, data.features());
    out.data.time.resize(kept);
    out.data.event.resize(keep.size());
    for (Eigen::Index r = 0; r < kept; ++r) {
        const int src = keep[static_cast<std::size_t>(r)];
        out.data.covariates.row(r) = data.covariates.row(src);
        out.data.time[r] = data.time[src];
        out.data.event[static_cast<std::size_t>(r)] = data.event[static_cast<std::size_t>(src)];
    }
    return out;
}

PlantedScenario generate_planted_clusters(const SimulationConfig& config, int c,
                                          std::uint64_t seed, bool distinct_beta) {
    config.validate();
    if (c < 1) throw InputError("planted cluster count must be >= 1");
    if (c > config.n_centers) throw InputError("more planted clusters than centers");
    if (c > config.p_total - config.n_common && c > 1) {
        throw InputError("not enough non-common features for disjoint planted blocks");
    }

    SimulationConfig local = config;
    local.seed = seed;
    const auto names = local.feature_names();
    const Coefficients base_beta = local.resolved_true_beta();

    PlantedScenario out;
    const std::size_t rest = names.size() - static_cast<std::size_t>(local.n_common);
    const std::size_t block = rest / static_cast<std::size_t>(c);
    std::vector<Coefficients> group_beta;
    for (int g = 0; g < c; ++g) {
        std::vector<std::string> features(names.begin(), names.begin() + local.n_common);
        const std::size_t begin = static_cast<std::size_t>(local.n_common) +
                                  static_cast<std::size_t>(g) * block;
        const std::size_t end = c == 1 ? names.size() : begin + block;
        features.insert(features.end(), names.begin() + static_cast<std::ptrdiff_t>(begin),
                        names.begin() + static_cast<std::ptrdiff_t>(end));
        out.group_features.push_back(std::move(features));

        Coefficients beta = base_beta;
        if (distinct_beta && g > 0) {
            auto rng = substream(seed, kPlantedBeta, static_cast<std::uint64_t>(g));
            boost::random::normal_distribution<double> normal(0.0, 1.0);
            for (int j = 0; j < local.n_common; ++j) {
                beta[names[static_cast<std::size_t>(j)]] = normal(rng);
            }
        }
        group_beta.push_back(std::move(beta));
    }

    for (int k = 0; k < local.n_centers; ++k) {
        const int g = static_cast<int>(static_cast<long long>(k) * c / local.n_centers);
        auto rng = substream(seed, kRows, static_cast<std::uint64_t>(k));
        boost::random::uniform_int_distribution<int> rows(local.rows_min, local.rows_max);
        const int n = rows(rng);
        const auto& features = out.group_features[static_cast<std::size_t>(g)];
        out.datasets.push_back(
            generate_rows(local, group_beta[static_cast<std::size_t>(g)], features, n, rng));
        auto holdout_rng = substream(seed, kHoldout, static_cast<std::uint64_t>(k));
        const int m = std::max(1, static_cast<int>(std::ceil(local.holdout_fraction * n)));
        out.holdouts.push_back(generate_rows(local, group_beta[static_cast<std::size_t>(g)],
                                             features, m, holdout_rng));
        out.groups.push_back(g);
    }
    return out;
}

}  // namespace fedcox
