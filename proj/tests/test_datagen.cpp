#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "fedcox/datagen.hpp"

using namespace fedcox;

namespace {

bool identical(const SurvivalDataset& a, const SurvivalDataset& b) {
    return a.feature_names == b.feature_names && a.event == b.event &&
           a.covariates.rows() == b.covariates.rows() && a.covariates.cols() == b.covariates.cols() &&
           a.covariates == b.covariates && a.time == b.time;
}

SimulationConfig null_config(int p) {
    SimulationConfig config;
    config.p_total = p;
    config.n_common = p;
    for (const auto& name : config.feature_names()) config.true_beta[name] = 0.0;
    return config;
}

}  // namespace

TEST_CASE("config validation") {
    SimulationConfig config;
    CHECK_NOTHROW(config.validate());
    config.n_common = 101;
    CHECK_THROWS_AS(config.validate(), InputError);
    config = {};
    config.rows_min = 1200;
    CHECK_THROWS_AS(config.validate(), InputError);
    config = {};
    config.baseline_lambda = 0.0;
    CHECK_THROWS_AS(config.validate(), InputError);
    config = {};
    config.presence_probability = 1.5;
    CHECK_THROWS_AS(config.validate(), InputError);
}

TEST_CASE("feature names and true coefficients") {
    SimulationConfig config;
    const auto names = config.feature_names();
    REQUIRE(names.size() == 100);
    CHECK(names.front() == "x001");
    CHECK(names.back() == "x100");
    const auto beta = config.resolved_true_beta();
    CHECK(beta.size() == 100);
    CHECK(beta == config.resolved_true_beta());
    config.seed = 1;
    CHECK(beta != config.resolved_true_beta());
}

TEST_CASE("null model censors uniformly below ln 2") {
    SimulationConfig config = null_config(1);
    auto rng = substream(5, 0);
    const auto d = generate_rows(config, config.true_beta, config.feature_names(), 20000, rng);
    CHECK(d.time.maxCoeff() < std::log(2.0));
    CHECK(d.time.minCoeff() >= 0.0);
}

TEST_CASE("null model event fraction matches Monte Carlo integration") {
    // P[tau <= C] for tau ~ Exp(1), C ~ U(0, ln 2), integrated independently.
    std::mt19937_64 mc(123);
    std::exponential_distribution<double> tau(1.0);
    std::uniform_real_distribution<double> censor(0.0, std::log(2.0));
    const int draws = 2000000;
    int hits = 0;
    for (int i = 0; i < draws; ++i) hits += tau(mc) <= censor(mc) ? 1 : 0;
    const double expected = double(hits) / draws;

    SimulationConfig config = null_config(1);
    auto rng = substream(6, 0);
    const auto d = generate_rows(config, config.true_beta, config.feature_names(), 100000, rng);
    const double fraction = double(d.event_count()) / 100000.0;
    CHECK(std::abs(fraction - expected) < 0.01);
}

TEST_CASE("covariate marginals have mean 0 and variance 1/p") {
    SimulationConfig config;
    const auto d = generate_center(config, 3);
    const double r = double(d.rows());
    for (Eigen::Index j = 0; j < d.features(); ++j) {
        const auto col = d.covariates.col(j);
        const double mean = col.mean();
        const double var = (col.array() - mean).square().sum() / (r - 1);
        CHECK(std::abs(mean) < 4.0 / std::sqrt(r * config.p_total));
        CHECK(std::abs(var - 1.0 / config.p_total) < 0.2 / config.p_total);
    }
}

TEST_CASE("centers hold the common features plus a random subset") {
    SimulationConfig config;
    std::set<std::vector<std::string>> distinct;
    for (int k = 0; k < 10; ++k) {
        const auto d = generate_center(config, k);
        CHECK_NOTHROW(d.validate());
        CHECK(d.rows() >= config.rows_min);
        CHECK(d.rows() <= config.rows_max);
        const auto names = config.feature_names();
        for (int j = 0; j < config.n_common; ++j) {
            CHECK(d.feature_names[static_cast<std::size_t>(j)] == names[static_cast<std::size_t>(j)]);
        }
        CHECK(d.features() > config.n_common);
        CHECK(d.features() < config.p_total);
        distinct.insert(d.feature_names);
    }
    CHECK(distinct.size() == 10);
}

TEST_CASE("generation is reproducible per (config, seed, center)") {
    SimulationConfig config;
    config.seed = 42;
    CHECK(identical(generate_center(config, 7), generate_center(config, 7)));
    // Centers are independent substreams: generation order does not matter.
    const auto late = generate_center(config, 9);
    (void)generate_center(config, 2);
    CHECK(identical(late, generate_center(config, 9)));
    SimulationConfig other = config;
    other.seed = 43;
    CHECK_FALSE(identical(generate_center(config, 7), generate_center(other, 7)));
}

TEST_CASE("every center has events and censored subjects") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        SimulationConfig config;
        config.seed = seed;
        config.n_centers = 10;
        for (int k = 0; k < config.n_centers; ++k) {
            const auto d = generate_center(config, k);
            CHECK(d.event_count() >= 1);
            CHECK(d.event_count() < static_cast<std::size_t>(d.rows()));
        }
    }
}

TEST_CASE("population censoring law is bounded by ln 2 / lambda0") {
    SimulationConfig config;
    config.censoring = CensoringLaw::Population;
    config.baseline_lambda = 2.0;
    const auto d = generate_center(config, 0);
    CHECK(d.time.maxCoeff() < std::log(2.0) / 2.0);
}

TEST_CASE("pooled common-feature fit recovers the true coefficients") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        SimulationConfig config;
        config.n_centers = 40;
        config.p_total = 11;
        config.n_common = 11;
        config.seed = seed;
        std::vector<SurvivalDataset> parts;
        Eigen::Index total = 0;
        for (int k = 0; k < config.n_centers; ++k) {
            parts.push_back(generate_center(config, k));
            total += parts.back().rows();
        }
        SurvivalDataset pooled;
        pooled.feature_names = config.feature_names();
        pooled.covariates.resize(total, 11);
        pooled.time.resize(total);
        Eigen::Index row = 0;
        for (const auto& d : parts) {
            pooled.covariates.middleRows(row, d.rows()) = d.covariates;
            pooled.time.segment(row, d.rows()) = d.time;
            pooled.event.insert(pooled.event.end(), d.event.begin(), d.event.end());
            row += d.rows();
        }
        REQUIRE(total >= 20000);
        const CoxModel model = fit_cox(pooled);
        REQUIRE(model.converged);
        const Eigen::MatrixXd covariance = hessian(pooled, model.beta_for(pooled)).inverse();
        const auto truth = config.resolved_true_beta();
        for (Eigen::Index j = 0; j < 11; ++j) {
            const auto& name = pooled.feature_names[static_cast<std::size_t>(j)];
            const double err = std::abs(model.coefficients.at(name) - truth.at(name));
            CHECK(err < 0.1);
            CHECK(err / std::sqrt(covariance(j, j)) < 4.0);
        }
    }
}

TEST_CASE("perturbation: group none returns the input unchanged") {
    SimulationConfig config;
    const auto d = generate_center(config, 0);
    const auto out = perturb_dataset(d, {PerturbationGroup::None, PerturbationMode::Add}, config, 0, 1);
    CHECK(identical(out.data, d));
    CHECK(out.applied == 0);
}

TEST_CASE("perturbation counts stay inside the group bounds") {
    SimulationConfig config;
    config.rows_min = config.rows_max = 300;
    const auto d = generate_center(config, 1);
    for (auto group : {PerturbationGroup::Small, PerturbationGroup::Medium, PerturbationGroup::Large}) {
        const int bound = PerturbationSchedule{group, PerturbationMode::Add}.upper_bound();
        for (int round = 1; round <= 30; ++round) {
            const auto added = perturb_dataset(d, {group, PerturbationMode::Add}, config, 1, round);
            CHECK(added.applied >= 1);
            CHECK(added.applied < bound);
            CHECK(added.data.rows() == d.rows() + added.applied);
            CHECK(added.data.feature_names == d.feature_names);
            CHECK(added.data.covariates.topRows(d.rows()) == d.covariates);
            const auto removed = perturb_dataset(d, {group, PerturbationMode::Remove}, config, 1, round);
            CHECK(removed.data.rows() == d.rows() - removed.applied);
            CHECK_FALSE(removed.clipped);
        }
    }
    CHECK(PerturbationSchedule{PerturbationGroup::Small, {}}.upper_bound() == 50);
    CHECK(PerturbationSchedule{PerturbationGroup::Medium, {}}.upper_bound() == 100);
    CHECK(PerturbationSchedule{PerturbationGroup::Large, {}}.upper_bound() == 200);
}

TEST_CASE("add then remove with the same seeded count restores the row count") {
    SimulationConfig config;
    const auto d = generate_center(config, 4);
    const auto added = perturb_dataset(d, {PerturbationGroup::Medium, PerturbationMode::Add}, config, 4, 3);
    const auto removed =
        perturb_dataset(added.data, {PerturbationGroup::Medium, PerturbationMode::Remove}, config, 4, 3);
    CHECK(removed.applied == added.applied);
    CHECK(removed.data.rows() == d.rows());
}

TEST_CASE("removal is clipped to keep ten rows") {
    SimulationConfig config;
    config.rows_min = config.rows_max = 15;
    const auto d = generate_center(config, 0);
    bool saw_clip = false;
    for (int round = 1; round <= 20; ++round) {
        const auto out = perturb_dataset(d, {PerturbationGroup::Large, PerturbationMode::Remove}, config, 0, round);
        CHECK(out.data.rows() >= 10);
        if (out.clipped) {
            saw_clip = true;
            CHECK(out.applied == 5);
            CHECK(out.requested > 5);
        }
    }
    CHECK(saw_clip);
}

TEST_CASE("perturbation group names round-trip") {
    for (auto g : {PerturbationGroup::None, PerturbationGroup::Small, PerturbationGroup::Medium,
                   PerturbationGroup::Large}) {
        CHECK(parse_perturbation_group(to_string(g)) == g);
    }
    CHECK_THROWS_AS(parse_perturbation_group("huge"), InputError);
}

TEST_CASE("planted clusters") {
    SimulationConfig config;
    config.n_centers = 6;
    config.rows_min = config.rows_max = 50;
    SUBCASE("c = 1 shares one feature set") {
        const auto s = generate_planted_clusters(config, 1, 3);
        for (const auto& d : s.datasets) CHECK(d.feature_names == s.datasets.front().feature_names);
    }
    SUBCASE("c = 2 splits centers into contiguous groups with disjoint blocks") {
        const auto s = generate_planted_clusters(config, 2, 3);
        CHECK(s.groups == std::vector<int>{0, 0, 0, 1, 1, 1});
        std::set<std::string> a(s.group_features[0].begin() + config.n_common, s.group_features[0].end());
        for (auto it = s.group_features[1].begin() + config.n_common; it != s.group_features[1].end(); ++it) {
            CHECK(a.count(*it) == 0);
        }
        REQUIRE(s.holdouts.size() == 6);
        for (std::size_t k = 0; k < 6; ++k) {
            CHECK(s.holdouts[k].feature_names == s.datasets[k].feature_names);
        }
    }
    SUBCASE("invalid counts") {
        CHECK_THROWS_AS(generate_planted_clusters(config, 0, 1), InputError);
        CHECK_THROWS_AS(generate_planted_clusters(config, 7, 1), InputError);
    }
}
