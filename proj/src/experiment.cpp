#include "fedcox/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>

#include "fedcox/io.hpp"
#include "fedcox/stats.hpp"

namespace fedcox {

namespace {

std::string center_id(int k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "center_%03d", k);
    return buf;
}

std::string fixed(double value, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, value);
    return buf;
}

SimulationConfig repetition_config(const ExperimentConfig& config, int repetition) {
    SimulationConfig sim = config.simulation;
    sim.seed = config.seed + static_cast<std::uint64_t>(repetition);
    return sim;
}

void append_outcomes(ImprovementResult& result, int repetition, int clusters,
                     const std::string& algorithm, const RoundReport& report) {
    for (const auto& outcome : report.per_center) {
        result.per_center.push_back({repetition, clusters, algorithm, outcome.id,
                                     outcome.cindex_before, outcome.cindex_after});
    }
}

std::vector<double> after_values(const RoundReport& report) {
    std::vector<double> out;
    for (const auto& outcome : report.per_center) out.push_back(outcome.cindex_after);
    return out;
}

}  // namespace

std::vector<Center> simulate_centers(const SimulationConfig& config) {
    config.validate();
    std::vector<Center> centers;
    centers.reserve(static_cast<std::size_t>(config.n_centers));
    for (int k = 0; k < config.n_centers; ++k) {
        Center center;
        center.id = center_id(k);
        center.dataset = generate_center(config, k);
        if (config.holdout_fraction > 0.0) {
            center.evaluation = generate_center_holdout(config, k, center.dataset.feature_names,
                                                        static_cast<int>(center.dataset.rows()));
        }
        centers.push_back(std::move(center));
    }
    return centers;
}

ImprovementResult run_improvement_experiment(const ExperimentConfig& config) {
    config.validate();
    const auto options = config.federation_options();
    ImprovementResult result;
    result.n_centers = config.simulation.n_centers;
    for (int rep = 0; rep < config.repetitions; ++rep) {
        const SimulationConfig sim = repetition_config(config, rep);
        std::vector<Center> centers = simulate_centers(sim);
        fit_local_models(centers, options.fit);

        // Alg. 1 does not depend on c.
        const RoundReport alg1 = run_alg1(centers, options);
        const std::vector<double> alg1_after = after_values(alg1);
        for (int c : config.clusters.values()) {
            if (c > sim.n_centers) {
                throw InputError("clusters " + std::to_string(c) + " exceeds n_centers " +
                                 std::to_string(sim.n_centers));
            }
            const RoundReport alg2 = run_alg2(centers, c, sim.seed, options);
            const RoundReport ifca = run_ifca(centers, c, config.ifca_max_rounds, sim.seed, options);
            const TTestResult test = paired_t_test(after_values(alg2), alg1_after);
            result.rows.push_back({rep, c, alg1.improved_count(), ifca.improved_count(),
                                   alg2.improved_count(), test.t_statistic, test.p_value});
            append_outcomes(result, rep, c, "alg1", alg1);
            append_outcomes(result, rep, c, "ifca", ifca);
            append_outcomes(result, rep, c, "alg2", alg2);
        }
    }
    return result;
}

EventResult run_event_experiment(const ExperimentConfig& config) {
    config.validate();
    const auto options = config.federation_options();
    const auto& groups = config.event_groups;
    EventReportingConfig event;
    event.epsilon = config.epsilon;
    event.rounds = config.rounds;
    event.aggregator = config.event_aggregator;
    event.clusters = config.clusters.first;

    EventResult result;
    // ratios[g][round] over repetitions
    std::vector<std::vector<std::vector<double>>> ratios(
        groups.size(), std::vector<std::vector<double>>(static_cast<std::size_t>(config.rounds)));
    for (int rep = 0; rep < config.repetitions; ++rep) {
        const SimulationConfig sim = repetition_config(config, rep);
        std::vector<Center> centers = simulate_centers(sim);
        auto group_of = [&](std::size_t k) { return k % groups.size(); };

        const PerturbationHook hook = [&](std::span<Center> span, int round) {
            for (std::size_t k = 0; k < span.size(); ++k) {
                PerturbationSchedule schedule;
                schedule.group = groups[group_of(k)];
                if (schedule.group == PerturbationGroup::None) continue;
                switch (config.event_mode) {
                    case EventMode::Add: schedule.mode = PerturbationMode::Add; break;
                    case EventMode::Remove: schedule.mode = PerturbationMode::Remove; break;
                    case EventMode::Alternate:
                        schedule.mode = (round + static_cast<int>(k)) % 2 ? PerturbationMode::Add
                                                                          : PerturbationMode::Remove;
                        break;
                }
                auto outcome =
                    perturb_dataset(span[k].dataset, schedule, sim, static_cast<int>(k), round);
                if (outcome.clipped) ++result.clipped_perturbations;
                span[k].dataset = std::move(outcome.data);
                span[k].local_model.reset();
            }
        };

        const auto reports = run_event_based(centers, event, hook, sim.seed, options);
        for (const auto& report : reports) {
            std::vector<int> selected(groups.size(), 0);
            std::vector<int> members(groups.size(), 0);
            for (std::size_t k = 0; k < report.per_center.size(); ++k) {
                ++members[group_of(k)];
                if (report.per_center[k].participated) ++selected[group_of(k)];
            }
            for (std::size_t g = 0; g < groups.size(); ++g) {
                if (members[g] == 0) continue;
                ratios[g][static_cast<std::size_t>(report.round)].push_back(
                    static_cast<double>(selected[g]) / members[g]);
            }
        }
    }

    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (int round = 0; round < config.rounds; ++round) {
            const auto& values = ratios[g][static_cast<std::size_t>(round)];
            if (values.empty()) continue;
            result.rows.push_back({to_string(groups[g]), round, mean(values), standard_error(values)});
        }
    }
    return result;
}

double TimingTable::total(const std::string& algorithm, int clusters) const {
    for (const auto& row : rows) {
        if (row.algorithm == algorithm && row.clusters == clusters && row.phase == "total") {
            return row.seconds;
        }
    }
    throw InputError("no timing for " + algorithm + " at c = " + std::to_string(clusters));
}

std::vector<TimingTable> run_bench(const ExperimentConfig& config) {
    config.validate();
    const auto options = config.federation_options();
    std::vector<TimingTable> tables;
    for (int n : config.bench.centers) {
        SimulationConfig sim = config.simulation;
        sim.n_centers = n;
        sim.seed = config.seed;
        std::vector<Center> centers = simulate_centers(sim);
        PhaseTimes fit_time;
        {
            const auto start = std::chrono::steady_clock::now();
            fit_local_models(centers, options.fit);
            fit_time.local_fit =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }

        TimingTable table;
        table.centers = n;
        for (int c : config.clusters.values()) {
            if (c > n) continue;
            for (const std::string algorithm : {"alg1", "alg2", "ifca"}) {
                PhaseTimes best;
                double best_total = std::numeric_limits<double>::infinity();
                for (int r = 0; r < config.bench.repeats; ++r) {
                    RoundReport report;
                    if (algorithm == "alg1") {
                        report = run_alg1(centers, options);
                    } else if (algorithm == "alg2") {
                        report = run_alg2(centers, c, sim.seed, options);
                    } else {
                        report = run_ifca(centers, c, config.ifca_max_rounds, sim.seed, options);
                    }
                    if (report.wall_time.total() < best_total) {
                        best_total = report.wall_time.total();
                        best = report.wall_time;
                    }
                }
                best.local_fit = fit_time.local_fit;
                table.rows.push_back({algorithm, c, "local_fit", best.local_fit});
                table.rows.push_back({algorithm, c, "clustering", best.clustering});
                table.rows.push_back({algorithm, c, "aggregation", best.aggregation});
                table.rows.push_back({algorithm, c, "evaluation", best.evaluation});
                table.rows.push_back({algorithm, c, "total", best.total()});
            }
        }
        tables.push_back(std::move(table));
    }
    return tables;
}

std::vector<Center> converge_instance(const ExperimentConfig& config, std::uint64_t seed) {
    config.validate();
    const auto& settings = config.converge;
    SimulationConfig sim;
    sim.n_centers = settings.centers;
    sim.rows_min = settings.rows_min;
    sim.rows_max = settings.rows_max;
    sim.p_total = settings.features;
    sim.n_common = settings.features;
    sim.baseline_lambda = config.simulation.baseline_lambda;
    sim.censoring = config.simulation.censoring;
    sim.holdout_fraction = 0.0;
    sim.seed = seed;
    return simulate_centers(sim);
}

ConvergeReport run_converge(const ExperimentConfig& config, std::uint64_t seed) {
    const std::vector<Center> centers = converge_instance(config, seed);
    const auto& settings = config.converge;
    const auto& features = centers.front().dataset.feature_names;

    ConvergeReport report;
    report.eta = config.eta;
    if (report.eta == 0.0) {
        // Curvature along the straight path from the start to the optimum.
        const Eigen::VectorXd star = pooled_optimum(centers, features, settings.ridge_lambda);
        std::vector<Eigen::VectorXd> probe;
        constexpr int kProbePoints = 11;
        for (int i = 0; i < kProbePoints; ++i) probe.push_back(star * (double(i) / (kProbePoints - 1)));
        const auto [mu, lipschitz] = curvature_range(centers, features, probe, settings.ridge_lambda);
        report.eta = settings.eta_fraction * mu / (lipschitz * lipschitz);
    }

    GradientModeOptions options;
    options.eta = report.eta;
    options.iterations = settings.iterations;
    options.ridge_lambda = settings.ridge_lambda;
    report.result = run_gradient_mode(centers, options);
    report.outside_guarantee = !report.result.in_guarantee_region;

    constexpr double kSlack = 1.0 + 1e-6;
    for (std::size_t t = 0; t < report.result.distances.size(); ++t) {
        const double d = report.result.distances[t];
        const double bound = report.result.bound(report.eta, static_cast<int>(t));
        report.rows.push_back({static_cast<int>(t), d * d, bound});
        if (d * d > bound * kSlack) report.bound_holds = false;
    }
    return report;
}

void write_improvement_csv(std::ostream& out, const ImprovementResult& result) {
    out << "repetition,clusters,alg1,ifca,alg2,t_stat,p_value\n";
    for (const auto& row : result.rows) {
        out << row.repetition << ',' << row.clusters << ',' << row.alg1 << ',' << row.ifca << ','
            << row.alg2 << ',' << format_double(row.t_stat) << ',' << format_double(row.p_value)
            << '\n';
    }
}

void write_center_results_csv(std::ostream& out, const ImprovementResult& result) {
    out << "repetition,clusters,algorithm,center,cindex_before,cindex_after\n";
    for (const auto& row : result.per_center) {
        out << row.repetition << ',' << row.clusters << ',' << row.algorithm << ',' << row.center
            << ',' << format_double(row.cindex_before) << ',' << format_double(row.cindex_after)
            << '\n';
    }
}

void write_event_csv(std::ostream& out, const EventResult& result) {
    out << "group,round,selection_ratio,stderr\n";
    for (const auto& row : result.rows) {
        out << row.group << ',' << row.round << ',' << format_double(row.selection_ratio) << ','
            << format_double(row.stderr_) << '\n';
    }
}

void write_timing_csv(std::ostream& out, const TimingTable& table) {
    out << "algorithm,clusters,phase,seconds\n";
    for (const auto& row : table.rows) {
        out << row.algorithm << ',' << row.clusters << ',' << row.phase << ','
            << format_double(row.seconds) << '\n';
    }
}

void write_converge_csv(std::ostream& out, const ConvergeReport& report) {
    out << "iteration,squared_distance,bound\n";
    for (const auto& row : report.rows) {
        out << row.iteration << ',' << format_double(row.squared_distance) << ','
            << format_double(row.bound) << '\n';
    }
}

void print_improvement_table(std::ostream& out, const ImprovementResult& result) {
    out << "Centers with improved C-index (of " << result.n_centers << ")\n";
    out << "rep    c   alg1   ifca   alg2      t-stat     p-value\n";
    for (const auto& row : result.rows) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%3d  %3d  %5d  %5d  %5d  %10.4f  %10.3g\n", row.repetition,
                      row.clusters, row.alg1, row.ifca, row.alg2, row.t_stat, row.p_value);
        out << buf;
    }
}

void print_event_table(std::ostream& out, const EventResult& result) {
    out << "Selection ratio by perturbation group\n";
    out << "group     round   ratio    stderr\n";
    for (const auto& row : result.rows) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%-8s  %5d  %6.3f  %8.4f\n", row.group.c_str(), row.round,
                      row.selection_ratio, row.stderr_);
        out << buf;
    }
    if (result.clipped_perturbations > 0) {
        out << "warning: " << result.clipped_perturbations
            << " removals were clipped to keep 10 rows\n";
    }
}

void print_timing_table(std::ostream& out, const TimingTable& table) {
    out << "Wall time at " << table.centers << " centers (seconds)\n";
    out << "c    alg1       alg2       ifca\n";
    std::map<int, std::map<std::string, double>> totals;
    for (const auto& row : table.rows) {
        if (row.phase == "total") totals[row.clusters][row.algorithm] = row.seconds;
    }
    for (const auto& [c, by_algorithm] : totals) {
        out << c;
        for (const char* name : {"alg1", "alg2", "ifca"}) {
            auto it = by_algorithm.find(name);
            out << "    " << (it == by_algorithm.end() ? std::string("-") : fixed(it->second, 5));
        }
        out << '\n';
    }
}

void print_converge_summary(std::ostream& out, const ConvergeReport& report) {
    const auto& r = report.result;
    out << "eta = " << format_double(report.eta) << ", mu = " << fixed(r.mu, 6)
        << ", L = " << fixed(r.lipschitz, 6) << ", mu/L^2 = " << format_double(r.mu / (r.lipschitz * r.lipschitz))
        << '\n';
    out << "contraction factor = " << format_double(r.contraction_factor(report.eta)) << '\n';
    const std::size_t step = std::max<std::size_t>(1, report.rows.size() / 10);
    out << "iter    |beta-beta*|^2        bound\n";
    for (std::size_t i = 0; i < report.rows.size(); i += step) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%4d  %16.6e  %16.6e\n", report.rows[i].iteration,
                      report.rows[i].squared_distance, report.rows[i].bound);
        out << buf;
    }
    out << (report.bound_holds ? "bound holds at every iteration\n"
                               : "bound violated at some iteration\n");
}

std::vector<std::string> write_scenario(const std::string& directory, const SimulationConfig& config) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);
    std::vector<std::string> written;
    const std::vector<Center> centers = simulate_centers(config);
    for (const auto& center : centers) {
        const std::string path = (fs::path(directory) / (center.id + ".csv")).string();
        save_dataset(path, center.dataset);
        written.push_back(path);
        if (center.evaluation) {
            const std::string holdout = (fs::path(directory) / (center.id + "_holdout.csv")).string();
            save_dataset(holdout, *center.evaluation);
            written.push_back(holdout);
        }
    }
    const std::string beta_path = (fs::path(directory) / "true_beta.csv").string();
    std::ofstream out(beta_path, std::ios::binary);
    if (!out) throw InputError("cannot write " + beta_path);
    out << "feature,beta\n";
    for (const auto& [name, value] : config.resolved_true_beta()) {
        out << name << ',' << format_double(value) << '\n';
    }
    written.push_back(beta_path);
    return written;
}

}  // namespace fedcox
