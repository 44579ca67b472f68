// fedcox command-line driver.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "fedcox/config.hpp"
#include "fedcox/experiment.hpp"
#include "fedcox/io.hpp"

namespace fs = std::filesystem;
using namespace fedcox;

namespace {

constexpr int kOk = 0;
constexpr int kInternalError = 1;
constexpr int kInputError = 2;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "Experiment config (key = value)");
    cmd->add_option("--seed", flags.seed, "Override the config seed");
    cmd->add_option("--out", flags.out, "Output directory");
    cmd->add_flag("--quiet", flags.quiet, "Suppress human-readable tables");
}

ExperimentConfig resolve(const CommonFlags& flags) {
    ExperimentConfig config = flags.config_path.empty() ? ExperimentConfig{}
                                                         : load_config(flags.config_path);
    if (flags.seed) config.seed = *flags.seed;
    if (!flags.out.empty()) config.output_path = flags.out;
    config.validate();
    return config;
}

std::ofstream open_output(const std::string& directory, const std::string& name) {
    fs::create_directories(directory);
    const std::string path = (fs::path(directory) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    return out;
}

template <typename Write>
void write_file(const std::string& directory, const std::string& name, Write write) {
    auto out = open_output(directory, name);
    write(out);
}

void save_config(const ExperimentConfig& config) {
    open_output(config.output_path, "config_used.txt") << serialize_config(config);
}

int cmd_gen(const CommonFlags& flags) {
    const ExperimentConfig config = resolve(flags);
    SimulationConfig sim = config.simulation;
    sim.seed = config.seed;
    const auto files = write_scenario(config.output_path, sim);
    if (!flags.quiet) {
        std::cout << "wrote " << files.size() << " files for " << sim.n_centers << " centers to "
                  << config.output_path << "\n";
    }
    return kOk;
}

int cmd_fit(const CommonFlags& flags, const std::string& dataset_path) {
    ExperimentConfig config = flags.config_path.empty() ? ExperimentConfig{}
                                                        : load_config(flags.config_path);
    config.fit.validate();
    const SurvivalDataset data = load_dataset(dataset_path);
    const CoxModel model = fit_cox(data, config.fit);
    const Eigen::VectorXd beta = model.beta_for(data);
    const double ci = concordance_index(data, beta);

    if (!flags.quiet) {
        std::cout << "subjects " << data.rows() << ", events " << data.event_count() << "\n";
        for (const auto& name : data.feature_names) {
            std::cout << "  " << name << "  " << format_double(model.coefficients.at(name)) << "\n";
        }
        std::cout << "converged " << (model.converged ? "yes" : "no") << " after "
                  << model.iterations << " iterations, loss " << format_double(model.final_loss)
                  << "\nC-index " << format_double(ci) << "\n";
    }
    if (!flags.out.empty()) {
        auto coef = open_output(flags.out, "coefficients.csv");
        coef << "feature,beta\n";
        for (const auto& name : data.feature_names) {
            coef << name << ',' << format_double(model.coefficients.at(name)) << '\n';
        }
        auto base = open_output(flags.out, "baseline.csv");
        base << "time,hazard\n";
        for (const auto& step : model.baseline) {
            base << format_double(step.time) << ',' << format_double(step.hazard) << '\n';
        }
        auto summary = open_output(flags.out, "fit_summary.csv");
        summary << "converged,iterations,loss,cindex\n"
                << (model.converged ? 1 : 0) << ',' << model.iterations << ','
                << format_double(model.final_loss) << ',' << format_double(ci) << '\n';
    }
    return kOk;
}

int cmd_run(const CommonFlags& flags) {
    const ExperimentConfig config = resolve(flags);
    if (config.algorithm == Algorithm::Event) {
        const EventResult result = run_event_experiment(config);
        write_file(config.output_path, "event.csv",
                   [&](std::ostream& o) { write_event_csv(o, result); });
        if (!flags.quiet) print_event_table(std::cout, result);
    } else {
        const ImprovementResult result = run_improvement_experiment(config);
        write_file(config.output_path, "improvement.csv",
                   [&](std::ostream& o) { write_improvement_csv(o, result); });
        write_file(config.output_path, "center_results.csv",
                   [&](std::ostream& o) { write_center_results_csv(o, result); });
        if (!flags.quiet) print_improvement_table(std::cout, result);
    }
    save_config(config);
    return kOk;
}

int cmd_converge(const CommonFlags& flags) {
    const ExperimentConfig config = resolve(flags);
    const ConvergeReport report = run_converge(config, config.seed);
    write_file(config.output_path, "converge.csv",
               [&](std::ostream& o) { write_converge_csv(o, report); });
    if (!flags.quiet) print_converge_summary(std::cout, report);
    if (report.outside_guarantee) {
        std::cerr << "warning: eta = " << format_double(report.eta)
                  << " is not below mu/L^2 = "
                  << format_double(report.result.mu /
                                   (report.result.lipschitz * report.result.lipschitz))
                  << "; outside the guarantee region, the bound may not hold\n";
    }
    return kOk;
}

int cmd_bench(const CommonFlags& flags) {
    const ExperimentConfig config = resolve(flags);
    for (const auto& table : run_bench(config)) {
        write_file(config.output_path, "timing_" + std::to_string(table.centers) + ".csv",
                   [&](std::ostream& o) { write_timing_csv(o, table); });
        if (!flags.quiet) print_timing_table(std::cout, table);
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated Cox proportional hazards experiments"};
    app.name("fedcox");
    app.require_subcommand(1);

    CommonFlags gen_flags, fit_flags, run_flags, converge_flags, bench_flags;
    std::string dataset_path;

    auto* gen = app.add_subcommand("gen", "Write synthetic centers to a directory");
    add_common(gen, gen_flags);
    auto* fit = app.add_subcommand("fit", "Fit a Cox model to one dataset CSV");
    add_common(fit, fit_flags);
    fit->add_option("dataset", dataset_path, "Dataset CSV")->required();
    auto* run = app.add_subcommand("run", "Run a federated experiment");
    add_common(run, run_flags);
    auto* converge = app.add_subcommand("converge", "Check the gradient-mode contraction bound");
    add_common(converge, converge_flags);
    auto* bench = app.add_subcommand("bench", "Timing sweep over centers and clusters");
    add_common(bench, bench_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kInputError;
    }

    try {
        if (*gen) return cmd_gen(gen_flags);
        if (*fit) return cmd_fit(fit_flags, dataset_path);
        if (*run) return cmd_run(run_flags);
        if (*converge) return cmd_converge(converge_flags);
        if (*bench) return cmd_bench(bench_flags);
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const DegenerateFit& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternalError;
    }
    return kInternalError;
}
