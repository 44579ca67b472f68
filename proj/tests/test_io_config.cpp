#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

#include "fedcox/config.hpp"
#include "fedcox/experiment.hpp"
#include "fedcox/io.hpp"
#include "oracles.hpp"

using namespace fedcox;

namespace {

std::string error_of(const std::string& text) {
    std::istringstream in(text);
    try {
        parse_dataset(in, "data.csv");
    } catch (const InputError& e) {
        return e.what();
    }
    return "";
}

std::string config_error(const std::string& text) {
    std::istringstream in(text);
    try {
        parse_config(in, "exp.cfg");
    } catch (const InputError& e) {
        return e.what();
    }
    return "";
}

ExperimentConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("dataset CSV round trip is bit-exact") {
    std::mt19937_64 rng(4);
    auto d = oracle::random_dataset(rng, 50, 4, 0, 0.6);
    d.covariates(0, 0) = 1e-300;
    d.covariates(1, 1) = -0.1;
    d.covariates(2, 2) = 123456789.123456789;
    d.time[3] = 0.0;
    std::stringstream buffer;
    write_dataset(buffer, d);
    const auto back = parse_dataset(buffer);
    CHECK(back.feature_names == d.feature_names);
    CHECK(back.event == d.event);
    CHECK(back.time == d.time);
    CHECK(back.covariates == d.covariates);
}

TEST_CASE("format_double reads back exactly") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng) * std::pow(10.0, (i % 40) - 20);
        CHECK(std::stod(format_double(x)) == x);
    }
    CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("dataset parsing accepts CRLF, a BOM and any column order") {
    const auto d = [] {
        std::istringstream in("\xEF\xBB\xBF" "age,event,time\r\n1.5,1,2\r\n-0.5,0,3.25\r\n");
        return parse_dataset(in);
    }();
    CHECK(d.feature_names == std::vector<std::string>{"age"});
    CHECK(d.rows() == 2);
    CHECK(d.time[1] == 3.25);
    CHECK(d.event == std::vector<std::uint8_t>{1, 0});
    CHECK(d.covariates(0, 0) == 1.5);
}

TEST_CASE("dataset errors name the row and column") {
    CHECK(contains(error_of("time,x\n1,2\n"), "missing column: event"));
    CHECK(contains(error_of("event,x\n1,2\n"), "missing column: time"));
    const auto bad = error_of("time,event,x\n1,1,0.5\n2,0,abc\n");
    CHECK(contains(bad, "non-numeric value 'abc'"));
    CHECK(contains(bad, "row 3"));
    CHECK(contains(bad, "column 'x'"));
    CHECK(contains(error_of("time,event,x\n-1,1,0.5\n"), "negative time"));
    CHECK(contains(error_of("time,event,x\n1,2,0.5\n"), "event must be 0 or 1"));
    CHECK(contains(error_of("time,event,x\n1,1\n"), "row 2"));
    CHECK(contains(error_of(""), "empty file"));
    CHECK(contains(error_of("time,event,x\n1,1,nan\n"), "non-finite value 'nan'"));
    CHECK(contains(error_of("time,event,x\n1,1,inf\n"), "non-finite"));
    CHECK_THROWS_AS(load_dataset("/nonexistent/file.csv"), InputError);
}

TEST_CASE("save and load a dataset through the filesystem") {
    const auto dir = std::filesystem::temp_directory_path() / "fedcox_io_test";
    std::filesystem::create_directories(dir);
    std::mt19937_64 rng(6);
    const auto d = oracle::random_dataset(rng, 20, 2);
    const auto path = (dir / "d.csv").string();
    save_dataset(path, d);
    const auto back = load_dataset(path);
    CHECK(back.covariates == d.covariates);
    CHECK(back.time == d.time);
    std::filesystem::remove_all(dir);
}

TEST_CASE("generic CSV reader") {
    std::istringstream in("a,b\r\n1,2\n3,4\n");
    const auto t = parse_csv(in);
    CHECK(t.header == std::vector<std::string>{"a", "b"});
    CHECK(t.rows.size() == 2);
    CHECK(t.rows[1][t.column("b")] == "4");
    CHECK_THROWS_AS(t.column("z"), InputError);
    std::istringstream ragged("a,b\n1\n");
    CHECK_THROWS_AS(parse_csv(ragged), InputError);
}

TEST_CASE("default config validates and round-trips") {
    ExperimentConfig config;
    CHECK_NOTHROW(config.validate());
    CHECK(parse(serialize_config(config)) == config);
}

TEST_CASE("edited config round-trips") {
    ExperimentConfig config;
    config.algorithm = Algorithm::Event;
    config.clusters = {3, 3};
    config.epsilon = 0.0;
    config.eta = 1.0 / 3.0;
    config.rounds = 7;
    config.repetitions = 25;
    config.seed = 18446744073709551615ull;
    config.output_path = "out dir/x";
    config.simulation.n_centers = 20;
    config.simulation.censoring = CensoringLaw::Population;
    config.simulation.true_beta["x001"] = -0.123456789012345678;
    config.fit.ridge_lambda = 0.25;
    config.kmeans.restarts = 4;
    config.event_groups = {PerturbationGroup::Large, PerturbationGroup::None};
    config.event_mode = EventMode::Alternate;
    config.event_aggregator = Aggregator::Alg1;
    config.converge.eta_fraction = 0.9;
    config.bench.centers = {5, 7};
    config.ifca_max_rounds = 3;
    const auto back = parse(serialize_config(config));
    CHECK(back == config);
    CHECK(back.clusters.values() == std::vector<int>{3});
}

TEST_CASE("config keys, comments and ranges") {
    const auto c = parse("# comment\n\nalgorithm = alg1\nclusters = 2..4  \n  seed=9\n");
    CHECK(c.algorithm == Algorithm::Alg1);
    CHECK(c.clusters.values() == std::vector<int>{2, 3, 4});
    CHECK(c.seed == 9);
    CHECK(parse("clusters = 5").clusters.values() == std::vector<int>{5});
}

TEST_CASE("config errors name the line") {
    CHECK(contains(config_error("seed = 1\nbogus = 2\n"), "exp.cfg:2"));
    CHECK(contains(config_error("seed = 1\nbogus = 2\n"), "unknown key 'bogus'"));
    CHECK(contains(config_error("seed = 1\nseed = 2\n"), "duplicate key 'seed'"));
    CHECK(contains(config_error("rounds = many\n"), "exp.cfg:1"));
    CHECK(contains(config_error("algorithm = alg9\n"), "unknown algorithm"));
    CHECK(contains(config_error("no equals sign\n"), "expected 'key = value'"));
    CHECK(contains(config_error("event.groups = small,huge\n"), "exp.cfg:1"));
    CHECK(contains(config_error("clusters = 4..x\n"), "exp.cfg:1"));
    CHECK_THROWS_AS(load_config("/nonexistent.cfg"), InputError);
}

TEST_CASE("config validation catches out-of-range values") {
    CHECK_THROWS_AS(parse("clusters = 5..2").validate(), InputError);
    CHECK_THROWS_AS(parse("clusters = 0").validate(), InputError);
    CHECK_THROWS_AS(parse("epsilon = -1").validate(), InputError);
    CHECK_THROWS_AS(parse("rounds = 1").validate(), InputError);
    CHECK_THROWS_AS(parse("repetitions = 0").validate(), InputError);
    CHECK_THROWS_AS(parse("simulation.n_common = 500").validate(), InputError);
    CHECK_THROWS_AS(parse("converge.ridge_lambda = 0").validate(), InputError);
}

TEST_CASE("emitted result CSVs parse back") {
    ExperimentConfig config;
    config.simulation.n_centers = 6;
    config.simulation.rows_min = 100;
    config.simulation.rows_max = 120;
    config.simulation.p_total = 12;
    config.simulation.n_common = 3;
    config.clusters = {2, 3};
    const auto result = run_improvement_experiment(config);
    std::stringstream improvement, centers;
    write_improvement_csv(improvement, result);
    write_center_results_csv(centers, result);
    const auto t = parse_csv(improvement);
    CHECK(t.rows.size() == 2);
    for (const auto& row : t.rows) {
        CHECK(std::stoi(row[t.column("alg1")]) >= 0);
        CHECK(std::stoi(row[t.column("alg2")]) <= 6);
        const double p = std::stod(row[t.column("p_value")]);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
    const auto c = parse_csv(centers);
    for (const auto& row : c.rows) {
        const double ci = std::stod(row[c.column("cindex_after")]);
        CHECK(ci >= 0.0);
        CHECK(ci <= 1.0);
    }

    config.rounds = 3;
    config.converge.iterations = 20;
    const auto report = run_converge(config, 1);
    std::stringstream converge;
    write_converge_csv(converge, report);
    const auto v = parse_csv(converge);
    CHECK(v.rows.size() == 21);
    CHECK(std::stod(v.rows[0][v.column("squared_distance")]) > 0.0);
}

TEST_CASE("scenario files load as datasets") {
    const auto dir = std::filesystem::temp_directory_path() / "fedcox_scenario_test";
    std::filesystem::remove_all(dir);
    SimulationConfig sim;
    sim.n_centers = 3;
    sim.rows_min = 40;
    sim.rows_max = 60;
    const auto files = write_scenario(dir.string(), sim);
    int datasets = 0;
    for (const auto& f : files) {
        if (std::filesystem::path(f).filename().string().rfind("center_", 0) == 0) {
            CHECK_NOTHROW(load_dataset(f).validate());
            ++datasets;
        }
    }
    CHECK(datasets == 6);
    const auto truth = load_csv((dir / "true_beta.csv").string());
    CHECK(truth.rows.size() == 100);
    std::filesystem::remove_all(dir);
}
