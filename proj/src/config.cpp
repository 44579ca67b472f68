#include "fedcox/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "fedcox/io.hpp"

namespace fedcox {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

template <typename T>
T parse_integer(const std::string& text) {
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        throw InputError("expected an integer, got '" + text + "'");
    }
    return value;
}

double parse_real(const std::string& text) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        throw InputError("expected a number, got '" + text + "'");
    }
    return value;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) out.push_back(trim(item));
    return out;
}

template <typename T>
std::string join(const std::vector<T>& items, const std::function<std::string(const T&)>& f) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ",";
        out += f(items[i]);
    }
    return out;
}

Algorithm parse_algorithm(const std::string& text) {
    if (text == "alg1") return Algorithm::Alg1;
    if (text == "alg2") return Algorithm::Alg2;
    if (text == "ifca") return Algorithm::Ifca;
    if (text == "event") return Algorithm::Event;
    throw InputError("unknown algorithm '" + text + "'");
}

EventMode parse_event_mode(const std::string& text) {
    if (text == "add") return EventMode::Add;
    if (text == "remove") return EventMode::Remove;
    if (text == "alternate") return EventMode::Alternate;
    throw InputError("unknown event mode '" + text + "'");
}

Aggregator parse_aggregator(const std::string& text) {
    if (text == "alg1") return Aggregator::Alg1;
    if (text == "alg2") return Aggregator::Alg2;
    throw InputError("unknown aggregator '" + text + "'");
}

CensoringLaw parse_censoring(const std::string& text) {
    if (text == "individual") return CensoringLaw::Individual;
    if (text == "population") return CensoringLaw::Population;
    throw InputError("unknown censoring law '" + text + "'");
}

ClusterRange parse_range(const std::string& text) {
    const auto dots = text.find("..");
    if (dots == std::string::npos) {
        const int c = parse_integer<int>(text);
        return {c, c};
    }
    return {parse_integer<int>(trim(text.substr(0, dots))),
            parse_integer<int>(trim(text.substr(dots + 2)))};
}

struct Field {
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
Field integer_field(T ExperimentConfig::*member) {
    return {[member](ExperimentConfig& c, const std::string& v) { c.*member = parse_integer<T>(v); },
            [member](const ExperimentConfig& c) { return std::to_string(c.*member); }};
}

Field real_field(double ExperimentConfig::*member) {
    return {[member](ExperimentConfig& c, const std::string& v) { c.*member = parse_real(v); },
            [member](const ExperimentConfig& c) { return format_double(c.*member); }};
}

// Keys in serialization order.
const std::vector<std::pair<std::string, Field>>& fields() {
    static const std::vector<std::pair<std::string, Field>> table = [] {
        std::vector<std::pair<std::string, Field>> t;
        auto sim_int = [&](const std::string& key, int SimulationConfig::*m) {
            t.push_back({key,
                         {[m](ExperimentConfig& c, const std::string& v) {
                              c.simulation.*m = parse_integer<int>(v);
                          },
                          [m](const ExperimentConfig& c) { return std::to_string(c.simulation.*m); }}});
        };
        auto sim_real = [&](const std::string& key, double SimulationConfig::*m) {
            t.push_back({key,
                         {[m](ExperimentConfig& c, const std::string& v) {
                              c.simulation.*m = parse_real(v);
                          },
                          [m](const ExperimentConfig& c) { return format_double(c.simulation.*m); }}});
        };

        t.push_back({"algorithm",
                     {[](ExperimentConfig& c, const std::string& v) { c.algorithm = parse_algorithm(v); },
                      [](const ExperimentConfig& c) { return to_string(c.algorithm); }}});
        t.push_back({"clusters",
                     {[](ExperimentConfig& c, const std::string& v) { c.clusters = parse_range(v); },
                      [](const ExperimentConfig& c) {
                          if (c.clusters.first == c.clusters.last) return std::to_string(c.clusters.first);
                          return std::to_string(c.clusters.first) + ".." +
                                 std::to_string(c.clusters.last);
                      }}});
        t.push_back({"epsilon", real_field(&ExperimentConfig::epsilon)});
        t.push_back({"eta", real_field(&ExperimentConfig::eta)});
        t.push_back({"rounds", integer_field(&ExperimentConfig::rounds)});
        t.push_back({"repetitions", integer_field(&ExperimentConfig::repetitions)});
        t.push_back({"seed", integer_field(&ExperimentConfig::seed)});
        t.push_back({"output_path",
                     {[](ExperimentConfig& c, const std::string& v) { c.output_path = v; },
                      [](const ExperimentConfig& c) { return c.output_path; }}});

        sim_int("simulation.n_centers", &SimulationConfig::n_centers);
        sim_int("simulation.rows_min", &SimulationConfig::rows_min);
        sim_int("simulation.rows_max", &SimulationConfig::rows_max);
        sim_int("simulation.p_total", &SimulationConfig::p_total);
        sim_int("simulation.n_common", &SimulationConfig::n_common);
        sim_real("simulation.presence_probability", &SimulationConfig::presence_probability);
        sim_real("simulation.baseline_lambda", &SimulationConfig::baseline_lambda);
        t.push_back({"simulation.censoring",
                     {[](ExperimentConfig& c, const std::string& v) {
                          c.simulation.censoring = parse_censoring(v);
                      },
                      [](const ExperimentConfig& c) {
                          return std::string(c.simulation.censoring == CensoringLaw::Individual
                                                 ? "individual"
                                                 : "population");
                      }}});
        sim_real("simulation.holdout_fraction", &SimulationConfig::holdout_fraction);

        t.push_back({"fit.max_iterations",
                     {[](ExperimentConfig& c, const std::string& v) {
                          c.fit.max_iterations = parse_integer<int>(v);
                      },
                      [](const ExperimentConfig& c) { return std::to_string(c.fit.max_iterations); }}});
        t.push_back({"fit.gradient_tolerance",
                     {[](ExperimentConfig& c, const std::string& v) {
                          c.fit.gradient_tolerance = parse_real(v);
                      },
                      [](const ExperimentConfig& c) { return format_double(c.fit.gradient_tolerance); }}});
        t.push_back({"fit.ridge_lambda",
                     {[](ExperimentConfig& c, const std::string& v) { c.fit.ridge_lambda = parse_real(v); },
                      [](const ExperimentConfig& c) { return format_double(c.fit.ridge_lambda); }}});
        t.push_back({"fit.step_halving_max",
                     {[](ExperimentConfig& c, const std::string& v) {
                          c.fit.step_halving_max = parse_integer<int>(v);
                      },
                      [](const ExperimentConfig& c) { return std::to_string(c.fit.step_halving_max); }}});
        t.push_back({"kmeans.restarts",
                     {[](ExperimentConfig& c, const std::string& v) {
                          c.kmeans.restarts = parse_integer<int>(v);
                      },
                      [](const ExperimentConfig& c) { return std::to_string(c.kmeans.restarts); }}});
        t.push_back({"kmeans.max_iterations",
                     {[](ExperimentConfig& c, const std::string& v) {
                          c.kmeans.max_iterations = parse_integer<int>(v);
                      },
                      [](const ExperimentConfig& c) { return std::to_string(c.kmeans.max_iterations); }}});

        t.push_back({"ifca.max_rounds", integer_field(&ExperimentConfig::ifca_max_rounds)});

        t.push_back({"event.groups",
                     {[](ExperimentConfig& c, const std::string& v) {
                          c.event_groups.clear();
                          for (const auto& item : split_list(v)) {
                              c.event_groups.push_back(parse_perturbation_group(item));
                          }
                      },
                      [](const ExperimentConfig& c) {
                          return join<PerturbationGroup>(
                              c.event_groups, [](const PerturbationGroup& g) { return to_string(g); });
                      }}});
        t.push_back({"event.mode",
                     {[](ExperimentConfig& c, const std::string& v) { c.event_mode = parse_event_mode(v); },
                      [](const ExperimentConfig& c) { return to_string(c.event_mode); }}});
        t.push_back({"event.aggregator",
                     {[](ExperimentConfig& c, const std::string& v) {
                          c.event_aggregator = parse_aggregator(v);
                      },
                      [](const ExperimentConfig& c) { return to_string(c.event_aggregator); }}});

        auto conv_int = [&](const std::string& key, int ConvergeSettings::*m) {
            t.push_back({key,
                         {[m](ExperimentConfig& c, const std::string& v) {
                              c.converge.*m = parse_integer<int>(v);
                          },
                          [m](const ExperimentConfig& c) { return std::to_string(c.converge.*m); }}});
        };
        auto conv_real = [&](const std::string& key, double ConvergeSettings::*m) {
            t.push_back({key,
                         {[m](ExperimentConfig& c, const std::string& v) {
                              c.converge.*m = parse_real(v);
                          },
                          [m](const ExperimentConfig& c) { return format_double(c.converge.*m); }}});
        };
        conv_int("converge.centers", &ConvergeSettings::centers);
        conv_int("converge.rows_min", &ConvergeSettings::rows_min);
        conv_int("converge.rows_max", &ConvergeSettings::rows_max);
        conv_int("converge.features", &ConvergeSettings::features);
        conv_real("converge.ridge_lambda", &ConvergeSettings::ridge_lambda);
        conv_int("converge.iterations", &ConvergeSettings::iterations);
        conv_real("converge.eta_fraction", &ConvergeSettings::eta_fraction);

        t.push_back({"bench.centers",
                     {[](ExperimentConfig& c, const std::string& v) {
                          c.bench.centers.clear();
                          for (const auto& item : split_list(v)) {
                              c.bench.centers.push_back(parse_integer<int>(item));
                          }
                      },
                      [](const ExperimentConfig& c) {
                          return join<int>(c.bench.centers, [](const int& n) { return std::to_string(n); });
                      }}});
        t.push_back({"bench.repeats",
                     {[](ExperimentConfig& c, const std::string& v) {
                          c.bench.repeats = parse_integer<int>(v);
                      },
                      [](const ExperimentConfig& c) { return std::to_string(c.bench.repeats); }}});
        return t;
    }();
    return table;
}

const std::string kTrueBetaPrefix = "simulation.true_beta.";

}  // namespace

std::vector<int> ClusterRange::values() const {
    std::vector<int> out;
    for (int c = first; c <= last; ++c) out.push_back(c);
    return out;
}

std::string to_string(Algorithm algorithm) {
    switch (algorithm) {
        case Algorithm::Alg1: return "alg1";
        case Algorithm::Alg2: return "alg2";
        case Algorithm::Ifca: return "ifca";
        case Algorithm::Event: return "event";
    }
    return "alg2";
}

std::string to_string(EventMode mode) {
    switch (mode) {
        case EventMode::Add: return "add";
        case EventMode::Remove: return "remove";
        case EventMode::Alternate: return "alternate";
    }
    return "add";
}

std::string to_string(Aggregator aggregator) {
    return aggregator == Aggregator::Alg1 ? "alg1" : "alg2";
}

void ExperimentConfig::validate() const {
    if (clusters.first < 1 || clusters.first > clusters.last) {
        throw InputError("clusters must be a count >= 1 or a range a..b with 1 <= a <= b");
    }
    if (!(epsilon >= 0.0)) throw InputError("epsilon must be >= 0");
    if (!(eta >= 0.0)) throw InputError("eta must be >= 0");
    if (rounds < 2) throw InputError("rounds must be >= 2");
    if (repetitions < 1) throw InputError("repetitions must be >= 1");
    if (ifca_max_rounds < 1) throw InputError("ifca.max_rounds must be >= 1");
    if (event_groups.empty()) throw InputError("event.groups must not be empty");
    if (kmeans.restarts < 1 || kmeans.max_iterations < 1) {
        throw InputError("kmeans.restarts and kmeans.max_iterations must be >= 1");
    }
    if (converge.centers < 1 || converge.features < 1 || converge.iterations < 0 ||
        converge.rows_min < 2 || converge.rows_min > converge.rows_max) {
        throw InputError("invalid converge settings");
    }
    if (!(converge.ridge_lambda > 0.0)) throw InputError("converge.ridge_lambda must be > 0");
    if (!(converge.eta_fraction > 0.0)) throw InputError("converge.eta_fraction must be > 0");
    if (bench.centers.empty() || bench.repeats < 1) throw InputError("invalid bench settings");
    for (int n : bench.centers) {
        if (n < 1) throw InputError("bench.centers entries must be >= 1");
    }
    fit.validate();
    simulation.validate();
}

FederationOptions ExperimentConfig::federation_options() const {
    FederationOptions options;
    options.fit = fit;
    options.kmeans = kmeans;
    return options;
}

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
    std::map<std::string, const Field*> index;
    for (const auto& [key, field] : fields()) index[key] = &field;

    ExperimentConfig config;
    std::set<std::string> seen;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(number);
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InputError(where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!seen.insert(key).second) throw InputError(where + ": duplicate key '" + key + "'");
        try {
            if (key.rfind(kTrueBetaPrefix, 0) == 0) {
                const std::string name = key.substr(kTrueBetaPrefix.size());
                if (name.empty()) throw InputError("empty feature name");
                config.simulation.true_beta[name] = parse_real(value);
                continue;
            }
            auto it = index.find(key);
            if (it == index.end()) throw InputError("unknown key '" + key + "'");
            it->second->set(config, value);
        } catch (const InputError& e) {
            throw InputError(where + ": " + e.what());
        }
    }
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config " + path);
    return parse_config(in, path);
}

std::string serialize_config(const ExperimentConfig& config) {
    std::ostringstream out;
    for (const auto& [key, field] : fields()) out << key << " = " << field.get(config) << '\n';
    for (const auto& [name, value] : config.simulation.true_beta) {
        out << kTrueBetaPrefix << name << " = " << format_double(value) << '\n';
    }
    return out.str();
}

}  // namespace fedcox
