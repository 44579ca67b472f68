// Independent reference implementations used as test oracles. Nothing here
// calls into the library beyond the dataset type.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "fedcox/survival.hpp"

namespace oracle {

using fedcox::SurvivalDataset;

inline SurvivalDataset make_dataset(const std::vector<double>& time, const std::vector<int>& event,
                                    const std::vector<std::vector<double>>& rows) {
    SurvivalDataset d;
    const auto n = static_cast<Eigen::Index>(time.size());
    const auto p = rows.empty() ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.front().size());
    for (Eigen::Index j = 0; j < p; ++j) d.feature_names.push_back("f" + std::to_string(j + 1));
    d.covariates.resize(n, p);
    d.time.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d.time[i] = time[static_cast<std::size_t>(i)];
        d.event.push_back(static_cast<std::uint8_t>(event[static_cast<std::size_t>(i)]));
        for (Eigen::Index j = 0; j < p; ++j) {
            d.covariates(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    return d;
}

// Six subjects, one binary feature, four events.
inline SurvivalDataset six_subjects() {
    return make_dataset({1, 2, 3, 4, 5, 6}, {1, 1, 0, 1, 1, 0}, {{1}, {0}, {1}, {0}, {1}, {0}});
}

// Random dataset; `tie_levels` > 0 draws times from that many integer values so ties occur.
inline SurvivalDataset random_dataset(std::mt19937_64& rng, int n, int p, int tie_levels = 0,
                                      double event_rate = 0.7) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> level(1, std::max(1, tie_levels));
    std::vector<double> time;
    std::vector<int> event;
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < n; ++i) {
        time.push_back(tie_levels > 0 ? double(level(rng)) : unit(rng) * 10.0);
        event.push_back(unit(rng) < event_rate ? 1 : 0);
        std::vector<double> row;
        for (int j = 0; j < p; ++j) row.push_back(normal(rng));
        rows.push_back(row);
    }
    return make_dataset(time, event, rows);
}

// Direct double loop over events and their risk sets.
inline double loss(const SurvivalDataset& d, const Eigen::VectorXd& beta, double ridge = 0.0) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        if (!d.event[static_cast<std::size_t>(i)]) continue;
        double risk = 0.0;
        for (Eigen::Index j = 0; j < d.rows(); ++j) {
            if (d.time[j] >= d.time[i]) risk += std::exp(d.covariates.row(j).dot(beta));
        }
        total -= d.covariates.row(i).dot(beta) - std::log(risk);
    }
    return total + 0.5 * ridge * beta.squaredNorm();
}

inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h = 1e-6) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        Eigen::VectorXd up = x, down = x;
        up[j] += h;
        down[j] -= h;
        g[j] = (f(up) - f(down)) / (2 * h);
    }
    return g;
}

inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& g,
                                   const Eigen::VectorXd& x, double h = 1e-5) {
    Eigen::MatrixXd out(x.size(), x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        Eigen::VectorXd up = x, down = x;
        up[j] += h;
        down[j] -= h;
        out.col(j) = (g(up) - g(down)) / (2 * h);
    }
    return out;
}

// |a - b| / max(1, |b|), max over entries.
inline double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / std::max(1.0, std::abs(b(i, j))));
        }
    }
    return worst;
}

// Grid minimizer of a one-feature loss over [lo, hi].
inline double grid_argmin(const SurvivalDataset& d, double lo, double hi, double step) {
    double best = std::numeric_limits<double>::infinity();
    double arg = lo;
    const long steps = std::lround((hi - lo) / step);
    for (long k = 0; k <= steps; ++k) {
        const double b = lo + k * step;
        const double v = loss(d, Eigen::VectorXd::Constant(1, b));
        if (v < best) {
            best = v;
            arg = b;
        }
    }
    return arg;
}

// Harrell's C by enumerating all ordered pairs.
inline double pairwise_cindex(const Eigen::VectorXd& time, const std::vector<std::uint8_t>& event,
                              const Eigen::VectorXd& risk) {
    double concordant = 0.0;
    long comparable = 0;
    for (Eigen::Index i = 0; i < time.size(); ++i) {
        if (!event[static_cast<std::size_t>(i)]) continue;
        for (Eigen::Index j = 0; j < time.size(); ++j) {
            if (!(time[i] < time[j])) continue;
            ++comparable;
            if (risk[i] > risk[j]) concordant += 1.0;
            else if (risk[i] == risk[j]) concordant += 0.5;
        }
    }
    return comparable == 0 ? 0.5 : concordant / static_cast<double>(comparable);
}

struct Step {
    double time;
    double hazard;
};

// d_i / sum_{t_j >= t_i} exp(beta'x_j) at each distinct event time.
inline std::vector<Step> breslow(const SurvivalDataset& d, const Eigen::VectorXd& beta) {
    std::vector<double> times;
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        if (d.event[static_cast<std::size_t>(i)]) times.push_back(d.time[i]);
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    std::vector<Step> out;
    for (double t : times) {
        double deaths = 0.0;
        double risk = 0.0;
        for (Eigen::Index j = 0; j < d.rows(); ++j) {
            if (d.time[j] == t && d.event[static_cast<std::size_t>(j)]) deaths += 1.0;
            if (d.time[j] >= t) risk += std::exp(d.covariates.row(j).dot(beta));
        }
        out.push_back({t, deaths / risk});
    }
    return out;
}

// Minimum Hamming k-means objective over every labelling of the vectors into c groups.
inline int exhaustive_kmeans_optimum(const std::vector<std::vector<std::uint8_t>>& vectors, int c) {
    const std::size_t n = vectors.size();
    const std::size_t bits = vectors.front().size();
    std::vector<int> labels(n, 0);
    int best = std::numeric_limits<int>::max();
    while (true) {
        int cost = 0;
        for (int k = 0; k < c; ++k) {
            for (std::size_t b = 0; b < bits; ++b) {
                int ones = 0, members = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (labels[i] != k) continue;
                    ++members;
                    ones += vectors[i][b];
                }
                cost += std::min(ones, members - ones);
            }
        }
        best = std::min(best, cost);
        std::size_t pos = 0;
        while (pos < n && ++labels[pos] == c) labels[pos++] = 0;
        if (pos == n) break;
    }
    return best;
}

}  // namespace oracle
