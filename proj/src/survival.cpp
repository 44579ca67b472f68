#include "fedcox/survival.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <numeric>
#include <set>

namespace fedcox {

namespace {

void check_beta(const SurvivalDataset& data, const Eigen::VectorXd& beta) {
    if (beta.size() != data.features()) {
        throw InputError("beta has " + std::to_string(beta.size()) + " entries but dataset has " +
                         std::to_string(data.features()) + " features");
    }
}

// Subjects ordered by decreasing time; equal times keep index order.
std::vector<Eigen::Index> descending_time_order(const Eigen::VectorXd& time) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(time.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return time[a] > time[b]; });
    return order;
}

// Running risk-set sums of exp(eta - shift), rescaled whenever a larger eta
// arrives so no term overflows.
struct RiskSetSums {
    RiskSetSums(Eigen::Index p, Derivatives order) : order(order) {
        if (order != Derivatives::None) s1 = Eigen::VectorXd::Zero(p);
        if (order == Derivatives::Hessian) s2 = Eigen::MatrixXd::Zero(p, p);
    }

    void add(double eta, const Eigen::VectorXd& x) {
        if (eta > shift) {
            const double scale = std::exp(shift - eta);
            s0 *= scale;
            if (order != Derivatives::None) s1 *= scale;
            if (order == Derivatives::Hessian) s2.triangularView<Eigen::Lower>() *= scale;
            shift = eta;
        }
        const double w = std::exp(eta - shift);
        s0 += w;
        if (order != Derivatives::None) s1.noalias() += w * x;
        if (order == Derivatives::Hessian) s2.selfadjointView<Eigen::Lower>().rankUpdate(x, w);
    }

    Derivatives order;
    double shift = -std::numeric_limits<double>::infinity();
    double s0 = 0.0;
    Eigen::VectorXd s1;
    Eigen::MatrixXd s2;
};

}  // namespace

std::size_t SurvivalDataset::event_count() const {
    return static_cast<std::size_t>(std::count_if(event.begin(), event.end(),
                                                  [](std::uint8_t e) { return e != 0; }));
}

void SurvivalDataset::validate() const {
    const auto n = covariates.rows();
    if (time.size() != n || static_cast<Eigen::Index>(event.size()) != n) {
        throw InputError("covariate rows, time and event lengths differ");
    }
    if (static_cast<Eigen::Index>(feature_names.size()) != covariates.cols()) {
        throw InputError("feature name count does not match covariate columns");
    }
    std::set<std::string> seen;
    for (const auto& name : feature_names) {
        if (!seen.insert(name).second) throw InputError("duplicate feature name: " + name);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(time[i]) || time[i] < 0.0) {
            throw InputError("time must be finite and nonnegative (row " + std::to_string(i) + ")");
        }
        if (event[static_cast<std::size_t>(i)] > 1) {
            throw InputError("event must be 0 or 1 (row " + std::to_string(i) + ")");
        }
    }
}

Eigen::Index SurvivalDataset::feature_index(const std::string& name) const {
    auto it = std::find(feature_names.begin(), feature_names.end(), name);
    return it == feature_names.end() ? -1 : std::distance(feature_names.begin(), it);
}

Eigen::VectorXd CoxModel::beta_for(const SurvivalDataset& data) const {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(data.features());
    for (Eigen::Index j = 0; j < data.features(); ++j) {
        auto it = coefficients.find(data.feature_names[static_cast<std::size_t>(j)]);
        if (it != coefficients.end()) beta[j] = it->second;
    }
    return beta;
}

void FitOptions::validate() const {
    if (max_iterations < 1) throw InputError("max_iterations must be >= 1");
    if (!(gradient_tolerance > 0.0)) throw InputError("gradient_tolerance must be > 0");
    if (!(ridge_lambda >= 0.0)) throw InputError("ridge_lambda must be >= 0");
    if (step_halving_max < 0) throw InputError("step_halving_max must be >= 0");
}

LossEvaluation evaluate_loss(const SurvivalDataset& data, const Eigen::VectorXd& beta,
                             double ridge_lambda, Derivatives order) {
    check_beta(data, beta);
    if (!(ridge_lambda >= 0.0)) throw InputError("ridge_lambda must be >= 0");

    const Eigen::Index p = data.features();
    const Eigen::VectorXd eta = data.covariates * beta;
    const auto sorted = descending_time_order(data.time);

    LossEvaluation out;
    out.no_events = data.event_count() == 0;
    if (order != Derivatives::None) out.gradient = Eigen::VectorXd::Zero(p);
    if (order == Derivatives::Hessian) out.hessian = Eigen::MatrixXd::Zero(p, p);

    RiskSetSums sums(p, order);
    Eigen::VectorXd x(p);
    Eigen::VectorXd event_x_sum(p);
    Eigen::VectorXd mean(p);

    std::size_t k = 0;
    while (k < sorted.size()) {
        const double t = data.time[sorted[k]];
        std::size_t end = k;
        int events = 0;
        double event_eta_sum = 0.0;
        if (order != Derivatives::None) event_x_sum.setZero();
        for (; end < sorted.size() && data.time[sorted[end]] == t; ++end) {
            const Eigen::Index j = sorted[end];
            x = data.covariates.row(j).transpose();
            sums.add(eta[j], x);
            if (data.event[static_cast<std::size_t>(j)]) {
                ++events;
                event_eta_sum += eta[j];
                if (order != Derivatives::None) event_x_sum += x;
            }
        }
        if (events > 0) {
            const double d = events;
            out.value += d * (std::log(sums.s0) + sums.shift) - event_eta_sum;
            if (order != Derivatives::None) {
                mean = sums.s1 / sums.s0;
                out.gradient.noalias() += d * mean - event_x_sum;
            }
            if (order == Derivatives::Hessian) {
                out.hessian.triangularView<Eigen::Lower>() += (d / sums.s0) * sums.s2;
                out.hessian.selfadjointView<Eigen::Lower>().rankUpdate(mean, -d);
            }
        }
        k = end;
    }

    if (ridge_lambda > 0.0) {
        out.value += 0.5 * ridge_lambda * beta.squaredNorm();
        if (order != Derivatives::None) out.gradient += ridge_lambda * beta;
        if (order == Derivatives::Hessian) out.hessian.diagonal().array() += ridge_lambda;
    }
    if (order == Derivatives::Hessian) {
        out.hessian.triangularView<Eigen::StrictlyUpper>() = out.hessian.transpose();
    }
    return out;
}

double neg_log_partial_likelihood(const SurvivalDataset& data, const Eigen::VectorXd& beta,
                                  double ridge_lambda) {
    return evaluate_loss(data, beta, ridge_lambda, Derivatives::None).value;
}

Eigen::VectorXd gradient(const SurvivalDataset& data, const Eigen::VectorXd& beta,
                         double ridge_lambda) {
    return evaluate_loss(data, beta, ridge_lambda, Derivatives::Gradient).gradient;
}

Eigen::MatrixXd hessian(const SurvivalDataset& data, const Eigen::VectorXd& beta,
                        double ridge_lambda) {
    return evaluate_loss(data, beta, ridge_lambda, Derivatives::Hessian).hessian;
}

namespace {

// Newton direction -H^+ g. Falls back to an eigen-decomposition pseudo-inverse
// when H is not numerically positive definite, which zeroes the step along
// directions the data carries no information about.
Eigen::VectorXd newton_direction(const Eigen::MatrixXd& h, const Eigen::VectorXd& g) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        const double min_pivot = ldlt.vectorD().minCoeff();
        const double max_pivot = ldlt.vectorD().maxCoeff();
        if (min_pivot > 1e-10 * std::max(max_pivot, 1.0)) {
            return ldlt.solve(-g);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    const Eigen::VectorXd& values = eig.eigenvalues();
    const double cutoff = 1e-10 * std::max(values.cwiseAbs().maxCoeff(), 1.0);
    Eigen::VectorXd coords = eig.eigenvectors().transpose() * (-g);
    for (Eigen::Index i = 0; i < coords.size(); ++i) {
        coords[i] = values[i] > cutoff ? coords[i] / values[i] : 0.0;
    }
    return eig.eigenvectors() * coords;
}

}  // namespace

constexpr double kLossResolution = 1e-12;

NewtonResult newton_minimize(const Objective& objective, Eigen::VectorXd start,
                             const FitOptions& options) {
    options.validate();
    NewtonResult result;
    result.beta = std::move(start);
    LossEvaluation current = objective(result.beta, Derivatives::Hessian);
    result.loss_trace.push_back(current.value);

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        if (current.gradient.size() == 0 ||
            current.gradient.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
            result.converged = true;
            break;
        }
        const Eigen::VectorXd direction = newton_direction(current.hessian, current.gradient);
        if (!direction.allFinite() || direction.squaredNorm() == 0.0) break;

        double step = 1.0;
        bool accepted = false;
        Eigen::VectorXd candidate;
        std::optional<LossEvaluation> full;
        for (int halving = 0; halving <= options.step_halving_max; ++halving) {
            candidate = result.beta + step * direction;
            const double value = objective(candidate, Derivatives::None).value;
            if (std::isfinite(value) && value <= current.value) {
                accepted = true;
                break;
            }
            // Near the optimum the decrease can fall below the loss's rounding
            // level; a full step that is flat to that level and shrinks the
            // gradient is still progress.
            if (halving == 0 && std::isfinite(value) &&
                value - current.value <= kLossResolution * (1.0 + std::abs(current.value))) {
                LossEvaluation trial = objective(candidate, Derivatives::Hessian);
                if (trial.gradient.lpNorm<Eigen::Infinity>() <
                    current.gradient.lpNorm<Eigen::Infinity>()) {
                    full = std::move(trial);
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!accepted) break;

        result.beta = candidate;
        current = full ? std::move(*full) : objective(result.beta, Derivatives::Hessian);
        result.loss_trace.push_back(current.value);
        result.iterations = iter + 1;
    }
    if (!result.converged && current.gradient.size() > 0 &&
        current.gradient.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
        result.converged = true;
    }
    result.loss = current.value;
    return result;
}

CoxModel fit_cox(const SurvivalDataset& data, const FitOptions& options) {
    data.validate();
    options.validate();
    if (data.features() < 1) throw InputError("dataset has no features");
    if (data.event_count() == 0) throw DegenerateFit("dataset has no observed events");

    const Objective objective = [&](const Eigen::VectorXd& beta, Derivatives order) {
        return evaluate_loss(data, beta, options.ridge_lambda, order);
    };
    NewtonResult fit =
        newton_minimize(objective, Eigen::VectorXd::Zero(data.features()), options);

    if (fit.converged) {
        // Under monotone likelihood the gradient and Hessian vanish together, so
        // the tolerance is met while the next Newton step is still O(1).
        const LossEvaluation at = objective(fit.beta, Derivatives::Hessian);
        const Eigen::VectorXd next = newton_direction(at.hessian, at.gradient);
        for (Eigen::Index j = 0; j < next.size(); ++j) {
            if (std::abs(next[j]) > 1e-4 * std::max(1.0, std::abs(fit.beta[j]))) {
                fit.converged = false;
            }
        }
    }

    CoxModel model;
    for (Eigen::Index j = 0; j < data.features(); ++j) {
        model.coefficients[data.feature_names[static_cast<std::size_t>(j)]] = fit.beta[j];
    }
    model.baseline = breslow_baseline(data, fit.beta);
    model.converged = fit.converged;
    model.iterations = fit.iterations;
    model.final_loss = fit.loss;
    model.loss_trace = std::move(fit.loss_trace);
    return model;
}

std::vector<BaselineStep> breslow_baseline(const SurvivalDataset& data,
                                           const Eigen::VectorXd& beta) {
    check_beta(data, beta);
    const Eigen::VectorXd eta = data.covariates * beta;
    const auto sorted = descending_time_order(data.time);

    std::vector<BaselineStep> steps;
    RiskSetSums sums(data.features(), Derivatives::None);
    const Eigen::VectorXd unused;
    std::size_t k = 0;
    while (k < sorted.size()) {
        const double t = data.time[sorted[k]];
        int events = 0;
        for (; k < sorted.size() && data.time[sorted[k]] == t; ++k) {
            sums.add(eta[sorted[k]], unused);
            events += data.event[static_cast<std::size_t>(sorted[k])] ? 1 : 0;
        }
        if (events > 0) {
            steps.push_back({t, events * std::exp(-sums.shift) / sums.s0});
        }
    }
    std::reverse(steps.begin(), steps.end());
    return steps;
}

double concordance_index(const SurvivalDataset& data, const Eigen::VectorXd& beta) {
    check_beta(data, beta);
    const Eigen::VectorXd risk = data.covariates * beta;
    return concordance_index(data.time, data.event, risk);
}

double concordance_index(const Eigen::VectorXd& time, const std::vector<std::uint8_t>& event,
                         const Eigen::VectorXd& risk) {
    const auto n = static_cast<std::size_t>(time.size());
    if (event.size() != n || static_cast<std::size_t>(risk.size()) != n) {
        throw InputError("time, event and risk lengths differ");
    }

    // Dense ranks of the risk scores for a Fenwick tree over "later" subjects.
    std::vector<double> levels(risk.data(), risk.data() + risk.size());
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    std::vector<std::size_t> rank(n);
    for (std::size_t i = 0; i < n; ++i) {
        rank[i] = static_cast<std::size_t>(
            std::lower_bound(levels.begin(), levels.end(), risk[static_cast<Eigen::Index>(i)]) -
            levels.begin());
    }
    std::vector<std::uint64_t> tree(levels.size() + 1, 0);
    auto insert = [&](std::size_t r) {
        for (std::size_t i = r + 1; i < tree.size(); i += i & (~i + 1)) ++tree[i];
    };
    // Number of inserted subjects with rank < r.
    auto count_below = [&](std::size_t r) {
        std::uint64_t total = 0;
        for (std::size_t i = r; i > 0; i -= i & (~i + 1)) total += tree[i];
        return total;
    };

    const auto sorted = descending_time_order(time);
    std::uint64_t inserted = 0;
    double concordant = 0.0;
    double comparable = 0.0;
    std::size_t k = 0;
    while (k < n) {
        const double t = time[sorted[k]];
        std::size_t end = k;
        while (end < n && time[sorted[end]] == t) ++end;
        for (std::size_t m = k; m < end; ++m) {
            const auto i = static_cast<std::size_t>(sorted[m]);
            if (!event[i]) continue;
            const std::uint64_t below = count_below(rank[i]);
            const std::uint64_t tied = count_below(rank[i] + 1) - below;
            concordant += static_cast<double>(below) + 0.5 * static_cast<double>(tied);
            comparable += static_cast<double>(inserted);
        }
        for (std::size_t m = k; m < end; ++m) {
            insert(rank[static_cast<std::size_t>(sorted[m])]);
            ++inserted;
        }
        k = end;
    }
    return comparable > 0.0 ? concordant / comparable : 0.5;
}

}  // namespace fedcox
