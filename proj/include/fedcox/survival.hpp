#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fedcox/errors.hpp"

namespace fedcox {

/**
 * One center's right-censored cohort.
 *
 * Rows are subjects, columns follow `feature_names`. `event[i] == 1` marks
 * an observed event at `time[i]`, 0 marks censoring.
 */
struct SurvivalDataset {
    std::vector<std::string> feature_names;
    Eigen::MatrixXd covariates;
    Eigen::VectorXd time;
    std::vector<std::uint8_t> event;

    Eigen::Index rows() const { return covariates.rows(); }
    Eigen::Index features() const { return covariates.cols(); }
    std::size_t event_count() const;

    // Throws InputError when any structural invariant is violated.
    void validate() const;

    // Column index of `name`, or -1.
    Eigen::Index feature_index(const std::string& name) const;
};

using Coefficients = std::map<std::string, double>;

struct BaselineStep {
    double time;
    double hazard;
};

struct CoxModel {
    Coefficients coefficients;
    std::vector<BaselineStep> baseline;
    bool converged = false;
    int iterations = 0;
    double final_loss = 0.0;
    // Accepted-step loss history, starting with the loss at beta = 0.
    std::vector<double> loss_trace;

    // Coefficients laid out in `data`'s column order; features missing from
    // the model contribute 0.
    Eigen::VectorXd beta_for(const SurvivalDataset& data) const;
};

struct FitOptions {
    int max_iterations = 100;
    double gradient_tolerance = 1e-7;
    double ridge_lambda = 0.0;
    int step_halving_max = 30;

    void validate() const;
    bool operator==(const FitOptions&) const = default;
};

// Loss value with optional first and second derivatives.
struct LossEvaluation {
    double value = 0.0;
    // Set when the data had no events, so the partial-likelihood sum is empty.
    bool no_events = false;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
};

enum class Derivatives { None, Gradient, Hessian };

/// Negative log partial likelihood (Breslow ties) plus (ridge/2)|beta|^2,
/// with derivatives up to `order`. Risk set at t_i is {j : t_j >= t_i}.
LossEvaluation evaluate_loss(const SurvivalDataset& data, const Eigen::VectorXd& beta,
                             double ridge_lambda, Derivatives order);

double neg_log_partial_likelihood(const SurvivalDataset& data, const Eigen::VectorXd& beta,
                                  double ridge_lambda = 0.0);
Eigen::VectorXd gradient(const SurvivalDataset& data, const Eigen::VectorXd& beta,
                         double ridge_lambda = 0.0);
Eigen::MatrixXd hessian(const SurvivalDataset& data, const Eigen::VectorXd& beta,
                        double ridge_lambda = 0.0);

struct NewtonResult {
    Eigen::VectorXd beta;
    bool converged = false;
    int iterations = 0;
    double loss = 0.0;
    std::vector<double> loss_trace;
};

using Objective = std::function<LossEvaluation(const Eigen::VectorXd&, Derivatives)>;

/**
 * Damped Newton-Raphson on a convex objective.
 *
 * Each iteration solves H d = -g (LDLT, or an eigen pseudo-inverse when H is
 * singular) and halves the step until the loss does not increase. A full
 * step whose loss change is below 1e-12 relative (the loss's rounding level)
 * is also taken when it lowers |g|_inf.
 * Convergence is |g|_inf <= gradient_tolerance. Never throws on
 * non-convergence; the result carries converged = false instead.
 */
NewtonResult newton_minimize(const Objective& objective, Eigen::VectorXd start,
                             const FitOptions& options);

/// Fits CoxPH from beta = 0. Throws DegenerateFit when the data has no events.
/// A fit whose coefficients are still running off to infinity (separated
/// data) is returned with converged = false.
CoxModel fit_cox(const SurvivalDataset& data, const FitOptions& options = {});

std::vector<BaselineStep> breslow_baseline(const SurvivalDataset& data,
                                           const Eigen::VectorXd& beta);

/// Harrell's C. Pair (i, j) is comparable when t_i < t_j and subject i had an
/// event; tied risk scores earn half credit. 0.5 when nothing is comparable.
double concordance_index(const SurvivalDataset& data, const Eigen::VectorXd& beta);

// Risk-score form, shared by model evaluation paths.
double concordance_index(const Eigen::VectorXd& time, const std::vector<std::uint8_t>& event,
                         const Eigen::VectorXd& risk);

}  // namespace fedcox
