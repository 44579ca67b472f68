#pragma once

#include <vector>

namespace fedcox {

struct TTestResult {
    double t_statistic = 0.0;
    double p_value = 1.0;
    int degrees_of_freedom = 0;
};

/// Two-sided paired t-test of mean(a - b) = 0. With zero spread the statistic
/// is 0 (p = 1) for a zero mean and +-inf (p = 0) otherwise.
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

double mean(const std::vector<double>& values);
// Standard error of the mean (sample sd / sqrt(n)); 0 for fewer than two values.
double standard_error(const std::vector<double>& values);

}  // namespace fedcox
