#include "fedcox/stats.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "fedcox/errors.hpp"

namespace fedcox {

double mean(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

namespace {

double sample_variance(const std::vector<double>& values, double m) {
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return ss / static_cast<double>(values.size() - 1);
}

}  // namespace

double standard_error(const std::vector<double>& values) {
    if (values.size() < 2) return 0.0;
    const double m = mean(values);
    return std::sqrt(sample_variance(values, m) / static_cast<double>(values.size()));
}

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw InputError("paired t-test needs samples of equal length");
    if (a.size() < 2) throw InputError("paired t-test needs at least two pairs");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];

    TTestResult out;
    out.degrees_of_freedom = static_cast<int>(d.size()) - 1;
    const double m = mean(d);
    const double se = std::sqrt(sample_variance(d, m) / static_cast<double>(d.size()));
    if (se == 0.0) {
        if (m == 0.0) return out;
        out.t_statistic = m > 0 ? std::numeric_limits<double>::infinity()
                                : -std::numeric_limits<double>::infinity();
        out.p_value = 0.0;
        return out;
    }
    out.t_statistic = m / se;
    boost::math::students_t dist(out.degrees_of_freedom);
    out.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(out.t_statistic)));
    return out;
}

}  // namespace fedcox
