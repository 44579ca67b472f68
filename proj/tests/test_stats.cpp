#include <doctest.h>

#include <cmath>
#include <limits>

#include "fedcox/errors.hpp"
#include "fedcox/stats.hpp"

using namespace fedcox;

// Reference values computed independently with scipy.stats.ttest_rel.
TEST_CASE("paired t-test matches reference values") {
    struct Case {
        std::vector<double> a, b;
        double t, p;
        int df;
    };
    const std::vector<Case> cases{
        {{1, 2, 3, 4, 5}, {0, 0, 0, 0, 0}, 4.242640687119285, 0.013235599563682695, 4},
        {{0.71, 0.69, 0.74, 0.70, 0.73, 0.72},
         {0.70, 0.70, 0.71, 0.69, 0.70, 0.71},
         2.1693045781865616,
         0.0822151830776448,
         5},
        {{1, 2}, {2, 1}, 0.0, 1.0, 1},
    };
    for (const auto& c : cases) {
        const auto r = paired_t_test(c.a, c.b);
        CHECK(r.t_statistic == doctest::Approx(c.t).epsilon(1e-10));
        CHECK(r.p_value == doctest::Approx(c.p).epsilon(1e-8));
        CHECK(r.degrees_of_freedom == c.df);
    }
}

TEST_CASE("swapping the samples flips the sign and keeps p") {
    const std::vector<double> a{3, 1, 4, 1, 5, 9, 2, 6};
    const std::vector<double> b{2, 7, 1, 8, 2, 8, 1, 8};
    const auto ab = paired_t_test(a, b);
    const auto ba = paired_t_test(b, a);
    CHECK(ab.t_statistic == -ba.t_statistic);
    CHECK(ab.p_value == doctest::Approx(ba.p_value).epsilon(1e-14));
    CHECK(ab.p_value > 0.0);
    CHECK(ab.p_value <= 1.0);
}

TEST_CASE("zero spread") {
    const auto same = paired_t_test({1, 2, 3}, {1, 2, 3});
    CHECK(same.t_statistic == 0.0);
    CHECK(same.p_value == 1.0);
    const auto shifted = paired_t_test({2, 3, 4}, {1, 2, 3});
    CHECK(shifted.t_statistic == std::numeric_limits<double>::infinity());
    CHECK(shifted.p_value == 0.0);
    const auto down = paired_t_test({1, 2, 3}, {2, 3, 4});
    CHECK(down.t_statistic == -std::numeric_limits<double>::infinity());
}

TEST_CASE("bad inputs") {
    CHECK_THROWS_AS(paired_t_test({1, 2}, {1}), InputError);
    CHECK_THROWS_AS(paired_t_test({1}, {1}), InputError);
}

TEST_CASE("mean and standard error") {
    CHECK(mean({1, 2, 3, 4}) == 2.5);
    CHECK(standard_error({1, 2, 3, 4}) == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
    CHECK(standard_error({7}) == 0.0);
    CHECK(standard_error({}) == 0.0);
}
