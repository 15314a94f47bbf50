#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "navae/errors.hpp"
#include "navae/specialfn.hpp"
#include "support/gen.hpp"

using namespace navae;

// Reference values computed with mpmath at 40 digits.
TEST_CASE("normal cdf reference values") {
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(normal_cdf(1.644853626951) == doctest::Approx(0.95).epsilon(1e-12));
    CHECK(std::abs(normal_cdf(1.644853626951) - 0.94999999999995125) < 1e-14);
    const double t = normal_cdf(-30.0);
    CHECK(t > 0.0);
    CHECK(t < 1e-100);
    CHECK(testgen::rel_diff(t, 4.906713927148187e-198) < 1e-12);
    CHECK(normal_cdf(-37.0) > 0.0);
    CHECK(normal_sf(30.0) == normal_cdf(-30.0));
}

TEST_CASE("normal cdf symmetry and monotonicity") {
    testgen::Gen g(11);
    double prev = -1.0;
    for (double x = -38.0; x <= 38.0; x += 0.01) {
        const double c = normal_cdf(x);
        CHECK(c >= prev);
        prev = c;
    }
    for (int i = 0; i < 2000; ++i) {
        const double x = g.uniform(-8.0, 8.0);
        CHECK(std::abs(normal_cdf(-x) - (1.0 - normal_cdf(x))) <= 1e-15);
    }
}

TEST_CASE("normal functions reject non-finite input") {
    CHECK_THROWS_AS(normal_cdf(std::numeric_limits<double>::quiet_NaN()), DomainError);
    CHECK_THROWS_AS(normal_cdf(std::numeric_limits<double>::infinity()), DomainError);
    CHECK_THROWS_AS(normal_pdf(std::numeric_limits<double>::quiet_NaN()), DomainError);
}

TEST_CASE("normal quantile reference values") {
    CHECK(normal_quantile(0.5) == 0.0);
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
    CHECK(normal_quantile(0.95) == doctest::Approx(1.6448536269514727).epsilon(1e-14));
    CHECK(normal_quantile(0.974372) == doctest::Approx(1.9493302357253028).epsilon(1e-13));
    CHECK(normal_quantile(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-14));
    CHECK(normal_quantile(0.3) == doctest::Approx(-0.5244005127080408).epsilon(1e-14));
    CHECK(normal_quantile_upper(1e-6) == doctest::Approx(4.753424308822899).epsilon(1e-13));
}

TEST_CASE("normal quantile domain") {
    CHECK_THROWS_AS(normal_quantile(0.0), DomainError);
    CHECK_THROWS_AS(normal_quantile(1.0), DomainError);
    CHECK_THROWS_AS(normal_quantile(-0.1), DomainError);
    CHECK_THROWS_AS(normal_quantile(1.5), DomainError);
    CHECK_THROWS_AS(normal_quantile(std::numeric_limits<double>::quiet_NaN()), DomainError);
}

TEST_CASE("quantile round trip, antisymmetry and monotonicity on random grids") {
    testgen::Gen g(2024);
    std::vector<double> ps;
    for (int i = 0; i < 10000; ++i) {
        // Log-uniform in the tails, uniform in the body.
        double p = i % 2 ? g.uniform(1e-8, 1.0 - 1e-8) : g.log_uniform(1e-8, 0.5);
        if (i % 4 == 0) p = 1.0 - p;
        ps.push_back(p);
    }
    for (double p : ps) {
        CHECK(std::abs(normal_cdf(normal_quantile(p)) - p) <= 1e-12);
    }
    // 1 - p is exact for p in [0.5, 1).
    for (double p : ps) {
        const double hi = std::max(p, 0.5);
        CHECK(std::abs(normal_quantile(hi) + normal_quantile(1.0 - hi)) <= 1e-12);
    }
    std::sort(ps.begin(), ps.end());
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
    for (std::size_t i = 1; i < ps.size(); ++i) CHECK(normal_quantile(ps[i - 1]) < normal_quantile(ps[i]));
}

TEST_CASE("density is the derivative of the cdf") {
    const double h = 1e-5;
    for (double x = -6.0; x <= 6.0; x += 0.05) {
        const double fd = (normal_cdf(x + h) - normal_cdf(x - h)) / (2.0 * h);
        CHECK(std::abs(fd - normal_pdf(x)) <= 1e-8);
    }
}

TEST_CASE("student quantiles") {
    CHECK(student_quantile(0.975, 1) == doctest::Approx(12.706204736174705).epsilon(1e-10));
    CHECK(student_quantile(0.95, 5) == doctest::Approx(2.015048373333024).epsilon(1e-10));
    CHECK(student_quantile(0.995, 30) == doctest::Approx(2.7499956535672253).epsilon(1e-10));
    CHECK(student_quantile(0.9, 3) == doctest::Approx(1.6377443536962101).epsilon(1e-10));
    CHECK(student_quantile(0.975, 999999) == doctest::Approx(1.9599663568164793).epsilon(1e-9));
    CHECK(student_quantile(0.5, 7) == doctest::Approx(0.0));
    CHECK(student_quantile(0.025, 1) == doctest::Approx(-12.706204736174705).epsilon(1e-10));
    for (double dof : {1.0, 2.0, 4.0, 17.0, 200.0}) {
        for (double p : {0.6, 0.9, 0.99, 0.9999}) {
            CHECK(std::abs(student_cdf(student_quantile(p, dof), dof) - p) <= 1e-10);
        }
    }
}

TEST_CASE("incomplete beta edge values") {
    CHECK(incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(incomplete_beta(2.0, 3.0, 1.0) == 1.0);
    // I_x(1, 1) = x and I_x(a, 1) = x^a.
    CHECK(incomplete_beta(1.0, 1.0, 0.3) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(incomplete_beta(2.5, 1.0, 0.4) == doctest::Approx(std::pow(0.4, 2.5)).epsilon(1e-13));
}
