#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "navae/edgeworth_bounds.hpp"
#include "navae/errors.hpp"
#include "navae/interval.hpp"
#include "navae/rules.hpp"

using namespace navae;

TEST_CASE("berry-esseen values") {
    CHECK(delta_berry_esseen(100, 1.0) == doctest::Approx(0.04690).epsilon(1e-14));
    CHECK(delta_berry_esseen(1000, 9.0) == doctest::Approx(0.077064).epsilon(1e-5));
    CHECK(delta_berry_esseen(1000, 9.0) == doctest::Approx(0.07706456384097687).epsilon(1e-14));
    CHECK(delta_berry_esseen(5000, 9.0) == doctest::Approx(0.034464).epsilon(1e-4));
    // Exact evaluation order.
    CHECK(delta_berry_esseen(777, 3.3) == 0.4690 * std::pow(3.3, 0.75) / std::sqrt(777.0));
}

TEST_CASE("edgeworth leading-term values") {
    CHECK(delta_edgeworth_leading(100, 1.0) == doctest::Approx(0.0399).epsilon(1e-14));
    CHECK(delta_edgeworth_leading(50000, 9.0) == doctest::Approx(0.005528152188432694).epsilon(1e-13));
    CHECK(delta_edgeworth_leading(1000, 9.0) == doctest::Approx(0.03908993899872011).epsilon(1e-13));
    CHECK(delta_edgeworth_continuous_leading(1000, 1.0) == doctest::Approx(0.00020965).epsilon(1e-13));
    CHECK(delta_edgeworth_continuous_leading(10000, 9.0) == doctest::Approx(0.000215055).epsilon(1e-12));
    CHECK(delta_edgeworth_continuous_leading(100, 9.0) == doctest::Approx(0.0215055).epsilon(1e-12));
}

TEST_CASE("certification flags") {
    CHECK(DeltaProvider::berry_esseen().certified());
    CHECK_FALSE(DeltaProvider::edgeworth_leading().certified());
    CHECK_FALSE(DeltaProvider::edgeworth_continuous_leading().certified());
    CHECK(DeltaProvider::constant(0.01, true).certified());
    CHECK_FALSE(DeltaProvider::constant(0.01, false).certified());
    const auto mixed = DeltaProvider::min_of({DeltaProvider::berry_esseen(), DeltaProvider::edgeworth_leading()});
    CHECK_FALSE(mixed.certified());
    const auto certified = DeltaProvider::min_of({DeltaProvider::berry_esseen(), DeltaProvider::constant(0.5)});
    CHECK(certified.certified());
}

TEST_CASE("dispatch") {
    const auto mixed = DeltaProvider::min_of({DeltaProvider::berry_esseen(), DeltaProvider::edgeworth_leading()});
    CHECK(delta_of(mixed, 1000, 9.0) == delta_edgeworth_leading(1000, 9.0));
    CHECK(delta_of(DeltaProvider::berry_esseen(), 1000, 9.0) == doctest::Approx(0.077064).epsilon(1e-5));
    const auto c = DeltaProvider::constant(0.01);
    CHECK(c(1, 1.0) == 0.01);
    CHECK(c(123456, 42.0) == 0.01);
    // A certified-only minimum never goes below BE when BE is its smallest member.
    const auto be_only = DeltaProvider::min_of({DeltaProvider::berry_esseen(), DeltaProvider::constant(1.0)});
    for (std::int64_t n : {10, 1000, 38707, 100000}) CHECK(be_only(n, 9.0) == delta_berry_esseen(n, 9.0));
}

TEST_CASE("user functions are validated") {
    const auto bad = DeltaProvider::user([](std::int64_t, double) { return 0.0; }, true);
    CHECK_THROWS_AS(bad(10, 2.0), ConfigError);
    const auto nan = DeltaProvider::user([](std::int64_t, double) { return std::nan(""); }, true);
    CHECK_THROWS_AS(nan(10, 2.0), ConfigError);
    CHECK_THROWS(DeltaProvider::berry_esseen()(0, 2.0));
    CHECK_THROWS(DeltaProvider::berry_esseen()(10, 0.5));
}

TEST_CASE("monotone in n and K") {
    const DeltaProvider providers[] = {DeltaProvider::berry_esseen(), DeltaProvider::edgeworth_leading(),
                                       DeltaProvider::edgeworth_continuous_leading()};
    for (const auto& d : providers) {
        for (double K : {1.0, 3.0, 9.0, 50.0}) {
            double prev = d(1, K);
            for (std::int64_t n = 2; n < 200000; n = n * 3 / 2 + 1) {
                CHECK(d(n, K) < prev);
                prev = d(n, K);
            }
        }
        for (std::int64_t n : {5, 500, 50000}) {
            double prev = 0.0;
            for (double K = 1.0; K < 100.0; K *= 1.3) {
                CHECK(d(n, K) >= prev);
                prev = d(n, K);
            }
        }
    }
}

TEST_CASE("provider strings") {
    CHECK(DeltaProvider::parse("be").kind() == DeltaProvider::Kind::BerryEsseen);
    CHECK(DeltaProvider::parse("edg-leading").kind() == DeltaProvider::Kind::EdgeworthLeading);
    CHECK(DeltaProvider::parse("edg-cont-leading").kind() == DeltaProvider::Kind::EdgeworthContinuousLeading);
    const auto m = DeltaProvider::parse("min(be,edg-leading)");
    CHECK(m.kind() == DeltaProvider::Kind::MinOf);
    CHECK(m(1000, 9.0) == delta_edgeworth_leading(1000, 9.0));
    CHECK_THROWS_AS(DeltaProvider::parse("bogus"), ConfigError);
    CHECK_THROWS_AS(DeltaProvider::parse("min()"), ConfigError);
}

TEST_CASE("table provider rounds toward the larger bound") {
    const std::string path = "delta_table_test.csv";
    {
        std::ofstream f(path);
        f << "n,K,delta\n100,5,0.2\n100,10,0.3\n1000,5,0.05\n1000,10,0.08\n";
    }
    const auto t = DeltaProvider::parse("user:" + path);
    CHECK(t.certified());
    CHECK(t(100, 5.0) == 0.2);
    CHECK(t(500, 5.0) == 0.2);   // largest tabulated n <= 500 is 100
    CHECK(t(500, 6.0) == 0.3);   // smallest tabulated K >= 6 is 10
    CHECK(t(5000, 3.0) == 0.05);
    CHECK(t(5000, 10.0) == 0.08);
    CHECK_THROWS(t(50, 5.0));    // below the first tabulated n
    CHECK_THROWS(t(500, 11.0));  // above the largest K
    std::remove(path.c_str());
    CHECK_THROWS_AS(DeltaProvider::parse("user:/nonexistent/table.csv"), ConfigError);
}

TEST_CASE("power rules") {
    const auto r = PowerRule::parse("1+n^-0.2");
    CHECK(r(1000) == doctest::Approx(1.0 + std::pow(1000.0, -0.2)));
    CHECK(PowerRule::parse("n^-1/5")(32) == doctest::Approx(0.5));
    CHECK(PowerRule::parse("1+20*n^-2/5")(3656) == doctest::Approx(1.0 + 20.0 * std::pow(3656.0, -0.4)));
    CHECK(PowerRule::parse("0.5")(10) == 0.5);
    CHECK(PowerRule::parse("3n^0.1")(1) == 3.0);
    CHECK(PowerRule::parse(" 1 + n^(-1/5) ")(32) == doctest::Approx(1.5));
    CHECK(PowerRule::parse(PowerRule{1.0, 20.0, -0.4}.to_string())(77) == doctest::Approx(PowerRule{1.0, 20.0, -0.4}(77)));
    CHECK_THROWS_AS(PowerRule::parse("exp(n)"), ConfigError);
    CHECK_THROWS_AS(PowerRule::parse(""), ConfigError);
    CHECK(std::holds_alternative<OptimizedA>(parse_a_rule("optimized")));
    CHECK(to_string(parse_a_rule("optimized")) == "optimized");
}

TEST_CASE("confidence interval value type") {
    const auto b = ConfidenceInterval::bounded(1.0, 3.0, 0.9, "m");
    CHECK(b.is_bounded());
    CHECK(b.center() == 2.0);
    CHECK(b.half_width() == 1.0);
    CHECK(b.contains(1.0));
    CHECK(b.contains(3.0));
    CHECK_FALSE(b.contains(3.0000001));
    const auto w = ConfidenceInterval::whole_line(0.9, "m");
    CHECK(w.contains(1e300));
    CHECK(w.contains(b));
    CHECK_FALSE(b.contains(w));
    CHECK_THROWS_AS(w.lower(), std::logic_error);
    CHECK_THROWS(ConfidenceInterval::bounded(2.0, 1.0, 0.9, "m"));
    const auto p = ConfidenceInterval::centered(5.0, 0.0, 0.9, "m");
    CHECK(p.width() == 0.0);
    CHECK(b.contains(ConfidenceInterval::bounded(1.5, 2.5, 0.9, "m")));
}
