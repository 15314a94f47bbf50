#include <doctest.h>

#include <cmath>

#include "navae/dgp_sim.hpp"
#include "navae/errors.hpp"
#include "navae/mean_ci.hpp"
#include "navae/ols_ci.hpp"
#include "oracle/ols_oracle.hpp"
#include "support/gen.hpp"

using namespace navae;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct ThreePoint {
    MatrixXd X{3, 2};
    VectorXd y{3};
    ThreePoint() {
        X << 1, 0, 1, 1, 1, 2;
        y << 0, 1, 3;
    }
};

OlsBounds fixed_bounds(double lam, double kreg, double keps, double kxi) {
    return {Bound::fixed(lam), Bound::fixed(kreg), Bound::fixed(keps), Bound::fixed(kxi)};
}

OlsBounds plugin_bounds() {
    return {Bound::plug_in(), Bound::plug_in(), Bound::plug_in(), Bound::fixed(9.0)};
}

double max_abs(const MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("three-point fit") {
    const ThreePoint d;
    const auto f = ols_fit(d.X, d.y);
    CHECK(f.beta(0) == doctest::Approx(-1.0 / 6.0).epsilon(1e-14));
    CHECK(f.beta(1) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(f.residuals(0) == doctest::Approx(1.0 / 6.0).epsilon(1e-13));
    CHECK(f.residuals(1) == doctest::Approx(-1.0 / 3.0).epsilon(1e-13));
    CHECK(f.residuals(2) == doctest::Approx(1.0 / 6.0).epsilon(1e-13));
    MatrixXd v(2, 2);
    v << 7.0 / 72.0, -1.0 / 24.0, -1.0 / 24.0, 1.0 / 24.0;
    CHECK(max_abs(sandwich_variance(f).matrix() - v) <= 1e-12);
    CHECK(max_abs(sandwich_variance(f.X, f.residuals, f.S_dagger).matrix() - v) <= 1e-12);
    CHECK(f.moments.m4 == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(f.moments.m31 == doctest::Approx(0.9909552298328516).epsilon(1e-13));
    CHECK(f.moments.mXe2 == doctest::Approx(0.12962962962962962).epsilon(1e-13));
    CHECK(f.moments.T4 == doctest::Approx(0.06356237809085381).epsilon(1e-12));

    const auto ci = ci_asymp(f, Eigen::Vector2d(0, 1), 0.05);
    CHECK(ci.lower() == doctest::Approx(1.2690160292750537).epsilon(1e-12));
    CHECK(ci.upper() == doctest::Approx(1.7309839707249463).epsilon(1e-12));
}

TEST_CASE("exact fits and degenerate cases") {
    testgen::Gen g(3);
    MatrixXd X(50, 3);
    for (int i = 0; i < 50; ++i) X.row(i) << 1, g.normal(), g.normal();
    const VectorXd y = X * Eigen::Vector3d(1, -2, 0.5);
    const auto f = ols_fit(X, y);
    CHECK(f.residuals.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(max_abs(f.V_hat.matrix()) < 1e-20);
    const auto ci = ci_asymp(f, Eigen::Vector3d(0, 1, 0), 0.1);
    CHECK(ci.width() < 1e-10);
    CHECK(ci.center() == doctest::Approx(-2.0));

    MatrixXd bad = X;
    bad(3, 1) = NAN;
    CHECK_THROWS_AS(ols_fit(bad, y), DataError);
}

TEST_CASE("orthogonality of residuals") {
    testgen::Gen g(21);
    for (int t = 0; t < 100; ++t) {
        const auto n = g.integer(10, 300);
        const auto p = g.integer(1, 6);
        MatrixXd X(n, p);
        VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < p; ++j) X(i, j) = g.normal() * 3 + 1;
            y(i) = g.normal() * 10;
        }
        const auto f = ols_fit(X, y);
        const double scale = std::max(1.0, X.cwiseAbs().maxCoeff() * y.cwiseAbs().maxCoeff());
        CHECK((X.transpose() * f.residuals).cwiseAbs().maxCoeff() <= 1e-8 * scale);
    }
}

TEST_CASE("duplicated column gives the deduplicated estimate of estimable functionals") {
    testgen::Gen g(4);
    const int n = 200;
    MatrixXd X(n, 2), Xdup(n, 3);
    VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        const double x = g.normal();
        X.row(i) << 1, x;
        Xdup.row(i) << 1, x, x;
        y(i) = 1 + 2 * x + g.normal();
    }
    const auto ref = ols_fit(X, y);
    const auto dup = ols_fit(Xdup, y);
    // Minimum-norm solution splits the slope evenly.
    CHECK(dup.beta(1) == doctest::Approx(dup.beta(2)).epsilon(1e-10));
    CHECK(dup.beta(1) + dup.beta(2) == doctest::Approx(ref.beta(1)).epsilon(1e-10));
    CHECK(dup.beta(0) == doctest::Approx(ref.beta(0)).epsilon(1e-10));
    CHECK((dup.residuals - ref.residuals).cwiseAbs().maxCoeff() < 1e-10);
    // u in the row space: (0, 1, 1) maps to the slope.
    const auto a = ci_asymp(dup, Eigen::Vector3d(0, 1, 1), 0.1);
    const auto b = ci_asymp(ref, Eigen::Vector2d(0, 1), 0.1);
    CHECK(a.lower() == doctest::Approx(b.lower()).epsilon(1e-9));
    CHECK(a.upper() == doctest::Approx(b.upper()).epsilon(1e-9));
    // ci_edg refuses a singular S with plug-in bounds.
    CHECK_THROWS_AS(ci_edg(dup, Eigen::Vector3d(0, 1, 1), 0.1, plugin_bounds(), OlsTuning{}), DataError);
}

TEST_CASE("intercept-only regression reproduces the clt interval") {
    testgen::Gen g(100);
    for (int t = 0; t < 100; ++t) {
        const auto x = g.sample(g.integer(2, 500));
        const auto f = ols_fit(MatrixXd::Ones(x.size(), 1), x);
        CHECK(f.V_hat(0, 0) == doctest::Approx(sample_moments(x).variance).epsilon(1e-10));
        const auto a = ci_asymp(f, VectorXd::Ones(1), 0.1);
        const auto b = ci_clt(x, 0.1);
        const double scale = std::max(1.0, std::abs(b.center()));
        CHECK(std::abs(a.lower() - b.lower()) <= 1e-10 * scale);
        CHECK(std::abs(a.upper() - b.upper()) <= 1e-10 * scale);
    }
}

TEST_CASE("linearization remainder") {
    const ResolvedBounds b{0.5, 4.0, 81.0, 9.0};
    CHECK(r_lin(0.005, 10000, b, 1.0) == doctest::Approx(8.898961479364625).epsilon(1e-13));
    CHECK(r_lin(0.005, 10000, b, 2.0) == doctest::Approx(2.0 * r_lin(0.005, 10000, b, 1.0)).epsilon(1e-15));
    const ResolvedBounds tiny{0.5, 1e-30, 81.0, 9.0};
    CHECK(r_lin(0.005, 10000, tiny, 1.0) < 1e-10);
    const ResolvedBounds big{0.5, 100.0, 81.0, 9.0};
    CHECK_THROWS_AS(r_lin(0.005, 10000, big, 1.0), DomainError);
}

TEST_CASE("variance remainder") {
    const ThreePoint d;
    const auto f = ols_fit(d.X, d.y);
    CHECK_THROWS_AS(r_var(0.01, f, ResolvedBounds{0.5, 1.0, 10.0, 9.0}), DomainError);
    CHECK(r_var(0.01, f, ResolvedBounds{0.5, 0.01, 10.0, 9.0}) == doctest::Approx(9564.535531015048).epsilon(1e-10));

    OlsMoments zero_resid{f.moments.m4, 0.0, 0.0, 0.0};
    const ResolvedBounds b{0.5, 0.01, 10.0, 9.0};
    const double t1 = r_var(0.01, 3, zero_resid, b);
    CHECK(t1 > 0.0);
    const double gt = std::sqrt(0.01 / 0.03);
    const double k = gt / (1 - gt) + 1;
    CHECK(t1 == doctest::Approx(2.0 / (3 * 0.125) * k * k * std::sqrt(1000.0) * 10.0).epsilon(1e-13));
    // Doubling n with the same moments shrinks every term.
    for (std::int64_t n : {10, 100, 1000, 100000}) {
        CHECK(r_var(0.01, 2 * n, f.moments, b) < r_var(0.01, n, f.moments, b));
    }
}

TEST_CASE("perturbation term and n0") {
    OlsTuning t;
    CHECK(nu_edg(3656, 0.10, t, 9.0) == doctest::Approx(0.049996).epsilon(1e-5 / 0.05));
    CHECK(nu_edg(3656, 0.10, t, 9.0) == doctest::Approx(0.0499953269283384).epsilon(1e-12));
    CHECK(nu_edg(3656, 0.10, t, 9.0) < 0.05);
    CHECK(nu_edg(3655, 0.10, t, 9.0) == doctest::Approx(0.05000137036801424).epsilon(1e-12));
    CHECK(nu_edg(3655, 0.10, t, 9.0) >= 0.05);
    testgen::Gen g(6);
    for (int i = 0; i < 200; ++i) {
        const auto n = g.integer(1, 10000000);
        const double K = g.uniform(1.0, 30.0);
        CHECK(nu_edg(n, g.uniform(0.01, 0.9), t, K) >= t.delta(n, K));
    }

    const ResolvedBounds nonbinding{1.0, 1e-9, 1.0, 9.0};
    CHECK(n_zero(0.10, t, nonbinding) == 3655);

    // First condition alone: the second is disabled with a negligible delta
    // and a fast-shrinking nu term.
    OlsTuning first;
    first.omega = PowerRule{0.0, 1.0, -0.2};
    first.a = PowerRule{1.0, 1e6, 0.0};
    first.delta = DeltaProvider::constant(1e-12);
    const ResolvedBounds binding{1.0, 10.0, 1.0, 1.0};
    CHECK(n_zero(0.10, first, binding) == 752);

    std::int64_t prev = INT64_MAX;
    for (double alpha = 0.05; alpha < 0.99; alpha += 0.05) {
        const auto n0 = n_zero(alpha, t, ResolvedBounds{1.0, 0.01, 1.0, 2.0});
        CHECK(n0 <= prev);
        prev = n0;
    }

    OlsTuning hopeless;
    hopeless.delta = DeltaProvider::constant(0.2);
    CHECK_THROWS_AS(n_zero(0.10, hopeless, nonbinding), NumericalError);
}

TEST_CASE("rate function") {
    CHECK(rate_r(0.0) == doctest::Approx(2.0 / 11.0));
    CHECK(rate_r(0.19) == 0.19);
    CHECK(rate_r(INFINITY) == 0.2);
    CHECK(rate_r(2.0 / 11.0) == 2.0 / 11.0);
    CHECK_THROWS_AS(rate_r(-1.0), DomainError);
    const auto t = OlsTuning::from_rate(0.0);
    CHECK(t.omega(1000) == doctest::Approx(std::pow(1000.0, -2.0 / 11.0)));
    CHECK(t.a(1000) == doctest::Approx(1.0 + std::pow(1000.0, -0.4)));
}

TEST_CASE("edg interval against the independent oracle") {
    const auto d = sample_gumbel_hetero_linear(5000, 20240101);
    const auto f = ols_fit(d.X, d.y);
    const auto of = oracle::fit(d.X, d.y);
    const OlsTuning t;
    const oracle::Tuning ot;

    const auto ci = ci_edg(f, d.u, 0.10, fixed_bounds(0.3, 8.0, 500.0, 9.0), t);
    const auto ref = oracle::ci_edg(of, d.u, 0.10L, oracle::Bounds{0.3L, 8, 500, 9}, ot);
    REQUIRE_FALSE(ref.whole_line);
    REQUIRE(ci.is_bounded());
    CHECK(testgen::rel_diff(ci.lower(), static_cast<double>(ref.lower)) < 1e-9);
    CHECK(testgen::rel_diff(ci.upper(), static_cast<double>(ref.upper)) < 1e-9);

    const auto pb = plug_in_bounds(f, d.u, 0.0);
    const auto ob = oracle::plug_in(of, d.u, 0.0L);
    CHECK(testgen::rel_diff(pb.lambda_reg, static_cast<double>(ob.lambda_reg)) < 1e-10);
    CHECK(testgen::rel_diff(pb.K_reg, static_cast<double>(ob.K_reg)) < 1e-10);
    CHECK(testgen::rel_diff(pb.K_eps, static_cast<double>(ob.K_eps)) < 1e-10);
    CHECK(testgen::rel_diff(pb.K_xi, static_cast<double>(ob.K_xi)) < 1e-10);

    const auto pi = ci_edg(f, d.u, 0.10, plugin_bounds(), t);
    const auto pref = oracle::ci_edg(of, d.u, 0.10L, oracle::Bounds{ob.lambda_reg, ob.K_reg, ob.K_eps, 9}, ot);
    CHECK(pi.is_whole_line() == pref.whole_line);
    if (pi.is_bounded()) {
        CHECK(testgen::rel_diff(pi.lower(), static_cast<double>(pref.lower)) < 1e-9);
        CHECK(testgen::rel_diff(pi.upper(), static_cast<double>(pref.upper)) < 1e-9);
    }
}

TEST_CASE("plug-in bounds at n = 10^4 against the oracle, with inflation") {
    const auto d = sample_gumbel_hetero_linear(10000, 77);
    const auto f = ols_fit(d.X, d.y);
    const auto of = oracle::fit(d.X, d.y);
    for (double M : {0.0, 5.0}) {
        const auto pb = plug_in_bounds(f, d.u, M);
        const auto ob = oracle::plug_in(of, d.u, M);
        CHECK(testgen::rel_diff(pb.lambda_reg, static_cast<double>(ob.lambda_reg)) < 1e-10);
        CHECK(testgen::rel_diff(pb.K_reg, static_cast<double>(ob.K_reg)) < 1e-10);
        CHECK(testgen::rel_diff(pb.K_eps, static_cast<double>(ob.K_eps)) < 1e-10);
        CHECK(testgen::rel_diff(pb.K_xi, static_cast<double>(ob.K_xi)) < 1e-10);
        CHECK(pb.K_xi >= 1.0);
    }
    const auto b0 = plug_in_bounds(f, d.u, 0.0);
    const auto b5 = plug_in_bounds(f, d.u, 5.0);
    CHECK(b5.lambda_reg < b0.lambda_reg);
    CHECK(b5.K_reg > b0.K_reg);
}

TEST_CASE("plug-in edge cases") {
    testgen::Gen g(12);
    const auto x = g.sample(100);
    const auto f = ols_fit(MatrixXd::Ones(100, 1), x);
    const auto b = plug_in_bounds(f, VectorXd::Ones(1));
    CHECK(std::abs(b.K_reg) < 1e-12);
    const auto flat = ols_fit(MatrixXd::Ones(10, 1), VectorXd::Constant(10, 2.0));
    CHECK_THROWS_AS(plug_in_bounds(flat, VectorXd::Ones(1)), DataError);
}

TEST_CASE("edg interval structure") {
    testgen::Gen g(55);
    int bounded = 0;
    for (int t = 0; t < 1000; ++t) {
        const auto n = g.integer(100, 20000);
        const auto d = sample_gumbel_hetero_linear(n, static_cast<std::uint64_t>(t + 1));
        const auto f = ols_fit(d.X, d.y);
        const double alpha = g.uniform(0.05, 0.5);
        Eigen::Vector3d u(g.normal(), g.normal(), g.normal());
        const OlsBounds b = t % 2 ? plugin_bounds()
                                  : fixed_bounds(g.uniform(0.1, 1.0), g.uniform(0.01, 10.0), g.uniform(1.0, 1000.0),
                                                 g.uniform(1.0, 20.0));
        OlsTuning tune;
        tune.a = PowerRule{1.0, g.uniform(1.0, 30.0), -0.4};
        const auto e = ci_edg(f, u, alpha, b, tune);
        if (e.is_bounded()) {
            ++bounded;
            CHECK(e.contains(ci_asymp(f, u, alpha)));
        }
        // Positive homogeneity in u.
        if (t % 10 == 0) {
            const auto e2 = ci_edg(f, Eigen::Vector3d(2.0 * u), alpha, b, tune);
            REQUIRE(e.is_whole_line() == e2.is_whole_line());
            if (e.is_bounded()) {
                CHECK(testgen::rel_diff(e2.center(), 2.0 * e.center()) < 1e-10);
                CHECK(testgen::rel_diff(e2.half_width(), 2.0 * e.half_width()) < 1e-10);
            }
        }
    }
    CHECK(bounded > 100);
}

TEST_CASE("edg interval is the whole line up to n0 and deterministic") {
    const OlsTuning t;
    const auto b = fixed_bounds(0.3, 1e-9, 500.0, 9.0);
    const auto d = sample_gumbel_hetero_linear(3656, 5);
    auto f = ols_fit(d.X, d.y);
    CHECK(ci_edg(f, d.u, 0.10, b, t).is_bounded());
    const auto d2 = sample_gumbel_hetero_linear(3655, 5);
    CHECK(ci_edg(ols_fit(d2.X, d2.y), d2.u, 0.10, b, t).is_whole_line());
    const auto a1 = ci_edg(f, d.u, 0.10, b, t);
    const auto a2 = ci_edg(f, d.u, 0.10, b, t);
    CHECK(a1.lower() == a2.lower());
    CHECK(a1.upper() == a2.upper());

    OlsTuning bad;
    bad.a = PowerRule{1.0, -1.0, 0.0};
    CHECK_THROWS_AS(ci_edg(f, d.u, 0.10, b, bad), ConfigError);
    OlsTuning bad_omega;
    bad_omega.omega = PowerRule::constant(1.5);
    CHECK_THROWS_AS(ci_edg(f, d.u, 0.10, b, bad_omega), ConfigError);
    CHECK_THROWS_AS(ci_edg(f, Eigen::Vector3d::Zero(), 0.10, b, t), ConfigError);
}

TEST_CASE("zero residuals keep the edg half-width finite") {
    testgen::Gen g(3);
    const int n = 20000;
    MatrixXd X(n, 2);
    for (int i = 0; i < n; ++i) X.row(i) << 1, g.normal();
    const VectorXd y = X * Eigen::Vector2d(1, 2);
    const auto f = ols_fit(X, y);
    EdgDetails det;
    const auto ci = ci_edg(f, Eigen::Vector2d(0, 1), 0.10, fixed_bounds(0.5, 1.0, 10.0, 9.0), OlsTuning{}, &det);
    REQUIRE(ci.is_bounded());
    CHECK(std::isfinite(ci.half_width()));
    CHECK(ci.contains(2.0));
}
