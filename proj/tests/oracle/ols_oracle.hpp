#pragma once

// Straight-line evaluation of the OLS interval and the plug-in constants,
// kept apart from the library: long double loops, Eigen's own
// eigensolver and SVD, a bisection normal quantile, and a linear scan for
// n0. Used only as a reference in tests.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

namespace oracle {

using LD = long double;
using MatL = Eigen::Matrix<LD, Eigen::Dynamic, Eigen::Dynamic>;
using VecL = Eigen::Matrix<LD, Eigen::Dynamic, 1>;

inline LD upper_quantile(LD t) {
    // Solve 0.5 erfc(x / sqrt 2) = t.
    LD lo = -40, hi = 40;
    for (int i = 0; i < 200; ++i) {
        const LD mid = (lo + hi) / 2;
        if (0.5L * std::erfc(mid / std::sqrt(2.0L)) > t) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return (lo + hi) / 2;
}

struct Fit {
    std::int64_t n = 0;
    MatL X;
    VecL beta, e;
    MatL S, Sinv, V;
    LD m4 = 0, m31 = 0, mXe2 = 0, T4 = 0, lambda_min = 0;
};

inline Fit fit(const Eigen::MatrixXd& Xd, const Eigen::VectorXd& yd) {
    Fit f;
    f.n = Xd.rows();
    const auto p = Xd.cols();
    f.X = Xd.cast<LD>();
    const VecL y = yd.cast<LD>();
    const LD n = static_cast<LD>(f.n);
    f.S = MatL::Zero(p, p);
    VecL xy = VecL::Zero(p);
    for (std::int64_t i = 0; i < f.n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            xy(j) += f.X(i, j) * y(i) / n;
            for (Eigen::Index k = 0; k < p; ++k) f.S(j, k) += f.X(i, j) * f.X(i, k) / n;
        }
    }
    Eigen::SelfAdjointEigenSolver<MatL> es(f.S);
    f.lambda_min = es.eigenvalues().minCoeff();
    f.Sinv = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    f.beta = f.Sinv * xy;
    f.e = y - f.X * f.beta;
    MatL meat = MatL::Zero(p, p);
    MatL T = MatL::Zero(p, p);
    for (std::int64_t i = 0; i < f.n; ++i) {
        const VecL x = f.X.row(i).transpose();
        const LD e2 = f.e(i) * f.e(i);
        const LD nx = x.norm();
        meat += x * x.transpose() * e2 / n;
        T += x * x.transpose() * f.Sinv * e2 / n;
        f.m4 += std::pow(nx, 4) / n;
        f.m31 += std::pow(nx, 3) * std::abs(f.e(i)) / n;
        f.mXe2 += nx * nx * e2 / n;
    }
    f.V = f.Sinv * meat * f.Sinv;
    Eigen::JacobiSVD<MatL> svd(T);
    f.T4 = svd.singularValues()(0);
    return f;
}

struct Bounds {
    LD lambda_reg, K_reg, K_eps, K_xi;
};

inline Bounds plug_in(const Fit& f, const Eigen::VectorXd& ud, LD M) {
    const LD n = static_cast<LD>(f.n);
    const auto p = f.X.cols();
    const VecL u = ud.cast<LD>();
    const LD factor = 1 + M / std::sqrt(n);
    Eigen::SelfAdjointEigenSolver<MatL> es(f.Sinv);
    const MatL root = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    Bounds b{};
    LD s2 = 0, s4 = 0;
    for (std::int64_t i = 0; i < f.n; ++i) {
        const VecL xt = root * f.X.row(i).transpose();
        const MatL d = xt * xt.transpose() - MatL::Identity(p, p);
        b.K_reg += d.squaredNorm() / n;
        b.K_eps += std::pow((xt * f.e(i)).norm(), 4) / n;
        const LD xi = u.dot(f.Sinv * f.X.row(i).transpose()) * f.e(i);
        s2 += xi * xi / n;
        s4 += xi * xi * xi * xi / n;
    }
    b.lambda_reg = f.lambda_min / factor;
    b.K_reg *= factor;
    b.K_eps *= factor;
    b.K_xi = s4 / (s2 * s2) * factor;
    return b;
}

struct Tuning {
    LD omega_scale = 1, omega_exp = -0.2L;
    LD a_scale = 20, a_exp = -0.4L;
    LD omega(std::int64_t n) const { return omega_scale * std::pow(static_cast<LD>(n), omega_exp); }
    LD a(std::int64_t n) const { return 1 + a_scale * std::pow(static_cast<LD>(n), a_exp); }
};

inline LD be(std::int64_t n, LD K) { return 0.4690L * std::pow(K, 0.75L) / std::sqrt(static_cast<LD>(n)); }

inline LD nu_edg(std::int64_t n, LD alpha, const Tuning& t, LD K_xi) {
    const LD r = 1 - 1 / t.a(n);
    return (t.omega(n) * alpha + std::exp(-static_cast<LD>(n) * r * r / (2 * K_xi))) / 2 + be(n, K_xi);
}

/// Last n violating either condition, by exhaustive scan up to `limit`.
inline std::int64_t n0(LD alpha, const Tuning& t, const Bounds& b, std::int64_t limit = 2000000) {
    std::int64_t last = 0;
    for (std::int64_t n = 1; n <= limit; ++n) {
        const LD w = t.omega(n);
        const bool bad = !(w > 0 && w < 1) || static_cast<LD>(n) <= 2 * b.K_reg / (w * alpha) ||
                         nu_edg(n, alpha, t, b.K_xi) >= alpha / 2;
        if (bad) last = n;
    }
    return last;
}

struct Interval {
    bool whole_line = false;
    LD lower = 0, upper = 0;
};

inline Interval ci_edg(const Fit& f, const Eigen::VectorXd& ud, LD alpha, const Bounds& b, const Tuning& t) {
    const std::int64_t N = f.n;
    if (N <= n0(alpha, t, b)) return {true, 0, 0};
    const LD n = static_cast<LD>(N);
    const VecL u = ud.cast<LD>();
    const LD gamma = t.omega(N) * alpha / 2;
    const LD gt = std::sqrt(b.K_reg / (n * gamma));
    const LD un = u.norm();
    const LD rlin = std::sqrt(2.0L) * un / std::sqrt(b.lambda_reg) * (gt / (1 - gt)) * std::pow(b.K_eps / gamma, 0.25L);
    const LD lam = b.lambda_reg;
    const LD k = gt / (1 - gt) + 1;
    const LD rvar = 2 / (n * lam * lam * lam) * k * k * std::sqrt(b.K_eps / gamma) * f.m4 +
                    2 * std::sqrt(2.0L) / (std::pow(lam, 2.5L) * std::sqrt(n)) * k * std::pow(b.K_eps / gamma, 0.25L) *
                        f.m31 +
                    (b.K_reg / (n * gamma)) / (lam * lam * (1 - gt) * (1 - gt)) * f.mXe2 + 2 * gt / (lam * (1 - gt)) * f.T4;
    const LD sd = std::sqrt(u.dot(f.V * u) + un * un * rvar);
    const LD q = upper_quantile(alpha / 2 - nu_edg(N, alpha, t, b.K_xi));
    const LD nu_approx = rlin / sd;
    const LD Q = std::sqrt(t.a(N)) * q + nu_approx;
    const LD center = u.dot(f.beta);
    const LD hw = Q * sd / std::sqrt(n);
    return {false, center - hw, center + hw};
}

}  // namespace oracle
