#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "navae/edgeworth_bounds.hpp"
#include "navae/interval.hpp"
#include "navae/linalg.hpp"
#include "navae/rules.hpp"

namespace navae {

/// Regression data: rows of X are the regressors X_i' (any intercept column
/// is part of X), y the outcomes, u the target direction of u'beta.
struct Design {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    Eigen::VectorXd u;

    std::int64_t n() const { return X.rows(); }
    Eigen::Index p() const { return X.cols(); }
    /// Throws DataError / ConfigError on shape or finiteness problems.
    void validate() const;
};

/// Sample moments entering R_var.
struct OlsMoments {
    double m4 = 0.0;    ///< n^-1 sum ||X_i||^4
    double m31 = 0.0;   ///< n^-1 sum ||X_i||^3 |e_i|
    double mXe2 = 0.0;  ///< n^-1 sum ||X_i e_i||^2
    double T4 = 0.0;    ///< ||n^-1 sum X_i X_i' S^+ e_i^2||, operator norm
};

struct OlsFit {
    std::int64_t n = 0;
    Eigen::MatrixXd X;
    Eigen::VectorXd beta;
    Eigen::VectorXd residuals;
    SymMatrixd S;
    SymMatrixd S_dagger;
    SymMatrixd V_hat;
    OlsMoments moments;
    double lambda_min_S = 0.0;

    Eigen::Index p() const { return X.cols(); }
};

/// beta = S^+ (n^-1 sum X_i Y_i) with S = n^-1 sum X_i X_i'. Rank-deficient
/// designs give the minimum-norm coefficients.
OlsFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);
inline OlsFit ols_fit(const Design& d) {
    d.validate();
    return ols_fit(d.X, d.y);
}

/// Heteroskedasticity-robust S^+ (n^-1 sum X_i X_i' e_i^2) S^+.
SymMatrixd sandwich_variance(const Eigen::MatrixXd& X, const Eigen::VectorXd& residuals, const SymMatrixd& S_dagger);
inline const SymMatrixd& sandwich_variance(const OlsFit& fit) { return fit.V_hat; }

ConfidenceInterval ci_asymp(const OlsFit& fit, const Eigen::VectorXd& u, double alpha);
ConfidenceInterval ci_asymp(const Design& design, double alpha);

/// One class constant: a fixed value or an estimate from the data,
/// optionally inflated by (1 + M/sqrt(n)).
struct Bound {
    enum class Mode { Fixed, PlugIn };
    Mode mode = Mode::PlugIn;
    double value = 0.0;
    double inflation = 0.0;

    static Bound fixed(double v) { return {Mode::Fixed, v, 0.0}; }
    static Bound plug_in(double M = 0.0) { return {Mode::PlugIn, 0.0, M}; }
};

struct OlsBounds {
    Bound lambda_reg;
    Bound K_reg;
    Bound K_eps;
    Bound K_xi;

    bool any_plug_in() const;
};

struct ResolvedBounds {
    double lambda_reg;
    double K_reg;
    double K_eps;
    double K_xi;

    void validate() const;
};

/// Sample analogues of the four class constants. K_reg, K_eps and K_xi are
/// multiplied by (1 + M/sqrt(n)); lambda_reg is divided by it.
ResolvedBounds plug_in_bounds(const OlsFit& fit, const Eigen::VectorXd& u, double inflation = 0.0);

ResolvedBounds resolve_bounds(const OlsBounds& bounds, const OlsFit& fit, const Eigen::VectorXd& u);

struct OlsTuning {
    PowerRule omega = PowerRule{0.0, 1.0, -0.2};
    PowerRule a = PowerRule{1.0, 20.0, -0.4};
    DeltaProvider delta = DeltaProvider::berry_esseen();
    std::optional<double> rho;

    /// omega_n = n^-r(rho), a_n = 1 + n^-2/5.
    static OlsTuning from_rate(double rho, DeltaProvider delta = DeltaProvider::berry_esseen());
};

/// Linearization remainder R_lin(gamma). Requires n*gamma > K_reg.
double r_lin(double gamma, std::int64_t n, const ResolvedBounds& bounds, double u_norm);

/// Variance remainder R_var(gamma), the four-term bound.
double r_var(double gamma, std::int64_t n, const OlsMoments& moments, const ResolvedBounds& bounds);
inline double r_var(double gamma, const OlsFit& fit, const ResolvedBounds& bounds) {
    return r_var(gamma, fit.n, fit.moments, bounds);
}

/// (omega_n alpha + exp(-n (1 - 1/a_n)^2 / (2 K_xi))) / 2 + delta_n.
double nu_edg(std::int64_t n, double alpha, const OlsTuning& tuning, double K_xi);

/// Largest n with n <= 2 K_reg / (omega_n alpha) or nu_edg >= alpha/2;
/// 0 when no n qualifies. Throws NumericalError past 1e9.
std::int64_t n_zero(double alpha, const OlsTuning& tuning, const ResolvedBounds& bounds);

/// Everything computed on the way to the interval, for reporting.
struct EdgDetails {
    ResolvedBounds bounds{};
    std::int64_t n0 = 0;
    double omega = 0.0;
    double a = 0.0;
    double nu_edg = 0.0;
    double r_lin = 0.0;
    double r_var = 0.0;
    double nu_approx = 0.0;  ///< NaN when its denominator vanishes
    double q_edg = 0.0;
};

ConfidenceInterval ci_edg(const OlsFit& fit, const Eigen::VectorXd& u, double alpha, const OlsBounds& bounds,
                          const OlsTuning& tuning, EdgDetails* details = nullptr);
ConfidenceInterval ci_edg(const Design& design, double alpha, const OlsBounds& bounds, const OlsTuning& tuning);

/// Rate exponent r(rho) for omega_n = n^-r(rho). Accepts +inf.
double rate_r(double rho);

}  // namespace navae
