#include "navae/ols_ci.hpp"

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "navae/errors.hpp"
#include "navae/specialfn.hpp"

namespace navae {

namespace {

constexpr std::int64_t kNZeroCap = 1'000'000'000;

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
}

double gamma_tilde(double gamma, std::int64_t n, double K_reg) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in (0,1)");
    const double gt = std::sqrt(K_reg / (static_cast<double>(n) * gamma));
    if (!(gt < 1.0)) throw DomainError("infeasible gamma: n*gamma must exceed K_reg");
    return gt;
}

bool rules_in_range(const OlsTuning& t, std::int64_t n) {
    const double w = t.omega(n);
    const double a = t.a(n);
    return w > 0.0 && w < 1.0 && a > 1.0 && std::isfinite(a);
}

}  // namespace

void Design::validate() const {
    if (X.rows() < 1 || X.cols() < 1) throw DataError("design: empty X");
    if (y.size() != X.rows()) throw DataError("design: y length differs from the number of rows of X");
    if (u.size() != X.cols()) throw ConfigError("design: u length differs from the number of columns of X");
    if (X.rows() < X.cols()) throw DataError("design: fewer observations than regressors");
    if (!X.allFinite() || !y.allFinite()) throw DataError("design: non-finite entry");
    if (!u.allFinite() || u.isZero(0.0)) throw ConfigError("design: u must be finite and non-zero");
}

SymMatrixd sandwich_variance(const Eigen::MatrixXd& X, const Eigen::VectorXd& residuals, const SymMatrixd& S_dagger) {
    const double n = static_cast<double>(X.rows());
    const Eigen::MatrixXd weighted = X.array().colwise() * residuals.array();
    const Eigen::MatrixXd meat = weighted.transpose() * weighted / n;
    const Eigen::MatrixXd& Sd = S_dagger.matrix();
    return SymMatrixd(Sd * meat * Sd);
}

OlsFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() < 1 || X.cols() < 1) throw DataError("ols_fit: empty design");
    if (y.size() != X.rows()) throw DataError("ols_fit: y length differs from rows of X");
    if (!X.allFinite() || !y.allFinite()) throw DataError("ols_fit: non-finite entry");

    OlsFit fit;
    fit.n = X.rows();
    const double n = static_cast<double>(fit.n);
    fit.X = X;
    fit.S = SymMatrixd(X.transpose() * X / n);
    fit.S_dagger = pseudo_inverse(fit.S);
    fit.beta = fit.S_dagger.matrix() * (X.transpose() * y / n);
    fit.residuals = y - X * fit.beta;
    fit.V_hat = sandwich_variance(X, fit.residuals, fit.S_dagger);
    fit.lambda_min_S = lambda_min(fit.S);

    const Eigen::ArrayXd norms = X.rowwise().norm().array();
    const Eigen::ArrayXd abs_e = fit.residuals.array().abs();
    fit.moments.m4 = norms.pow(4).mean();
    fit.moments.m31 = (norms.pow(3) * abs_e).mean();
    fit.moments.mXe2 = (norms.square() * abs_e.square()).mean();
    const Eigen::MatrixXd weighted = X.array().colwise() * fit.residuals.array();
    const Eigen::MatrixXd T = (weighted.transpose() * weighted / n) * fit.S_dagger.matrix();
    fit.moments.T4 = operator_norm(T);
    return fit;
}

ConfidenceInterval ci_asymp(const OlsFit& fit, const Eigen::VectorXd& u, double alpha) {
    check_alpha(alpha);
    if (u.size() != fit.p()) throw ConfigError("ci_asymp: u has the wrong length");
    const double var = u.dot(fit.V_hat.matrix() * u);
    if (var < 0.0) throw NumericalError("ci_asymp: u'Vu is negative");
    const double hw = normal_quantile_upper(alpha / 2) * std::sqrt(var) / std::sqrt(static_cast<double>(fit.n));
    return ConfidenceInterval::centered(u.dot(fit.beta), hw, 1 - alpha, "asymp");
}

ConfidenceInterval ci_asymp(const Design& design, double alpha) {
    design.validate();
    return ci_asymp(ols_fit(design.X, design.y), design.u, alpha);
}

bool OlsBounds::any_plug_in() const {
    return lambda_reg.mode == Bound::Mode::PlugIn || K_reg.mode == Bound::Mode::PlugIn ||
           K_eps.mode == Bound::Mode::PlugIn || K_xi.mode == Bound::Mode::PlugIn;
}

void ResolvedBounds::validate() const {
    auto ok = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!ok(lambda_reg) || !ok(K_reg) || !ok(K_eps)) {
        throw ConfigError("bounds: lambda_reg, K_reg and K_eps must be finite and positive");
    }
    if (!(K_xi >= 1.0) || !std::isfinite(K_xi)) throw ConfigError("bounds: K_xi must be finite and >= 1");
}

ResolvedBounds plug_in_bounds(const OlsFit& fit, const Eigen::VectorXd& u, double inflation) {
    if (!(inflation >= 0.0)) throw DomainError("plug_in_bounds: inflation must be >= 0");
    if (u.size() != fit.p()) throw ConfigError("plug_in_bounds: u has the wrong length");
    if (fit.S.matrix().isZero(0.0)) throw DataError("plug_in_bounds: S is the zero matrix");
    const double n = static_cast<double>(fit.n);
    const double p = static_cast<double>(fit.p());
    const double factor = 1.0 + inflation / std::sqrt(n);

    const SymMatrixd root = psd_sqrt(fit.S_dagger);
    const Eigen::MatrixXd Xt = fit.X * root.matrix();
    const Eigen::ArrayXd sq = Xt.rowwise().squaredNorm().array();
    const Eigen::ArrayXd e2 = fit.residuals.array().square();

    ResolvedBounds b{};
    b.lambda_reg = fit.lambda_min_S / factor;
    // ||vec(x x' - I)||^2 = ||x||^4 - 2||x||^2 + p.
    b.K_reg = (sq.square() - 2.0 * sq + p).mean() * factor;
    b.K_eps = (sq * e2).square().mean() * factor;

    const Eigen::ArrayXd xi = (fit.X * (fit.S_dagger.matrix() * u)).array() * fit.residuals.array();
    const double m2 = xi.square().mean();
    if (!(m2 > 0.0)) throw DataError("plug_in_bounds: all influence values are zero");
    b.K_xi = xi.square().square().mean() / (m2 * m2) * factor;
    return b;
}

ResolvedBounds resolve_bounds(const OlsBounds& bounds, const OlsFit& fit, const Eigen::VectorXd& u) {
    std::vector<std::pair<double, ResolvedBounds>> cache;  // keyed by inflation
    auto pick = [&](const Bound& b, double ResolvedBounds::*field) {
        if (b.mode == Bound::Mode::Fixed) return b.value;
        for (const auto& [m, est] : cache) {
            if (m == b.inflation) return est.*field;
        }
        cache.emplace_back(b.inflation, plug_in_bounds(fit, u, b.inflation));
        return cache.back().second.*field;
    };
    if (bounds.any_plug_in()) {
        const double p = static_cast<double>(fit.p());
        const double scale = fit.S.matrix().cwiseAbs().maxCoeff();
        if (!(fit.lambda_min_S > p * std::numeric_limits<double>::epsilon() * scale)) {
            throw DataError("ci_edg: S is singular, plug-in lambda_reg would be zero");
        }
    }
    ResolvedBounds r{pick(bounds.lambda_reg, &ResolvedBounds::lambda_reg), pick(bounds.K_reg, &ResolvedBounds::K_reg),
                     pick(bounds.K_eps, &ResolvedBounds::K_eps), pick(bounds.K_xi, &ResolvedBounds::K_xi)};
    r.validate();
    return r;
}

OlsTuning OlsTuning::from_rate(double rho, DeltaProvider delta) {
    OlsTuning t;
    t.omega = PowerRule{0.0, 1.0, -rate_r(rho)};
    t.a = PowerRule{1.0, 1.0, -0.4};
    t.delta = std::move(delta);
    t.rho = rho;
    return t;
}

double r_lin(double gamma, std::int64_t n, const ResolvedBounds& b, double u_norm) {
    const double gt = gamma_tilde(gamma, n, b.K_reg);
    return std::sqrt(2.0) * u_norm / std::sqrt(b.lambda_reg) * (gt / (1.0 - gt)) * std::pow(b.K_eps / gamma, 0.25);
}

double r_var(double gamma, std::int64_t n_int, const OlsMoments& m, const ResolvedBounds& b) {
    const double gt = gamma_tilde(gamma, n_int, b.K_reg);
    const double n = static_cast<double>(n_int);
    const double lam = b.lambda_reg;
    const double ratio1 = gt / (1.0 - gt) + 1.0;
    const double term1 = 2.0 / (n * std::pow(lam, 3)) * ratio1 * ratio1 * std::sqrt(b.K_eps / gamma) * m.m4;
    const double term2 = 2.0 * std::sqrt(2.0) / (std::pow(lam, 2.5) * std::sqrt(n)) * ratio1 *
                         std::pow(b.K_eps / gamma, 0.25) * m.m31;
    const double term3 = (b.K_reg / (n * gamma)) / (lam * lam * (1.0 - gt) * (1.0 - gt)) * m.mXe2;
    const double term4 = 2.0 * gt / (lam * (1.0 - gt)) * m.T4;
    return term1 + term2 + term3 + term4;
}

double nu_edg(std::int64_t n, double alpha, const OlsTuning& tuning, double K_xi) {
    const double w = tuning.omega(n);
    const double a = tuning.a(n);
    if (!(a > 1.0)) throw ConfigError("nu_edg: a_n must be > 1");
    const double r = 1.0 - 1.0 / a;
    return (w * alpha + std::exp(-static_cast<double>(n) * r * r / (2.0 * K_xi))) / 2.0 + tuning.delta(n, K_xi);
}

std::int64_t n_zero(double alpha, const OlsTuning& tuning, const ResolvedBounds& bounds) {
    check_alpha(alpha);
    bounds.validate();
    // slack > 1 demands a margin; slack == 1 is the exact condition.
    auto violated = [&](std::int64_t n, double slack) {
        if (!rules_in_range(tuning, n)) return true;
        const double nd = static_cast<double>(n);
        if (nd / slack <= 2.0 * bounds.K_reg / (tuning.omega(n) * alpha)) return true;
        return nu_edg(n, alpha, tuning, bounds.K_xi) * slack >= alpha / 2;
    };

    std::int64_t last_bad = 0;
    std::int64_t first_good = 0;
    int streak = 0;
    for (std::int64_t n = 1;; n *= 2) {
        if (n > kNZeroCap) throw NumericalError("n_zero: no informative sample size below 1e9");
        if (violated(n, 1.0)) {
            last_bad = n;
            streak = 0;
        } else if (!violated(n, 1.0 + 1e-6)) {
            if (streak == 0) first_good = n;
            if (++streak == 3) break;
        } else {
            streak = 0;
        }
    }
    for (std::int64_t n = first_good - 1; n > last_bad; --n) {
        if (violated(n, 1.0)) return n;
    }
    return last_bad;
}

ConfidenceInterval ci_edg(const OlsFit& fit, const Eigen::VectorXd& u, double alpha, const OlsBounds& bounds,
                          const OlsTuning& tuning, EdgDetails* details) {
    check_alpha(alpha);
    if (u.size() != fit.p()) throw ConfigError("ci_edg: u has the wrong length");
    if (u.isZero(0.0)) throw ConfigError("ci_edg: u must be non-zero");
    const std::int64_t n = fit.n;
    EdgDetails d;
    d.omega = tuning.omega(n);
    d.a = tuning.a(n);
    if (!(d.a > 1.0) || !std::isfinite(d.a)) throw ConfigError("ci_edg: a_n must be > 1");
    if (!(d.omega > 0.0 && d.omega < 1.0)) throw ConfigError("ci_edg: omega_n must lie in (0,1)");

    d.bounds = resolve_bounds(bounds, fit, u);
    d.n0 = n_zero(alpha, tuning, d.bounds);
    d.nu_edg = nu_edg(n, alpha, tuning, d.bounds.K_xi);
    const double level = 1 - alpha;
    if (n <= d.n0) {
        d.r_lin = d.r_var = d.nu_approx = d.q_edg = std::numeric_limits<double>::quiet_NaN();
        if (details) *details = d;
        return ConfidenceInterval::whole_line(level, "edg");
    }

    const double gamma = d.omega * alpha / 2;
    const double u_norm = u.norm();
    d.r_lin = r_lin(gamma, n, d.bounds, u_norm);
    d.r_var = r_var(gamma, fit, d.bounds);
    const double var = u.dot(fit.V_hat.matrix() * u) + u_norm * u_norm * d.r_var;
    const double sd = std::sqrt(std::max(var, 0.0));
    const double q = normal_quantile_upper(alpha / 2 - d.nu_edg);
    d.nu_approx = sd > 0.0 ? d.r_lin / sd : std::numeric_limits<double>::quiet_NaN();
    d.q_edg = std::sqrt(d.a) * q + (sd > 0.0 ? d.nu_approx : 0.0);
    // Q_edg * sd expanded so that a vanishing sd needs no division.
    const double hw = (std::sqrt(d.a) * q * sd + d.r_lin) / std::sqrt(static_cast<double>(n));
    if (details) *details = d;
    return ConfidenceInterval::centered(u.dot(fit.beta), hw, level, "edg");
}

ConfidenceInterval ci_edg(const Design& design, double alpha, const OlsBounds& bounds, const OlsTuning& tuning) {
    design.validate();
    return ci_edg(ols_fit(design.X, design.y), design.u, alpha, bounds, tuning);
}

double rate_r(double rho) {
    if (std::isnan(rho) || rho < 0.0) throw DomainError("rate_r: rho must be >= 0");
    if (rho < 2.0 / 11.0) return 2.0 / 11.0;
    if (rho <= 0.2) return rho;
    return 0.2;
}

}  // namespace navae
