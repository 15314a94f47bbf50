#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "navae/edgeworth_bounds.hpp"
#include "navae/interval.hpp"
#include "navae/rules.hpp"

namespace navae {

/// Observations xi_1..xi_n of a scalar variable.
using Sample = Eigen::VectorXd;
using SampleRef = Eigen::Ref<const Eigen::VectorXd>;

/// First moments of a sample. `variance` uses divisor n.
struct SampleMoments {
    std::int64_t n = 0;
    double mean = 0.0;
    double variance = 0.0;
    double central_m4 = 0.0;

    double sd() const;
};

SampleMoments sample_moments(const SampleRef& sample);

struct MeanCiConfig {
    double alpha = 0.10;
    double K = 9.0;
    DeltaProvider delta = DeltaProvider::berry_esseen();
    ARule a_rule = PowerRule{1.0, 1.0, -0.2};
};

/// Feasible tuning values a in (1, inf) for the unknown-variance interval.
/// All values in [lower, upper] satisfy the informativeness constraint.
struct AInterval {
    double lower;
    double upper;
};

// Baselines.
ConfidenceInterval ci_clt(const SampleRef& sample, double alpha);
ConfidenceInterval ci_student(const SampleRef& sample, double alpha);
ConfidenceInterval ci_chebyshev(const SampleRef& sample, double alpha, double var_bound);
ConfidenceInterval ci_hoeffding(const SampleRef& sample, double alpha, double support_lower, double support_upper);

/// Lower-deviation probability bound exp(-n (1 - 1/a)^2 / (2K)) for the
/// oracle variance estimator.
double nu_var(double a, std::int64_t n, double K);

/// Known-variance interval: the whole line when delta_n >= alpha/2,
/// otherwise mean +- sigma/sqrt(n) * q(1 - alpha/2 + delta_n).
ConfidenceInterval ci_known_variance(const SampleRef& sample, double sigma_known, const MeanCiConfig& cfg);

/// Unknown-variance interval mean +- sigma_hat/sqrt(n) * C_n * q(1 - alpha/2 + delta_n + nu/2),
/// or the whole line when that quantile argument reaches Phi(sqrt(n/a)).
ConfidenceInterval ci_unknown_variance(const SampleRef& sample, const MeanCiConfig& cfg);

/// alpha/2 - delta_n - nu(a)/2 - (1 - Phi(sqrt(n/a))). The unknown-variance
/// interval is bounded exactly when this is positive.
double a_constraint_margin(std::int64_t n, double alpha, double a, double K, double delta_n);

/// C_n(a) * q(1 - alpha/2 + delta_n + nu(a)/2), the half-width in units of
/// sigma_hat/sqrt(n). +inf when `a` is infeasible.
double unknown_variance_width_factor(std::int64_t n, double alpha, double a, double K, double delta_n);

/// q(1 - alpha/2 + delta_n) or +inf when delta_n >= alpha/2.
double known_variance_quantile(std::int64_t n, double alpha, double K, const DeltaProvider& delta);

/// The open set of feasible a, computed on a log grid in a-1 followed by
/// bisection of each endpoint. nullopt when no feasible a exists.
std::optional<AInterval> feasible_a_interval(std::int64_t n, double alpha, double K, const DeltaProvider& delta);

/// Width-minimizing a inside the feasible set. Throws NumericalError when
/// the set is empty.
double optimize_a(std::int64_t n, double alpha, double K, const DeltaProvider& delta);

/// Smallest alpha whose unknown-variance interval is bounded, clamped to 1.
double alpha_min(std::int64_t n, double K, const ARule& a_rule, const DeltaProvider& delta);

/// Resolves the a_n used by ci_unknown_variance; nullopt means the
/// optimized rule found no feasible a.
std::optional<double> resolve_a(const ARule& rule, std::int64_t n, double alpha, double K, const DeltaProvider& delta);

/// Empirical kurtosis, optionally inflated by (1 + inflation/sqrt(n)).
double sample_kurtosis(const SampleRef& sample, double inflation = 0.0);

}  // namespace navae
