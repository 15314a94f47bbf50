#include "navae/mean_ci.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "detail/search1d.hpp"
#include "navae/errors.hpp"
#include "navae/specialfn.hpp"

namespace navae {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Search range for a - 1, on a log scale.
constexpr double kLogBMin = -10.0;
constexpr double kLogBMax = 6.0;
constexpr int kFeasibilityGrid = 1024;
constexpr int kWidthGrid = 400;

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
}

void check_K(double K) {
    if (!(K >= 1.0) || !std::isfinite(K)) throw DomainError("kurtosis bound K must be finite and >= 1");
}

std::int64_t sample_size(const SampleRef& s, std::int64_t minimum, const char* what) {
    const auto n = static_cast<std::int64_t>(s.size());
    if (n < minimum) {
        throw DataError(std::string(what) + ": needs at least " + std::to_string(minimum) + " observations");
    }
    if (!s.allFinite()) throw DataError(std::string(what) + ": non-finite observation");
    return n;
}

double log_grid_b(int i, int count) {
    return std::pow(10.0, kLogBMin + (kLogBMax - kLogBMin) * i / (count - 1));
}

}  // namespace

double SampleMoments::sd() const { return std::sqrt(variance); }

SampleMoments sample_moments(const SampleRef& sample) {
    SampleMoments m;
    m.n = static_cast<std::int64_t>(sample.size());
    if (m.n == 0) throw DataError("sample_moments: empty sample");
    m.mean = sample.mean();
    const Eigen::ArrayXd centered = sample.array() - m.mean;
    const Eigen::ArrayXd sq = centered.square();
    m.variance = sq.mean();
    m.central_m4 = sq.square().mean();
    return m;
}

ConfidenceInterval ci_clt(const SampleRef& sample, double alpha) {
    check_alpha(alpha);
    const auto n = sample_size(sample, 2, "ci_clt");
    const auto m = sample_moments(sample);
    const double hw = m.sd() / std::sqrt(static_cast<double>(n)) * normal_quantile_upper(alpha / 2);
    return ConfidenceInterval::centered(m.mean, hw, 1 - alpha, "clt");
}

ConfidenceInterval ci_student(const SampleRef& sample, double alpha) {
    check_alpha(alpha);
    const auto n = sample_size(sample, 2, "ci_student");
    const auto m = sample_moments(sample);
    const double nd = static_cast<double>(n);
    const double sd_unbiased = std::sqrt(m.variance * nd / (nd - 1.0));
    const double hw = student_quantile(1.0 - alpha / 2, nd - 1.0) * sd_unbiased / std::sqrt(nd);
    return ConfidenceInterval::centered(m.mean, hw, 1 - alpha, "student");
}

ConfidenceInterval ci_chebyshev(const SampleRef& sample, double alpha, double var_bound) {
    check_alpha(alpha);
    if (!(var_bound > 0.0) || !std::isfinite(var_bound)) throw DomainError("ci_chebyshev: variance bound must be > 0");
    const auto n = sample_size(sample, 1, "ci_chebyshev");
    const double hw = std::sqrt(var_bound) / std::sqrt(alpha * static_cast<double>(n));
    return ConfidenceInterval::centered(sample.mean(), hw, 1 - alpha, "chebyshev");
}

ConfidenceInterval ci_hoeffding(const SampleRef& sample, double alpha, double support_lower, double support_upper) {
    check_alpha(alpha);
    if (!(support_lower < support_upper)) throw DomainError("ci_hoeffding: support needs a < b");
    const auto n = sample_size(sample, 1, "ci_hoeffding");
    if ((sample.array() < support_lower).any() || (sample.array() > support_upper).any()) {
        throw DataError("ci_hoeffding: observation outside the declared support");
    }
    const double hw = 0.5 * (support_upper - support_lower) * std::sqrt(2.0 * std::log(2.0 / alpha)) /
                      std::sqrt(static_cast<double>(n));
    return ConfidenceInterval::centered(sample.mean(), hw, 1 - alpha, "hoeffding");
}

double nu_var(double a, std::int64_t n, double K) {
    if (!(a > 1.0) || !std::isfinite(a)) throw DomainError("nu_var: a must be > 1");
    if (n < 1) throw DomainError("nu_var: n must be >= 1");
    check_K(K);
    const double r = 1.0 - 1.0 / a;
    return std::exp(-static_cast<double>(n) * r * r / (2.0 * K));
}

double known_variance_quantile(std::int64_t n, double alpha, double K, const DeltaProvider& delta) {
    check_alpha(alpha);
    const double t = alpha / 2 - delta(n, K);
    if (!(t > 0.0)) return kInf;
    return normal_quantile_upper(t);
}

ConfidenceInterval ci_known_variance(const SampleRef& sample, double sigma_known, const MeanCiConfig& cfg) {
    check_alpha(cfg.alpha);
    check_K(cfg.K);
    if (!(sigma_known > 0.0) || !std::isfinite(sigma_known)) throw DomainError("ci_known_variance: sigma must be > 0");
    const auto n = sample_size(sample, 1, "ci_known_variance");
    const double q = known_variance_quantile(n, cfg.alpha, cfg.K, cfg.delta);
    if (std::isinf(q)) return ConfidenceInterval::whole_line(1 - cfg.alpha, "known_variance");
    const double hw = sigma_known / std::sqrt(static_cast<double>(n)) * q;
    return ConfidenceInterval::centered(sample.mean(), hw, 1 - cfg.alpha, "known_variance");
}

double a_constraint_margin(std::int64_t n, double alpha, double a, double K, double delta_n) {
    const double nu = nu_var(a, n, K);
    return alpha / 2 - delta_n - nu / 2 - normal_sf(std::sqrt(static_cast<double>(n) / a));
}

double unknown_variance_width_factor(std::int64_t n, double alpha, double a, double K, double delta_n) {
    if (!(a_constraint_margin(n, alpha, a, K, delta_n) > 0.0)) return kInf;
    const double t = alpha / 2 - delta_n - nu_var(a, n, K) / 2;
    const double q = normal_quantile_upper(t);
    const double denom = 1.0 / a - q * q / static_cast<double>(n);
    if (!(denom > 0.0)) return kInf;
    return q / std::sqrt(denom);
}

std::optional<AInterval> feasible_a_interval(std::int64_t n, double alpha, double K, const DeltaProvider& delta) {
    check_alpha(alpha);
    check_K(K);
    const double d = delta(n, K);
    if (!(alpha / 2 > d)) return std::nullopt;

    auto margin_b = [&](double b) { return a_constraint_margin(n, alpha, 1.0 + b, K, d); };
    auto feasible_b = [&](double b) { return margin_b(b) > 0.0; };

    std::vector<double> bs(kFeasibilityGrid);
    int first = -1;
    int last = -1;
    int best = 0;
    double best_margin = -kInf;
    for (int i = 0; i < kFeasibilityGrid; ++i) {
        bs[i] = log_grid_b(i, kFeasibilityGrid);
        const double m = margin_b(bs[i]);
        if (m > best_margin) {
            best_margin = m;
            best = i;
        }
        if (m > 0.0) {
            if (first < 0) first = i;
            last = i;
        }
    }
    if (first < 0) {
        // The feasible set can be narrower than one grid cell near alpha_min:
        // maximize the margin locally before declaring it empty.
        const double lo = std::log(bs[std::max(best - 1, 0)]);
        const double hi = std::log(bs[std::min(best + 1, kFeasibilityGrid - 1)]);
        auto [x, neg] = detail::golden_minimize([&](double lb) { return -margin_b(std::exp(lb)); }, lo, hi, 1e-12);
        if (!(-neg > 0.0)) return std::nullopt;
        const double b_star = std::exp(x);
        const double b_lo = detail::bisect_boundary(feasible_b, bs[std::max(best - 1, 0)] * 0.5, b_star, 1e-12);
        const double b_hi =
            detail::bisect_boundary(feasible_b, bs[std::min(best + 1, kFeasibilityGrid - 1)] * 2.0, b_star, 1e-12);
        return AInterval{1.0 + b_lo, 1.0 + b_hi};
    }
    // Lower end: a -> 1 is always infeasible (nu -> 1), so b = 0 brackets from outside.
    const double out_lo = first > 0 ? bs[first - 1] : 0.0;
    double out_hi;
    if (last + 1 < kFeasibilityGrid) {
        out_hi = bs[last + 1];
    } else {
        out_hi = bs[last];
        while (feasible_b(out_hi)) {
            out_hi *= 2.0;
            if (out_hi > 1e300) throw NumericalError("feasible_a_interval: unbounded feasible set");
        }
    }
    auto feasible_a = [&](double a) { return a_constraint_margin(n, alpha, a, K, d) > 0.0; };
    const double a_lo = detail::bisect_boundary(feasible_a, 1.0 + out_lo, 1.0 + bs[first], 1e-10);
    const double a_hi = detail::bisect_boundary(feasible_a, 1.0 + out_hi, 1.0 + bs[last], 1e-10);
    return AInterval{a_lo, a_hi};
}

double optimize_a(std::int64_t n, double alpha, double K, const DeltaProvider& delta) {
    const auto region = feasible_a_interval(n, alpha, K, delta);
    if (!region) throw NumericalError("optimize_a: no feasible a for these (n, alpha, K, delta)");
    const double d = delta(n, K);
    auto w = [&](double a) { return unknown_variance_width_factor(n, alpha, a, K, d); };
    if (region->upper <= region->lower) return region->lower;

    const double lb0 = std::log(region->lower - 1.0);
    const double lb1 = std::log(region->upper - 1.0);
    std::vector<double> as(kWidthGrid);
    int best = 0;
    double best_w = kInf;
    for (int i = 0; i < kWidthGrid; ++i) {
        as[i] = 1.0 + std::exp(lb0 + (lb1 - lb0) * i / (kWidthGrid - 1));
        const double wi = w(as[i]);
        if (wi < best_w) {
            best_w = wi;
            best = i;
        }
    }
    const double lo = as[std::max(best - 1, 0)];
    const double hi = as[std::min(best + 1, kWidthGrid - 1)];
    auto [a_star, w_star] = detail::golden_minimize(w, lo, hi, 1e-9);
    return w_star <= best_w ? a_star : as[best];
}

std::optional<double> resolve_a(const ARule& rule, std::int64_t n, double alpha, double K, const DeltaProvider& delta) {
    if (const auto* p = std::get_if<PowerRule>(&rule)) {
        const double a = (*p)(n);
        if (!(a > 1.0) || !std::isfinite(a)) {
            throw ConfigError("a_n rule '" + p->to_string() + "' returned a value <= 1 at n=" + std::to_string(n));
        }
        return a;
    }
    if (!feasible_a_interval(n, alpha, K, delta)) return std::nullopt;
    return optimize_a(n, alpha, K, delta);
}

ConfidenceInterval ci_unknown_variance(const SampleRef& sample, const MeanCiConfig& cfg) {
    check_alpha(cfg.alpha);
    check_K(cfg.K);
    const auto n = sample_size(sample, 1, "ci_unknown_variance");
    const double level = 1 - cfg.alpha;
    const auto a = resolve_a(cfg.a_rule, n, cfg.alpha, cfg.K, cfg.delta);
    if (!a) return ConfidenceInterval::whole_line(level, "unknown_variance");
    const double d = cfg.delta(n, cfg.K);
    if (!(a_constraint_margin(n, cfg.alpha, *a, cfg.K, d) > 0.0)) {
        return ConfidenceInterval::whole_line(level, "unknown_variance");
    }
    const double t = cfg.alpha / 2 - d - nu_var(*a, n, cfg.K) / 2;
    const double q = normal_quantile_upper(t);
    const double denom = 1.0 / *a - q * q / static_cast<double>(n);
    if (!(denom > 0.0)) throw NumericalError("ci_unknown_variance: 1/a - q^2/n <= 0 inside the feasible region");
    const auto m = sample_moments(sample);
    const double hw = m.sd() / std::sqrt(static_cast<double>(n)) * q / std::sqrt(denom);
    return ConfidenceInterval::centered(m.mean, hw, level, "unknown_variance");
}

double alpha_min(std::int64_t n, double K, const ARule& a_rule, const DeltaProvider& delta) {
    if (n < 1) throw DomainError("alpha_min: n must be >= 1");
    check_K(K);
    const double d = delta(n, K);
    auto h = [&](double a) { return normal_sf(std::sqrt(static_cast<double>(n) / a)) + nu_var(a, n, K) / 2; };
    double best;
    if (const auto* p = std::get_if<PowerRule>(&a_rule)) {
        const double a = (*p)(n);
        if (!(a > 1.0) || !std::isfinite(a)) throw ConfigError("alpha_min: a_n rule returned a value <= 1");
        best = h(a);
    } else {
        int ib = 0;
        best = kInf;
        for (int i = 0; i < kFeasibilityGrid; ++i) {
            const double v = h(1.0 + log_grid_b(i, kFeasibilityGrid));
            if (v < best) {
                best = v;
                ib = i;
            }
        }
        const double lo = std::log(log_grid_b(std::max(ib - 1, 0), kFeasibilityGrid));
        const double hi = std::log(log_grid_b(std::min(ib + 1, kFeasibilityGrid - 1), kFeasibilityGrid));
        auto [x, v] = detail::golden_minimize([&](double lb) { return h(1.0 + std::exp(lb)); }, lo, hi, 1e-12);
        best = std::min(best, v);
    }
    return std::min(1.0, 2.0 * (d + best));
}

double sample_kurtosis(const SampleRef& sample, double inflation) {
    if (!(inflation >= 0.0)) throw DomainError("sample_kurtosis: inflation must be >= 0");
    sample_size(sample, 1, "sample_kurtosis");
    const auto m = sample_moments(sample);
    if (!(m.variance > 0.0)) throw DataError("sample_kurtosis: zero-variance sample");
    const double k = m.central_m4 / (m.variance * m.variance);
    return k * (1.0 + inflation / std::sqrt(static_cast<double>(m.n)));
}

}  // namespace navae
