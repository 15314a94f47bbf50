#include "navae/dgp_sim.hpp"
#include "navae/specialfn.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

#include "navae/errors.hpp"

namespace navae {

// ---------------------------------------------------------------------------
// Philox4x32-10

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(prod >> 32);
    lo = static_cast<std::uint32_t>(prod);
}

}  // namespace

std::array<std::uint32_t, 4> CounterRng::philox(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, c[0], hi0, lo0);
        mulhilo(kPhiloxM1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kPhiloxW0;
        k[1] += kPhiloxW1;
    }
    return c;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint32_t stream, std::uint64_t n, std::uint32_t replication)
    : counter_{0u, replication, static_cast<std::uint32_t>(n),
               (stream << 16) ^ static_cast<std::uint32_t>(n >> 32)},
      key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

CounterRng::result_type CounterRng::operator()() {
    if (used_ >= 4) {
        block_ = philox(counter_, key_);
        if (++counter_[0] == 0) throw NumericalError("CounterRng: stream exhausted");
        used_ = 0;
    }
    const std::uint64_t hi = block_[used_];
    const std::uint64_t lo = block_[used_ + 1];
    used_ += 2;
    return (hi << 32) | lo;
}

double CounterRng::uniform() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal() {
    if (spare_normal_) {
        const double z = *spare_normal_;
        spare_normal_.reset();
        return z;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    spare_normal_ = r * std::sin(theta);
    return r * std::cos(theta);
}

double CounterRng::exponential() { return -std::log(uniform()); }

// ---------------------------------------------------------------------------
// Data-generating processes

Sample sample_exponential(std::int64_t n, CounterRng& rng) {
    if (n < 1) throw ConfigError("sample_exponential: n must be >= 1");
    Sample x(n);
    for (std::int64_t i = 0; i < n; ++i) x(i) = rng.exponential();
    return x;
}

Sample sample_exponential(std::int64_t n, std::uint64_t seed) {
    CounterRng rng(seed);
    return sample_exponential(n, rng);
}

Sample sample_normal(std::int64_t n, CounterRng& rng, double mean, double sd) {
    if (n < 1) throw ConfigError("sample_normal: n must be >= 1");
    Sample x(n);
    for (std::int64_t i = 0; i < n; ++i) x(i) = mean + sd * rng.normal();
    return x;
}

double gumbel_zero_mean(double sd, CounterRng& rng) {
    const double u = rng.uniform();
    if (sd == 0.0) return 0.0;
    const double scale = sd * std::sqrt(6.0) / std::numbers::pi;
    const double location = -kEulerGamma * scale;
    return location - scale * std::log(-std::log(u));
}

Design sample_gumbel_hetero_linear(std::int64_t n, CounterRng& rng) {
    if (n < 1) throw ConfigError("sample_gumbel_hetero_linear: n must be >= 1");
    // Cholesky factor of [[1, 0.5*sqrt(2)], [0.5*sqrt(2), 2]].
    const double l21 = 0.5 * std::sqrt(2.0);
    const double l22 = std::sqrt(1.5);
    Design d;
    d.X.resize(n, 3);
    d.y.resize(n);
    d.u = Eigen::Vector3d(0.0, 1.0, 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
        const double z1 = rng.normal();
        const double z2 = rng.normal();
        const double x1 = z1;
        const double x2 = l21 * z1 + l22 * z2;
        const double e = gumbel_zero_mean(std::abs(x1 + x2), rng);
        d.X(i, 0) = 1.0;
        d.X(i, 1) = x1;
        d.X(i, 2) = x2;
        d.y(i) = 2.0 + x1 - 3.0 * x2 + e;
    }
    return d;
}

Design sample_gumbel_hetero_linear(std::int64_t n, std::uint64_t seed) {
    CounterRng rng(seed);
    return sample_gumbel_hetero_linear(n, rng);
}

Dgp Dgp::exponential() { return Dgp{}; }

Dgp Dgp::normal(double mean, double sd) {
    if (!(sd > 0.0)) throw ConfigError("Dgp::normal: sd must be > 0");
    Dgp d;
    d.kind = Kind::NormalMean;
    d.target = mean;
    d.name = "normal";
    d.normal_mean = mean;
    d.normal_sd = sd;
    return d;
}

Dgp Dgp::gumbel_hetero_linear() {
    Dgp d;
    d.kind = Kind::GumbelHeteroLinear;
    d.target = 1.0;
    d.name = "gumbel_hetero_linear";
    return d;
}

Dgp Dgp::custom(std::string name, double target, MeanGenerator gen) {
    Dgp d;
    d.kind = Kind::CustomMean;
    d.target = target;
    d.name = std::move(name);
    d.custom_mean = std::move(gen);
    return d;
}

Dgp Dgp::custom(std::string name, double target, OlsGenerator gen) {
    Dgp d;
    d.kind = Kind::CustomOls;
    d.target = target;
    d.name = std::move(name);
    d.custom_ols = std::move(gen);
    return d;
}

// ---------------------------------------------------------------------------
// Harness

const std::string& method_name(const Method& m) {
    return std::visit([](const auto& x) -> const std::string& { return x.name; }, m);
}

bool method_uses_uncertified_delta(const Method& m) {
    if (const auto* mm = std::get_if<MeanMethod>(&m)) return mm->is_navae() && !mm->delta.certified();
    const auto& om = std::get<OlsMethod>(m);
    return om.kind == OlsMethod::Kind::Edg && !om.tuning.delta.certified();
}

void SimStudySpec::validate() const {
    if (replications < 1) throw ConfigError("simulation: replications M must be >= 1");
    if (methods.empty()) throw ConfigError("simulation: no methods");
    if (n_grid.empty()) throw ConfigError("simulation: empty n grid");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("simulation: alpha must lie in (0,1)");
    for (auto n : n_grid) {
        if (n < 1) throw ConfigError("simulation: n must be >= 1");
    }
    if (replications > std::int64_t(0xFFFFFFFF)) throw ConfigError("simulation: too many replications");
    const bool regression = dgp.is_regression();
    for (const auto& m : methods) {
        if (regression != std::holds_alternative<OlsMethod>(m)) {
            throw ConfigError("simulation: method '" + method_name(m) + "' does not match the DGP target");
        }
    }
    if (dgp.kind == Dgp::Kind::CustomMean && !dgp.custom_mean) throw ConfigError("simulation: empty custom generator");
    if (dgp.kind == Dgp::Kind::CustomOls && !dgp.custom_ols) throw ConfigError("simulation: empty custom generator");
}

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("NAVAE_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

struct RepResult {
    bool covered = false;
    bool whole_line = false;
    double width = 0.0;
    double alpha_min = std::numeric_limits<double>::quiet_NaN();
};

template <typename F>
void parallel_for(std::int64_t count, unsigned threads, F&& body) {
    threads = static_cast<unsigned>(std::min<std::int64_t>(threads, count));
    if (threads <= 1) {
        for (std::int64_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::int64_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = count;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

RepResult record(const ConfidenceInterval& ci, double target) {
    RepResult r;
    r.whole_line = ci.is_whole_line();
    r.covered = ci.contains(target);
    if (!r.whole_line) r.width = ci.width();
    return r;
}

RepResult evaluate_mean(const MeanMethod& m, const Sample& x, double alpha, double target) {
    using K = MeanMethod::Kind;
    switch (m.kind) {
        case K::Clt:
            return record(ci_clt(x, alpha), target);
        case K::Student:
            return record(ci_student(x, alpha), target);
        case K::Chebyshev:
            return record(ci_chebyshev(x, alpha, m.var_bound), target);
        case K::Hoeffding:
            return record(ci_hoeffding(x, alpha, m.support_lower, m.support_upper), target);
        case K::KnownVariance:
        case K::UnknownVariance:
            break;
    }
    MeanCiConfig cfg{alpha, m.K, m.delta, m.a_rule};
    if (m.plugin_K_inflation) cfg.K = std::max(1.0, sample_kurtosis(x, *m.plugin_K_inflation));
    RepResult r = m.kind == K::KnownVariance ? record(ci_known_variance(x, m.sigma_known, cfg), target)
                                             : record(ci_unknown_variance(x, cfg), target);
    if (m.report_alpha_min) r.alpha_min = alpha_min(static_cast<std::int64_t>(x.size()), cfg.K, cfg.a_rule, cfg.delta);
    return r;
}

RepResult evaluate_ols(const OlsMethod& m, const OlsFit& fit, const Eigen::VectorXd& u, double alpha, double target) {
    if (m.kind == OlsMethod::Kind::Asymp) return record(ci_asymp(fit, u, alpha), target);
    return record(ci_edg(fit, u, alpha, m.bounds, m.tuning), target);
}

// Results for one n, laid out as [replication * methods + method].
std::vector<RepResult> simulate_n(const SimStudySpec& spec, std::int64_t n, unsigned threads) {
    const std::size_t nm = spec.methods.size();
    std::vector<RepResult> out(static_cast<std::size_t>(spec.replications) * nm);
    parallel_for(spec.replications, threads, [&](std::int64_t rep) {
        CounterRng rng(spec.seed, 0, static_cast<std::uint64_t>(n), static_cast<std::uint32_t>(rep));
        RepResult* slot = out.data() + static_cast<std::size_t>(rep) * nm;
        if (spec.dgp.is_regression()) {
            const Design d = spec.dgp.kind == Dgp::Kind::GumbelHeteroLinear ? sample_gumbel_hetero_linear(n, rng)
                                                                            : spec.dgp.custom_ols(n, rng);
            d.validate();
            const OlsFit fit = ols_fit(d.X, d.y);
            for (std::size_t k = 0; k < nm; ++k) {
                slot[k] = evaluate_ols(std::get<OlsMethod>(spec.methods[k]), fit, d.u, spec.alpha, spec.dgp.target);
            }
        } else {
            Sample x;
            switch (spec.dgp.kind) {
                case Dgp::Kind::ExponentialMean:
                    x = sample_exponential(n, rng);
                    break;
                case Dgp::Kind::NormalMean:
                    x = sample_normal(n, rng, spec.dgp.normal_mean, spec.dgp.normal_sd);
                    break;
                default:
                    x = spec.dgp.custom_mean(n, rng);
            }
            for (std::size_t k = 0; k < nm; ++k) {
                slot[k] = evaluate_mean(std::get<MeanMethod>(spec.methods[k]), x, spec.alpha, spec.dgp.target);
            }
        }
    });
    return out;
}

}  // namespace

SimReport run_coverage_study(const SimStudySpec& spec) {
    spec.validate();
    const unsigned threads = resolve_threads(spec.threads);
    const std::size_t nm = spec.methods.size();
    const auto M = spec.replications;
    SimReport report;
    for (const auto n : spec.n_grid) {
        const auto results = simulate_n(spec, n, threads);
        for (std::size_t k = 0; k < nm; ++k) {
            SimRow row;
            row.method = method_name(spec.methods[k]);
            row.n = n;
            row.alpha = spec.alpha;
            row.replications = M;
            std::int64_t covered = 0;
            std::int64_t whole = 0;
            double width_sum = 0.0;
            std::vector<double> amins;
            for (std::int64_t r = 0; r < M; ++r) {
                const auto& res = results[static_cast<std::size_t>(r) * nm + k];
                covered += res.covered;
                if (res.whole_line) {
                    ++whole;
                } else {
                    width_sum += res.width;
                }
                if (!std::isnan(res.alpha_min)) amins.push_back(res.alpha_min);
            }
            const double Md = static_cast<double>(M);
            row.coverage = static_cast<double>(covered) / Md;
            row.mc_se = std::sqrt(row.coverage * (1.0 - row.coverage) / Md);
            row.whole_line_fraction = static_cast<double>(whole) / Md;
            if (whole < M) row.mean_width = width_sum / static_cast<double>(M - whole);
            if (!amins.empty()) {
                double s = 0.0;
                for (double a : amins) s += a;
                row.mean_alpha_min = s / static_cast<double>(amins.size());
                std::sort(amins.begin(), amins.end());
                const std::size_t h = amins.size() / 2;
                row.median_alpha_min = amins.size() % 2 ? amins[h] : 0.5 * (amins[h - 1] + amins[h]);
            }
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

std::vector<WidthRow> width_curve(const SimStudySpec& spec_in) {
    spec_in.validate();
    if (spec_in.methods.size() != 1) throw ConfigError("width_curve: exactly one method is required");
    SimStudySpec spec = spec_in;
    const Method& method = spec_in.methods.front();
    if (spec.dgp.is_regression()) {
        OlsMethod base;
        base.name = "asymp";
        spec.methods.push_back(base);
    } else {
        MeanMethod base;
        base.name = "clt";
        spec.methods.push_back(base);
    }

    const unsigned threads = resolve_threads(spec.threads);
    const double q_ref = normal_quantile_upper(spec.alpha / 2);
    std::vector<WidthRow> rows;
    for (const auto n : spec.n_grid) {
        WidthRow row;
        row.n = n;
        const auto results = simulate_n(spec, n, threads);
        double w_sum = 0.0;
        double b_sum = 0.0;
        std::int64_t bounded = 0;
        for (std::int64_t r = 0; r < spec.replications; ++r) {
            const auto& res = results[static_cast<std::size_t>(r) * 2];
            if (res.whole_line) continue;
            ++bounded;
            w_sum += res.width;
            b_sum += results[static_cast<std::size_t>(r) * 2 + 1].width;
        }
        if (bounded > 0) {
            row.mean_width = w_sum / static_cast<double>(bounded);
            row.baseline_width = b_sum / static_cast<double>(bounded);
        }

        const auto* mm = std::get_if<MeanMethod>(&method);
        if (mm && mm->is_navae() && !mm->plugin_K_inflation) {
            row.deterministic_ratio = true;
            if (mm->kind == MeanMethod::Kind::KnownVariance) {
                const double q = known_variance_quantile(n, spec.alpha, mm->K, mm->delta);
                if (std::isfinite(q)) row.ratio = q / q_ref;
            } else {
                const auto a = resolve_a(mm->a_rule, n, spec.alpha, mm->K, mm->delta);
                if (a) {
                    const double f = unknown_variance_width_factor(n, spec.alpha, *a, mm->K, mm->delta(n, mm->K));
                    if (std::isfinite(f)) row.ratio = f / q_ref;
                }
            }
        } else if (row.mean_width && *row.baseline_width > 0.0) {
            row.ratio = *row.mean_width / *row.baseline_width;
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace navae
