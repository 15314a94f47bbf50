#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "navae/mean_ci.hpp"
#include "navae/ols_ci.hpp"

namespace navae {

/// Philox4x32-10 counter-based generator. Every (seed, stream, n,
/// replication) tuple names an independent stream, so results never depend
/// on which worker draws them.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t seed, std::uint32_t stream = 0, std::uint64_t n = 0,
                        std::uint32_t replication = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type(0); }
    result_type operator()();

    /// Uniform on the open interval (0, 1).
    double uniform();
    double normal();
    double exponential();

    /// The raw Philox4x32-10 block function.
    static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> counter,
                                               std::array<std::uint32_t, 2> key);

private:
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> block_{};
    int used_ = 4;
    std::optional<double> spare_normal_;
};

/// Euler-Mascheroni constant used by the Gumbel error parameterization.
inline constexpr double kEulerGamma = 0.5772156649015329;

Sample sample_exponential(std::int64_t n, CounterRng& rng);
Sample sample_exponential(std::int64_t n, std::uint64_t seed);
Sample sample_normal(std::int64_t n, CounterRng& rng, double mean = 0.0, double sd = 1.0);

/// Y = 2 + X1 - 3 X2 + e with (X1, X2) centered normal (variances 1 and 2,
/// correlation 0.5) and e | X Gumbel with mean 0 and variance (X1 + X2)^2.
/// X carries an intercept column; u = (0, 1, 0) selects the second
/// coordinate of beta = (2, 1, -3), so the target is 1.
Design sample_gumbel_hetero_linear(std::int64_t n, CounterRng& rng);
Design sample_gumbel_hetero_linear(std::int64_t n, std::uint64_t seed);

/// Gumbel(location, scale) error with mean zero and standard deviation `sd`.
double gumbel_zero_mean(double sd, CounterRng& rng);

struct Dgp {
    enum class Kind { ExponentialMean, NormalMean, GumbelHeteroLinear, CustomMean, CustomOls };
    using MeanGenerator = std::function<Sample(std::int64_t, CounterRng&)>;
    using OlsGenerator = std::function<Design(std::int64_t, CounterRng&)>;

    Kind kind = Kind::ExponentialMean;
    double target = 1.0;
    std::string name = "exponential";
    MeanGenerator custom_mean;
    OlsGenerator custom_ols;

    static Dgp exponential();
    static Dgp normal(double mean = 0.0, double sd = 1.0);
    static Dgp gumbel_hetero_linear();
    static Dgp custom(std::string name, double target, MeanGenerator gen);
    static Dgp custom(std::string name, double target, OlsGenerator gen);

    bool is_regression() const { return kind == Kind::GumbelHeteroLinear || kind == Kind::CustomOls; }

    // Parameters of NormalMean.
    double normal_mean = 0.0;
    double normal_sd = 1.0;
};

struct MeanMethod {
    enum class Kind { Clt, Student, KnownVariance, UnknownVariance, Chebyshev, Hoeffding };
    std::string name;
    Kind kind = Kind::Clt;
    double K = 9.0;
    DeltaProvider delta = DeltaProvider::berry_esseen();
    ARule a_rule = PowerRule{1.0, 1.0, -0.2};
    double sigma_known = 1.0;
    double var_bound = 1.0;
    double support_lower = 0.0;
    double support_upper = 1.0;
    /// Replace K by the empirical kurtosis times (1 + M/sqrt(n)).
    std::optional<double> plugin_K_inflation;
    /// Also record alpha_min at the K actually used.
    bool report_alpha_min = false;

    bool is_navae() const { return kind == Kind::KnownVariance || kind == Kind::UnknownVariance; }
};

struct OlsMethod {
    enum class Kind { Asymp, Edg };
    std::string name;
    Kind kind = Kind::Asymp;
    OlsBounds bounds;
    OlsTuning tuning;
};

using Method = std::variant<MeanMethod, OlsMethod>;

const std::string& method_name(const Method& m);
bool method_uses_uncertified_delta(const Method& m);

struct SimStudySpec {
    Dgp dgp;
    std::vector<Method> methods;
    std::vector<std::int64_t> n_grid;
    std::int64_t replications = 1000;
    std::uint64_t seed = 1;
    double alpha = 0.10;
    /// 0: NAVAE_THREADS or the hardware concurrency.
    unsigned threads = 0;

    void validate() const;
};

struct SimRow {
    std::string method;
    std::int64_t n = 0;
    double alpha = 0.0;
    std::int64_t replications = 0;
    double coverage = 0.0;
    double mc_se = 0.0;
    std::optional<double> mean_width;  ///< over bounded intervals only
    double whole_line_fraction = 0.0;
    std::optional<double> mean_alpha_min;
    std::optional<double> median_alpha_min;
};

struct SimReport {
    std::vector<SimRow> rows;
};

/// Coverage of every method at every n. A replication's dataset is shared
/// by all methods and depends only on (seed, n, replication index).
SimReport run_coverage_study(const SimStudySpec& spec);

struct WidthRow {
    std::int64_t n = 0;
    std::optional<double> mean_width;      ///< Monte Carlo, bounded intervals
    std::optional<double> baseline_width;  ///< ci_clt or ci_asymp on the same data
    std::optional<double> ratio;           ///< nullopt while the method is the whole line
    bool deterministic_ratio = false;
};

/// Width of one method against its asymptotic counterpart. Known- and
/// unknown-variance ratios are closed-form; the others are Monte Carlo.
std::vector<WidthRow> width_curve(const SimStudySpec& spec);

/// Worker count: `requested` if non-zero, else NAVAE_THREADS, else the
/// hardware concurrency.
unsigned resolve_threads(unsigned requested);

}  // namespace navae
