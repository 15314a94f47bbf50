#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace navae {

/// Upper bounds delta_n on the distance between the law of a standardized
/// mean and its normal (or one-term Edgeworth) approximation, uniformly over
/// distributions whose kurtosis is at most K.
///
/// Only the Berry-Esseen bound and user-declared tables are certified. The
/// leading-term Edgeworth providers drop their O(1/n) remainders and are
/// therefore not valid bounds by themselves.
class DeltaProvider {
public:
    enum class Kind { BerryEsseen, EdgeworthLeading, EdgeworthContinuousLeading, UserSupplied, MinOf };

    using Function = std::function<double(std::int64_t n, double K)>;

    static DeltaProvider berry_esseen();
    static DeltaProvider edgeworth_leading();
    static DeltaProvider edgeworth_continuous_leading();
    static DeltaProvider user(Function f, bool certified, std::string label = "user");
    static DeltaProvider constant(double value, bool certified = true);
    static DeltaProvider min_of(std::vector<DeltaProvider> members);

    /// Lookup table with columns n,K,delta. A query (n, K) uses the row with
    /// the largest tabulated n <= n and, among those, the smallest tabulated
    /// K >= K, i.e. it rounds toward the larger bound.
    static DeltaProvider from_table_csv(const std::string& path, bool certified = true);

    /// Parses "be", "edg-leading", "edg-cont-leading",
    /// "min(be,edg-leading)" (any comma list) and "user:<path>".
    static DeltaProvider parse(std::string_view spec);

    Kind kind() const { return kind_; }
    bool certified() const;
    const std::string& label() const { return label_; }

    /// delta_n for sample size n >= 1 and kurtosis bound K >= 1.
    double operator()(std::int64_t n, double K) const;

private:
    DeltaProvider(Kind kind, std::string label) : kind_(kind), label_(std::move(label)) {}

    Kind kind_;
    std::string label_;
    bool user_certified_ = false;
    Function user_fn_;
    std::vector<DeltaProvider> members_;
};

double delta_berry_esseen(std::int64_t n, double K);
double delta_edgeworth_leading(std::int64_t n, double K);
double delta_edgeworth_continuous_leading(std::int64_t n, double K);

inline double delta_of(const DeltaProvider& provider, std::int64_t n, double K) { return provider(n, K); }

}  // namespace navae
