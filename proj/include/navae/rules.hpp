#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

namespace navae {

/// Tuning sequence n -> offset + scale * n^exponent.
struct PowerRule {
    double offset = 0.0;
    double scale = 1.0;
    double exponent = 0.0;

    double operator()(std::int64_t n) const;
    std::string to_string() const;

    static PowerRule constant(double c) { return {c, 0.0, 0.0}; }

    /// Parses "c1 + c2*n^e" and its sub-forms: "n^-1/5", "1+n^-0.2",
    /// "1+20*n^-2/5", "0.5", "3n^0.1". Exponents may be fractions.
    static PowerRule parse(std::string_view text);
};

/// Width-minimizing choice of a_n for the unknown-variance mean interval.
struct OptimizedA {};

using ARule = std::variant<PowerRule, OptimizedA>;

/// Accepts "optimized" in addition to the PowerRule forms.
ARule parse_a_rule(std::string_view text);
std::string to_string(const ARule& rule);

}  // namespace navae
