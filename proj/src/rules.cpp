#include "navae/rules.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "navae/errors.hpp"

namespace navae {

namespace {

class RuleParser {
public:
    explicit RuleParser(std::string_view text) {
        for (char c : text) {
            if (!std::isspace(static_cast<unsigned char>(c))) s_.push_back(c);
        }
    }

    PowerRule parse() {
        if (s_.empty()) fail("empty rule");
        PowerRule rule{0.0, 0.0, 0.0};
        bool have_const = false;
        bool have_power = false;
        double sign = 1.0;
        while (true) {
            double coef = 1.0;
            bool have_coef = false;
            if (peek() == '+' || peek() == '-') {
                if (peek() == '-') sign = -sign;
                ++pos_;
            }
            if (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.') {
                coef = number();
                have_coef = true;
                if (peek() == '*') ++pos_;
            }
            if (peek() == 'n') {
                ++pos_;
                double e = 1.0;
                if (peek() == '^') {
                    ++pos_;
                    e = exponent();
                }
                if (have_power) fail("more than one n^e term");
                have_power = true;
                rule.scale = sign * coef;
                rule.exponent = e;
            } else {
                if (!have_coef) fail("expected a number or n^e");
                if (have_const) fail("more than one constant term");
                have_const = true;
                rule.offset = sign * coef;
            }
            sign = 1.0;
            if (pos_ == s_.size()) break;
            if (peek() != '+' && peek() != '-') fail("unexpected character");
        }
        return rule;
    }

private:
    char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

    [[noreturn]] void fail(const std::string& why) const {
        throw ConfigError("tuning rule '" + s_ + "': " + why);
    }

    double number() {
        double v = 0.0;
        const char* begin = s_.data() + pos_;
        const char* end = s_.data() + s_.size();
        auto [ptr, ec] = std::from_chars(begin, end, v);
        if (ec != std::errc() || ptr == begin) fail("bad number");
        pos_ += static_cast<std::size_t>(ptr - begin);
        return v;
    }

    double exponent() {
        double sgn = 1.0;
        bool paren = false;
        if (peek() == '(') {
            paren = true;
            ++pos_;
        }
        if (peek() == '-' || peek() == '+') {
            if (peek() == '-') sgn = -1.0;
            ++pos_;
        }
        double v = number();
        if (peek() == '/') {
            ++pos_;
            const double den = number();
            if (den == 0.0) fail("zero denominator in exponent");
            v /= den;
        }
        if (paren) {
            if (peek() != ')') fail("missing ')'");
            ++pos_;
        }
        return sgn * v;
    }

    std::string s_;
    std::size_t pos_ = 0;
};

}  // namespace

double PowerRule::operator()(std::int64_t n) const {
    if (scale == 0.0) return offset;
    return offset + scale * std::pow(static_cast<double>(n), exponent);
}

std::string PowerRule::to_string() const {
    std::ostringstream os;
    os.precision(17);
    if (scale == 0.0) {
        os << offset;
        return os.str();
    }
    if (offset != 0.0) os << offset << "+";
    os << scale << "*n^" << exponent;
    return os.str();
}

PowerRule PowerRule::parse(std::string_view text) { return RuleParser(text).parse(); }

ARule parse_a_rule(std::string_view text) {
    std::string t;
    for (char c : text) {
        if (!std::isspace(static_cast<unsigned char>(c))) t.push_back(c);
    }
    if (t == "optimized") return OptimizedA{};
    return PowerRule::parse(t);
}

std::string to_string(const ARule& rule) {
    if (std::holds_alternative<OptimizedA>(rule)) return "optimized";
    return std::get<PowerRule>(rule).to_string();
}

}  // namespace navae
