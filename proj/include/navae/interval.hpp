#pragma once

#include <string>
#include <utility>

namespace navae {

/// A closed interval [lower, upper], a degenerate point, or the whole real
/// line. The whole line is its own state and is never stored as infinite
/// bounds.
class ConfidenceInterval {
public:
    static ConfidenceInterval bounded(double lower, double upper, double level, std::string method);
    static ConfidenceInterval centered(double center, double half_width, double level, std::string method);
    static ConfidenceInterval whole_line(double level, std::string method);

    bool is_whole_line() const { return whole_line_; }
    bool is_bounded() const { return !whole_line_; }

    /// Bounds; throw std::logic_error on the whole line.
    double lower() const;
    double upper() const;
    double center() const;
    double half_width() const;
    double width() const;

    bool contains(double value) const;
    /// True if `other` is a subset of *this.
    bool contains(const ConfidenceInterval& other) const;

    double level() const { return level_; }
    const std::string& method() const { return method_; }

private:
    ConfidenceInterval(bool whole, double lo, double hi, double level, std::string method)
        : whole_line_(whole), lower_(lo), upper_(hi), level_(level), method_(std::move(method)) {}

    bool whole_line_;
    double lower_;
    double upper_;
    double level_;
    std::string method_;
};

}  // namespace navae
