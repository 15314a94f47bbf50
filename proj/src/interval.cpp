#include "navae/interval.hpp"

#include <cmath>
#include <stdexcept>

#include "navae/errors.hpp"

namespace navae {

ConfidenceInterval ConfidenceInterval::bounded(double lower, double upper, double level, std::string method) {
    if (!std::isfinite(lower) || !std::isfinite(upper)) {
        throw NumericalError("ConfidenceInterval: bounded interval needs finite bounds");
    }
    if (lower > upper) throw NumericalError("ConfidenceInterval: lower > upper");
    return {false, lower, upper, level, std::move(method)};
}

ConfidenceInterval ConfidenceInterval::centered(double center, double half_width, double level,
                                                std::string method) {
    if (!(half_width >= 0.0)) throw NumericalError("ConfidenceInterval: negative half-width");
    return bounded(center - half_width, center + half_width, level, std::move(method));
}

ConfidenceInterval ConfidenceInterval::whole_line(double level, std::string method) {
    return {true, 0.0, 0.0, level, std::move(method)};
}

double ConfidenceInterval::lower() const {
    if (whole_line_) throw std::logic_error("ConfidenceInterval: whole line has no lower bound");
    return lower_;
}

double ConfidenceInterval::upper() const {
    if (whole_line_) throw std::logic_error("ConfidenceInterval: whole line has no upper bound");
    return upper_;
}

double ConfidenceInterval::center() const { return 0.5 * (lower() + upper()); }

double ConfidenceInterval::half_width() const { return 0.5 * (upper() - lower()); }

double ConfidenceInterval::width() const { return upper() - lower(); }

bool ConfidenceInterval::contains(double value) const {
    if (whole_line_) return true;
    return lower_ <= value && value <= upper_;
}

bool ConfidenceInterval::contains(const ConfidenceInterval& other) const {
    if (whole_line_) return true;
    if (other.whole_line_) return false;
    return lower_ <= other.lower_ && other.upper_ <= upper_;
}

}  // namespace navae
