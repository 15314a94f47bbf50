#pragma once

#include <cmath>
#include <utility>

namespace navae::detail {

// Golden-section search for a minimum of f on [lo, hi]. Returns (x, f(x)).
template <typename F>
std::pair<double, double> golden_minimize(F&& f, double lo, double hi, double tol) {
    constexpr double inv_phi = 0.61803398874989484820;
    double a = lo;
    double b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int it = 0; it < 500 && (b - a) > tol; ++it) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return fc <= fd ? std::pair{c, fc} : std::pair{d, fd};
}

// Shrinks [out, in] (pred(out) false, pred(in) true) until the two ends are
// within rel_tol * |in|. Returns the end on which pred holds.
template <typename Pred>
double bisect_boundary(Pred&& pred, double out, double in, double rel_tol) {
    for (int it = 0; it < 400; ++it) {
        if (std::abs(in - out) <= rel_tol * std::abs(in)) break;
        const double mid = 0.5 * (in + out);
        if (mid == in || mid == out) break;
        if (pred(mid)) {
            in = mid;
        } else {
            out = mid;
        }
    }
    return in;
}

}  // namespace navae::detail
