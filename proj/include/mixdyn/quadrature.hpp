#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mixdyn/errors.hpp"

namespace mixdyn {

struct QuadratureResult {
    double value;
    double error;
};

namespace detail {

/// One 15-point Kronrod panel on [a, b] with its embedded Gauss estimate.
/// Boost's own recursion compares unscaled [-1, 1] errors against scaled
/// tolerances (1.74), so only its fixed rule is used and the mapping is ours.
template <class F>
QuadratureResult kronrod_panel(F& f, double a, double b, double* l1) {
    using boost::math::quadrature::gauss_kronrod;
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double err = 0.0;
    double l = 0.0;
    const double v = gauss_kronrod<double, 15>::integrate([&](double s) { return f(mid + half * s); }, -1.0, 1.0, 0,
                                                          0.0, &err, &l);
    *l1 = l * half;
    return {v * half, err * half};
}

}  // namespace detail

/// Globally adaptive 15-point Gauss-Kronrod on [a, b]: the panel with the
/// largest error estimate is bisected until the total error is below
/// max(abs_tol, rel_tol |I|, 50 eps \int|f|), the last term being the
/// rounding floor. Throws NumericalError carrying the achieved error when
/// `max_panels` is reached first.
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, double abs_tol, double rel_tol,
                                    std::size_t max_panels = 4000) {
    struct Panel {
        double a, b, value, error, l1;
        bool operator<(const Panel& o) const { return error < o.error; }
    };
    std::priority_queue<Panel> heap;
    auto push = [&](double lo, double hi) {
        double l1 = 0.0;
        const auto r = detail::kronrod_panel(f, lo, hi, &l1);
        heap.push({lo, hi, r.value, r.error, l1});
        return Panel{lo, hi, r.value, r.error, l1};
    };
    const auto first = push(a, b);
    double value = first.value;
    double error = first.error;
    double l1 = first.l1;
    auto target = [&] {
        return std::max({abs_tol, rel_tol * std::abs(value), 50.0 * std::numeric_limits<double>::epsilon() * l1});
    };
    while (error > target() && heap.size() < max_panels) {
        const Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            heap.push(worst);
            break;
        }
        const auto left = push(worst.a, mid);
        const auto right = push(mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        l1 += left.l1 + right.l1 - worst.l1;
    }
    if (!(error <= target()) || !std::isfinite(value)) {
        std::ostringstream msg;
        msg << "adaptive quadrature did not converge: error " << error << " above target " << target();
        throw NumericalError(msg.str(), error);
    }
    return {value, error};
}

}  // namespace mixdyn
