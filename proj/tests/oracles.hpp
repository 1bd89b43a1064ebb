// Independent numerical oracles used by the tests.  These deliberately
// avoid the library's production code paths: the Lobachevsky oracle is an
// adaptive Simpson rule with explicit handling of the log singularity,
// not the zeta series and not the tanh-sinh rule.
#pragma once

#include <cmath>
#include <functional>

namespace oracles {

inline double adaptive_simpson(const std::function<double(double)>& f,
                               double a, double b, double fa, double fm,
                               double fb, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return adaptive_simpson(f, a, m, fa, flm, fm, tol / 2.0, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, tol / 2.0, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double tol = 1e-13) {
    double m = 0.5 * (a + b);
    return adaptive_simpson(f, a, b, f(a), f(m), f(b), tol, 48);
}

/// Lobachevsky oracle: -int_0^theta log|2 sin u| du for theta in (0, pi).
/// Splits off the analytic integral of log(2u) so the remaining integrand
/// log(sin u / u) is smooth at 0.
inline double lobachevsky_quadrature(double theta) {
    if (theta == 0.0) return 0.0;
    double sign = 1.0;
    if (theta < 0.0) {
        theta = -theta;
        sign = -1.0;
    }
    // -int_0^t log(2u) du = t - t log(2t)
    double singular_part = theta - theta * std::log(2.0 * theta);
    auto smooth = [](double u) {
        if (u < 1e-8) return 0.0;  // log(sin u / u) = O(u^2)
        return std::log(std::sin(u) / u);
    };
    double smooth_part = -integrate(smooth, 0.0, theta);
    return sign * (singular_part + smooth_part);
}

/// Regular-ideal-tetrahedron volume by direct quadrature of
/// -3 int_0^{pi/3} log|2 sin u| du.
inline double nu_oracle() {
    return 3.0 * lobachevsky_quadrature(3.14159265358979323846 / 3.0);
}

/// Central 5-point finite differences for test-side derivative checks.
inline double fd1(const std::function<double(double)>& f, double x,
                  double h = 1e-4) {
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) /
           (12.0 * h);
}

inline double fd2(const std::function<double(double)>& f, double x,
                  double h = 1e-4) {
    return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) -
            f(x - 2 * h)) /
           (12.0 * h * h);
}

/// Solve 2 cosh(l / 2) = target for l > 0 by bisection (loxodromic oracle).
inline double bisect_cosh_half(double target) {
    double lo = 0.0, hi = 50.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (2.0 * std::cosh(mid / 2.0) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace oracles
