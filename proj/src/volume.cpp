#include "cone_moduli/volume.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace cone_moduli::volume {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxZetaTerms = 48;

// zeta(2), zeta(4), ... via Euler's recurrence
// (n + 1/2) zeta(2n) = sum_{k=1}^{n-1} zeta(2k) zeta(2n-2k).
const std::array<double, kMaxZetaTerms>& even_zetas() {
    static const auto table = [] {
        std::array<double, kMaxZetaTerms> z{};
        z[0] = kPi * kPi / 6.0;
        for (int n = 2; n <= kMaxZetaTerms; ++n) {
            double acc = 0.0;
            for (int k = 1; k < n; ++k) acc += z[k - 1] * z[n - k - 1];
            z[n - 1] = acc / (n + 0.5);
        }
        return z;
    }();
    return table;
}

}  // namespace

double lobachevsky(double theta) {
    // reduce mod pi into [-pi/2, pi/2] (odd, pi-periodic)
    double r = theta - kPi * std::round(theta / kPi);
    if (r == 0.0) return 0.0;
    // L(r) = r - r log|2r| + sum_k zeta(2k)/(k(2k+1)) r^{2k+1} / pi^{2k}
    const auto& zetas = even_zetas();
    double x = r / kPi;
    double x2 = x * x;
    double sum = 0.0;
    double pow = r * x2;  // r * (r/pi)^{2k} at k = 1
    for (int k = 1; k <= kMaxZetaTerms; ++k) {
        double term = zetas[k - 1] * pow / (k * (2.0 * k + 1.0));
        sum += term;
        if (std::abs(term) < 1e-18) break;
        pow *= x2;
    }
    return r - r * std::log(std::abs(2.0 * r)) + sum;
}

double nu() { return 3.0 * lobachevsky(kPi / 3.0); }

double nu_quadrature() {
    // Tanh-sinh (double exponential) rule on -3 int_0^{pi/3} log|2 sin u| du;
    // the node clustering absorbs the log singularity at u = 0.
    const double a = 0.0, b = kPi / 3.0;
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    auto f = [](double u) { return -3.0 * std::log(std::abs(2.0 * std::sin(u))); };
    auto eval_at = [&](double t) {
        double s = std::sinh(t);
        double x = mid + half * std::tanh(0.5 * kPi * s);
        double c = std::cosh(0.5 * kPi * s);
        double w = half * 0.5 * kPi * std::cosh(t) / (c * c);
        if (!(x > a && x < b) || w <= 0.0 || !std::isfinite(w)) return 0.0;
        return f(x) * w;
    };
    double h = 1.0;
    double sum = eval_at(0.0);
    for (double t = h; t <= 7.0; t += h) sum += eval_at(t) + eval_at(-t);
    double integral = h * sum;
    for (int level = 0; level < 10; ++level) {
        h *= 0.5;
        double part = 0.0;
        for (double t = h; t <= 7.0; t += 2.0 * h) {
            part += eval_at(t) + eval_at(-t);
        }
        double refined = 0.5 * integral + h * part;
        if (level > 2 && std::abs(refined - integral) <
                             1e-13 * std::abs(refined)) {
            return refined;
        }
        integral = refined;
    }
    return integral;
}

double tetra_volume(Complex z) {
    if (std::abs(z) < 1e-14 || std::abs(z - 1.0) < 1e-14) {
        throw DegenerateShape("tetra_volume at z in {0, 1}");
    }
    return lobachevsky(std::arg(z)) + lobachevsky(std::arg(1.0 / (1.0 - z))) +
           lobachevsky(std::arg((z - 1.0) / z));
}

VolumeReport volume_report(std::span<const Complex> shapes) {
    VolumeReport r;
    r.per_tet.reserve(shapes.size());
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        double v = tetra_volume(shapes[i]);
        r.per_tet.push_back(v);
        r.total += v;
        if (shapes[i].imag() < 0.0) {
            r.negative_tets.push_back(static_cast<int>(i));
        }
    }
    r.bound = nu() * static_cast<double>(shapes.size());
    r.bound_satisfied = r.total <= r.bound + 1e-9;
    return r;
}

VolumeReport volume_report(const triangulation::IdealTriangulation& tri,
                           const triangulation::ShapeAssignment& s) {
    (void)tri;
    return volume_report(std::span<const Complex>(s.z));
}

}  // namespace cone_moduli::volume
