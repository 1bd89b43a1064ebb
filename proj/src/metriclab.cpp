#include "cone_moduli/metriclab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

namespace cone_moduli::metriclab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kKnotSnap = 1e-12;

// Derivative of the degree-4 interpolating polynomial through 5 nodes,
// evaluated at x.  Nodes need not be centered, so stencils can shift
// inward near piece ends.
void poly5_derivs(const double* xs, const double* ys, double x, double& d1,
                  double& d2) {
    Eigen::Matrix<double, 5, 5> V;
    Eigen::Matrix<double, 5, 1> rhs;
    for (int i = 0; i < 5; ++i) {
        double dx = xs[i] - x;
        double p = 1.0;
        for (int j = 0; j < 5; ++j) {
            V(i, j) = p;
            p *= dx;
        }
        rhs(i) = ys[i];
    }
    Eigen::Matrix<double, 5, 1> c = V.fullPivLu().solve(rhs);
    d1 = c(1);
    d2 = 2.0 * c(2);
}

}  // namespace

ScalarProfile::ScalarProfile(std::vector<ProfilePiece> pieces)
    : pieces_(std::move(pieces)) {
    for (std::size_t i = 0; i + 1 < pieces_.size(); ++i) {
        knots_.push_back(pieces_[i].hi);
    }
}

int ScalarProfile::piece_index(double x, Side side) const {
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        const auto& p = pieces_[i];
        if (x < p.lo - kKnotSnap || x > p.hi + kKnotSnap) continue;
        if (std::abs(x - p.hi) <= kKnotSnap && side == Side::Above &&
            i + 1 < pieces_.size()) {
            continue;  // prefer the right piece
        }
        if (std::abs(x - p.lo) <= kKnotSnap && side == Side::Below && i > 0) {
            return static_cast<int>(i - 1);
        }
        return static_cast<int>(i);
    }
    throw std::out_of_range("profile evaluated outside its domain");
}

double ScalarProfile::value(double x, Side side) const {
    return pieces_[piece_index(x, side)].value(x);
}

double ScalarProfile::deriv1(double x, Side side, double h,
                             bool force_fd) const {
    const auto& p = pieces_[piece_index(x, side)];
    if (p.d1 && !force_fd) return p.d1(x);
    double width = p.hi - p.lo;
    double hh = std::min(h, width / 8.0);
    double a = std::clamp(x - 2.0 * hh, p.lo, p.hi - 4.0 * hh);
    double xs[5], ys[5];
    for (int i = 0; i < 5; ++i) {
        xs[i] = a + i * hh;
        ys[i] = p.value(xs[i]);
    }
    double d1, d2;
    poly5_derivs(xs, ys, x, d1, d2);
    return d1;
}

double ScalarProfile::deriv2(double x, Side side, double h,
                             bool force_fd) const {
    const auto& p = pieces_[piece_index(x, side)];
    if (p.d2 && !force_fd) return p.d2(x);
    double width = p.hi - p.lo;
    double hh = std::min(h, width / 8.0);
    double a = std::clamp(x - 2.0 * hh, p.lo, p.hi - 4.0 * hh);
    double xs[5], ys[5];
    for (int i = 0; i < 5; ++i) {
        xs[i] = a + i * hh;
        ys[i] = p.value(xs[i]);
    }
    double d1, d2;
    poly5_derivs(xs, ys, x, d1, d2);
    return d2;
}

std::vector<double> WarpedMetricProfile::knots() const {
    std::vector<double> out = f.knots();
    if (g) {
        out.insert(out.end(), g->knots().begin(), g->knots().end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(),
                          [](double a, double b) {
                              return std::abs(a - b) < kKnotSnap;
                          }),
              out.end());
    return out;
}

CurvatureOperatorDiag adjugate_diag(const CurvatureOperatorDiag& k) {
    return {k.mu * k.nu, k.nu * k.lambda, k.lambda * k.mu};
}

namespace {

CurvatureOperatorDiag curvature_impl(const WarpedMetricProfile& p, double x,
                                     Side side, bool force_fd) {
    double h = p.fd_step;
    double f = p.f.value(x, side);
    double f1 = p.f.deriv1(x, side, h, force_fd);
    double f2 = p.f.deriv2(x, side, h, force_fd);
    if (p.kind == ProfileKind::Cusp) {
        double shear = f2 * f - f1 * f1;
        return {-f1 * f1, shear, shear};
    }
    double g = 1.0, g1 = 0.0, g2 = 0.0;
    if (p.g) {
        g = p.g->value(x, side);
        g1 = p.g->deriv1(x, side, h, force_fd);
        g2 = p.g->deriv2(x, side, h, force_fd);
    }
    return {-g2 / g, -g1 * f1 / (f * g), -f2 / f};
}

}  // namespace

CurvatureOperatorDiag curvature_at(const WarpedMetricProfile& p, double x,
                                   bool force_fd) {
    if (!(x > p.lo() && x < p.hi())) {
        throw std::out_of_range("curvature_at outside the open domain");
    }
    for (double k : p.knots()) {
        if (std::abs(x - k) <= kKnotSnap) {
            std::ostringstream msg;
            msg << "x = " << x
                << " is a knot point; use curvature_one_sided";
            throw KnotPoint(msg.str());
        }
    }
    return curvature_impl(p, x, Side::Above, force_fd);
}

CurvatureOperatorDiag curvature_one_sided(const WarpedMetricProfile& p,
                                          double x, Side side,
                                          bool force_fd) {
    return curvature_impl(p, x, side, force_fd);
}

// ---------------------------------------------------------------------------
// Reference profiles

namespace {

ProfilePiece piece(double lo, double hi, std::function<double(double)> v,
                   std::function<double(double)> d1,
                   std::function<double(double)> d2) {
    return ProfilePiece{lo, hi, std::move(v), std::move(d1), std::move(d2)};
}

ScalarProfile constant_profile(double lo, double hi, double c) {
    return ScalarProfile({piece(
        lo, hi, [c](double) { return c; }, [](double) { return 0.0; },
        [](double) { return 0.0; })});
}

}  // namespace

WarpedMetricProfile fermi_hyperbolic(double alpha, double r_max) {
    double scale = alpha / (2.0 * kPi);
    ScalarProfile f({piece(
        1e-3, r_max, [scale](double r) { return scale * std::sinh(r); },
        [scale](double r) { return scale * std::cosh(r); },
        [scale](double r) { return scale * std::sinh(r); })});
    ScalarProfile g({piece(
        1e-3, r_max, [](double r) { return std::cosh(r); },
        [](double r) { return std::sinh(r); },
        [](double r) { return std::cosh(r); })});
    return WarpedMetricProfile{ProfileKind::Cylindrical, std::move(f),
                               std::move(g), 1e-4};
}

WarpedMetricProfile fermi_euclidean(double alpha, double r_max) {
    double scale = alpha / (2.0 * kPi);
    ScalarProfile f({piece(
        1e-3, r_max, [scale](double r) { return scale * r; },
        [scale](double) { return scale; }, [](double) { return 0.0; })});
    return WarpedMetricProfile{ProfileKind::Cylindrical, std::move(f),
                               constant_profile(1e-3, r_max, 1.0), 1e-4};
}

WarpedMetricProfile cusp_reference(double z0, double z_far) {
    ScalarProfile f({piece(
        z0, z_far, [](double z) { return z; }, [](double) { return 1.0; },
        [](double) { return 0.0; })});
    return WarpedMetricProfile{ProfileKind::Cusp, std::move(f), std::nullopt,
                               1e-4};
}

// ---------------------------------------------------------------------------
// Cone smoothing

namespace {

struct SmoothingGeometry {
    double r_a = 0.0;     // end of the sine piece
    double v0 = 0.0, m0 = 0.0;  // value / slope at r_a
    double v1 = 0.0, m1 = 0.0;  // value / slope at eps (Euclidean side)
    bool feasible = false;
};

SmoothingGeometry smoothing_geometry(double alpha, double eps) {
    SmoothingGeometry geo;
    double cap = std::acos(alpha / (2.0 * kPi)) / 2.0;
    geo.r_a = std::min({eps / 4.0, 0.5, cap});
    geo.v0 = std::sin(geo.r_a);
    geo.m0 = std::cos(geo.r_a);
    geo.v1 = eps * (alpha + 2.0 * kPi) / (4.0 * kPi);
    geo.m1 = alpha / (2.0 * kPi);
    double delta = eps - geo.r_a;
    if (delta <= 0.0) return geo;
    double secant = (geo.v1 - geo.v0) / delta;
    // Cubic Hermite H on [r_a, eps] is concave iff H'' <= 0 at both ends:
    //   H''(r_a) <= 0  <=>  3 S <= 2 m0 + m1
    //   H''(eps) <= 0  <=>  3 S >= m0 + 2 m1
    geo.feasible = (3.0 * secant <= 2.0 * geo.m0 + geo.m1) &&
                   (3.0 * secant >= geo.m0 + 2.0 * geo.m1);
    return geo;
}

double minimal_feasible_eps(double alpha, double eps) {
    // geometric scan for any feasible value, then bisect the boundary
    double lo_infeasible = 0.0, feasible_eps = 0.0;
    for (int k = -400; k <= 200; ++k) {
        double candidate = eps * std::pow(2.0, k / 8.0);
        if (smoothing_geometry(alpha, candidate).feasible) {
            feasible_eps = candidate;
            break;
        }
        lo_infeasible = candidate;
    }
    if (feasible_eps == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    double lo = lo_infeasible, hi = feasible_eps;
    if (lo == 0.0) return hi;
    for (int i = 0; i < 100; ++i) {
        double mid = 0.5 * (lo + hi);
        if (smoothing_geometry(alpha, mid).feasible) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

}  // namespace

WarpedMetricProfile build_cone_smoothing(double alpha, double eps) {
    if (!(alpha > 0.0) || !(alpha < 2.0 * kPi)) {
        throw AngleOutOfRange("cone angle must lie in (0, 2 pi)");
    }
    if (!(eps > 0.0)) {
        throw AngleOutOfRange("smoothing radius eps must be positive");
    }
    SmoothingGeometry geo = smoothing_geometry(alpha, eps);
    if (!geo.feasible) {
        std::ostringstream msg;
        double min_eps = minimal_feasible_eps(alpha, eps);
        msg << "no concave C^1 cubic bridge for alpha = " << alpha
            << ", eps = " << eps << "; minimal feasible eps ~= " << min_eps;
        throw InfeasibleSmoothing(msg.str(), min_eps);
    }

    double r_a = geo.r_a;
    double delta = eps - r_a;
    double v0 = geo.v0, m0 = geo.m0, v1 = geo.v1, m1 = geo.m1;
    auto hermite = [=](double x) {
        double tau = (x - r_a) / delta;
        double t2 = tau * tau, t3 = t2 * tau;
        return v0 * (2 * t3 - 3 * t2 + 1) + delta * m0 * (t3 - 2 * t2 + tau) +
               v1 * (-2 * t3 + 3 * t2) + delta * m1 * (t3 - t2);
    };
    auto hermite_d1 = [=](double x) {
        double tau = (x - r_a) / delta;
        double t2 = tau * tau;
        return (v0 * (6 * t2 - 6 * tau) + delta * m0 * (3 * t2 - 4 * tau + 1) +
                v1 * (-6 * t2 + 6 * tau) + delta * m1 * (3 * t2 - 2 * tau)) /
               delta;
    };
    auto hermite_d2 = [=](double x) {
        double tau = (x - r_a) / delta;
        return (v0 * (12 * tau - 6) + delta * m0 * (6 * tau - 4) +
                v1 * (-12 * tau + 6) + delta * m1 * (6 * tau - 2)) /
               (delta * delta);
    };
    double scale = alpha / (2.0 * kPi);
    double shift = (2.0 * kPi - alpha) * eps / (2.0 * alpha);
    double r_end = std::max(2.0 * eps, eps + 1.0);

    std::vector<ProfilePiece> pieces;
    pieces.push_back(piece(
        0.0, r_a, [](double r) { return std::sin(r); },
        [](double r) { return std::cos(r); },
        [](double r) { return -std::sin(r); }));
    pieces.push_back(piece(r_a, eps, hermite, hermite_d1, hermite_d2));
    pieces.push_back(piece(
        eps, r_end, [=](double r) { return (r + shift) * scale; },
        [=](double) { return scale; }, [](double) { return 0.0; }));
    return WarpedMetricProfile{ProfileKind::Cylindrical,
                               ScalarProfile(std::move(pieces)),
                               constant_profile(0.0, r_end, 1.0), 1e-4};
}

// ---------------------------------------------------------------------------
// Cusp flattening

WarpedMetricProfile build_cusp_flattening(double z0, double z_far) {
    if (!(z0 > 0.0)) {
        throw AngleOutOfRange("z0 must be positive");
    }
    if (!(z_far >= 10.0 * z0)) {
        throw AngleOutOfRange("z_far must be at least 10 z0");
    }
    // f'/f = g with g = 1/z on [z0, 2 z0], smootherstep taper on
    // [2 z0, 4 z0], zero beyond; f(z0) = z0 so f(z) = z near z0 and
    // f''f - f'^2 = f^2 g' <= 0 everywhere.
    auto smooth = [](double t) {
        return ((6 * t - 15) * t + 10) * t * t * t;
    };
    auto smooth_d = [](double t) {
        return ((30 * t - 60) * t + 30) * t * t;
    };
    auto smooth_int = [](double t) {  // int_0^t smootherstep
        return t * t * t * t * (t * t - 3 * t + 2.5);
    };
    double flat_value = 2.0 * z0 * std::exp(1.0 - smooth_int(1.0));

    auto mid_f = [=](double z) {
        double tau = (z - 2.0 * z0) / (2.0 * z0);
        return 2.0 * z0 * std::exp(tau - smooth_int(tau));
    };
    auto mid_g = [=](double z) {
        double tau = (z - 2.0 * z0) / (2.0 * z0);
        return (1.0 - smooth(tau)) / (2.0 * z0);
    };
    auto mid_d1 = [=](double z) { return mid_g(z) * mid_f(z); };
    auto mid_d2 = [=](double z) {
        double tau = (z - 2.0 * z0) / (2.0 * z0);
        double g = mid_g(z);
        double gp = -smooth_d(tau) / (4.0 * z0 * z0);
        return (gp + g * g) * mid_f(z);
    };

    std::vector<ProfilePiece> pieces;
    pieces.push_back(piece(
        z0, 2.0 * z0, [](double z) { return z; }, [](double) { return 1.0; },
        [](double) { return 0.0; }));
    pieces.push_back(piece(2.0 * z0, 4.0 * z0, mid_f, mid_d1, mid_d2));
    pieces.push_back(piece(
        4.0 * z0, z_far, [flat_value](double) { return flat_value; },
        [](double) { return 0.0; }, [](double) { return 0.0; }));
    return WarpedMetricProfile{ProfileKind::Cusp,
                               ScalarProfile(std::move(pieces)), std::nullopt,
                               1e-4};
}

// ---------------------------------------------------------------------------
// Verification

ProfileVerification verify_profile(const WarpedMetricProfile& p,
                                   SignRequirement sign, int grid_n,
                                   double tol) {
    if (grid_n < 100) {
        throw AngleOutOfRange("verification grid must have >= 100 points");
    }
    ProfileVerification out;
    double inf = std::numeric_limits<double>::infinity();
    out.min_entries = {inf, inf, inf};
    out.max_entries = {-inf, -inf, -inf};

    auto knots = p.knots();
    auto near_knot = [&](double x) {
        for (double k : knots) {
            if (std::abs(x - k) < 1e-9) return true;
        }
        return false;
    };
    auto absorb = [&](const CurvatureOperatorDiag& k) {
        out.min_entries.lambda = std::min(out.min_entries.lambda, k.lambda);
        out.min_entries.mu = std::min(out.min_entries.mu, k.mu);
        out.min_entries.nu = std::min(out.min_entries.nu, k.nu);
        out.max_entries.lambda = std::max(out.max_entries.lambda, k.lambda);
        out.max_entries.mu = std::max(out.max_entries.mu, k.mu);
        out.max_entries.nu = std::max(out.max_entries.nu, k.nu);
        ++out.points_checked;
    };

    double lo = p.lo(), hi = p.hi();
    for (int i = 1; i <= grid_n; ++i) {
        double x = lo + (hi - lo) * i / (grid_n + 1.0);
        if (near_knot(x)) continue;
        absorb(curvature_at(p, x));
    }
    for (double k : knots) {
        absorb(curvature_one_sided(p, k, Side::Below));
        absorb(curvature_one_sided(p, k, Side::Above));
    }

    double worst = 0.0;
    auto violation = [&](double entry) {
        if (sign == SignRequirement::NonNegative) {
            return std::max(0.0, -entry);
        }
        return std::max(0.0, entry);
    };
    for (double e : {out.min_entries.lambda, out.min_entries.mu,
                     out.min_entries.nu, out.max_entries.lambda,
                     out.max_entries.mu, out.max_entries.nu}) {
        worst = std::max(worst, violation(e));
    }
    out.worst_violation = worst;
    out.pass = worst <= tol;
    return out;
}

}  // namespace cone_moduli::metriclab
