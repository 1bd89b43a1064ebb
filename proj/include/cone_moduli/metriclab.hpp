#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "cone_moduli/errors.hpp"

namespace cone_moduli::metriclab {

enum class Side { Below, Above };

/// Scalar profile function on an interval, piecewise closed-form.  Pieces
/// may carry analytic first/second derivatives; otherwise 5-point finite
/// differences on the piece are used.
struct ProfilePiece {
    double lo = 0.0;
    double hi = 0.0;
    std::function<double(double)> value;
    std::function<double(double)> d1;  // optional
    std::function<double(double)> d2;  // optional
};

class ScalarProfile {
public:
    explicit ScalarProfile(std::vector<ProfilePiece> pieces);

    double lo() const { return pieces_.front().lo; }
    double hi() const { return pieces_.back().hi; }
    /// Interior piece boundaries (declared knots).
    const std::vector<double>& knots() const { return knots_; }

    double value(double x, Side side = Side::Above) const;
    double deriv1(double x, Side side, double h, bool force_fd = false) const;
    double deriv2(double x, Side side, double h, bool force_fd = false) const;

private:
    int piece_index(double x, Side side) const;
    std::vector<ProfilePiece> pieces_;
    std::vector<double> knots_;
};

enum class ProfileKind { Cylindrical, Cusp };

/// Warped-product model metric.
///   Cylindrical: ds^2 = g(r)^2 dt^2 + dr^2 + f(r)^2 dtheta^2
///   Cusp:        ds^2 = (dx^2 + dy^2 + dz^2) / f(z)^2
struct WarpedMetricProfile {
    ProfileKind kind = ProfileKind::Cylindrical;
    ScalarProfile f;
    std::optional<ScalarProfile> g;  // Cylindrical only; absent means g == 1
    double fd_step = 1e-4;

    double lo() const { return f.lo(); }
    double hi() const { return f.hi(); }
    std::vector<double> knots() const;
};

/// Diagonalized curvature operator: the three sectional curvatures of the
/// coordinate 2-planes.
struct CurvatureOperatorDiag {
    double lambda = 0.0;
    double mu = 0.0;
    double nu = 0.0;
};

/// Adj(diag(lambda, mu, nu)) = diag(mu nu, nu lambda, lambda mu).
CurvatureOperatorDiag adjugate_diag(const CurvatureOperatorDiag& k);

/// Curvature diagonal at an interior non-knot point:
///   Cylindrical: (-g''/g, -g' f' / (f g), -f''/f)
///   Cusp:        (-f'^2, f'' f - f'^2, f'' f - f'^2)
/// Throws KnotPoint at declared knots (use curvature_one_sided there).
CurvatureOperatorDiag curvature_at(const WarpedMetricProfile& p, double x,
                                   bool force_fd = false);
CurvatureOperatorDiag curvature_one_sided(const WarpedMetricProfile& p,
                                          double x, Side side,
                                          bool force_fd = false);

// --- closed-form reference profiles -------------------------------------

/// Fermi tube around a singular geodesic in H^3:
/// f = sinh(r) alpha / (2 pi), g = cosh(r).  Curvature (-1, -1, -1).
WarpedMetricProfile fermi_hyperbolic(double alpha, double r_max = 3.0);
/// Euclidean cone tube: f = r alpha / (2 pi), g = 1.  Curvature (0, 0, 0).
WarpedMetricProfile fermi_euclidean(double alpha, double r_max = 3.0);
/// Horospherical cusp slab: f(z) = z.  Curvature (-1, -1, -1).
WarpedMetricProfile cusp_reference(double z0, double z_far);

// --- constructions -------------------------------------------------------

/// Cone-smoothing profile: f = sin r near 0, concave cubic Hermite bridge,
/// then the Euclidean cone profile (r + (2 pi - alpha) eps / (2 alpha)) *
/// alpha / (2 pi) for r > eps; g == 1.  The result has nonnegative
/// curvature diagonal.  Throws InfeasibleSmoothing (with the minimal
/// feasible eps for this interpolant) when the concavity constraints fail.
WarpedMetricProfile build_cone_smoothing(double alpha, double eps);

/// Cusp-flattening profile f with f(z) = z near z0, a flat (constant) tail
/// past 4 z0, and nonpositive curvature diagonal throughout; driven by the
/// auxiliary g(z) = f'/f equal to 1/z on [z0, 2 z0], tapered smoothly to 0
/// on [2 z0, 4 z0] and 0 beyond.
WarpedMetricProfile build_cusp_flattening(double z0, double z_far);

// --- verification ---------------------------------------------------------

enum class SignRequirement { NonNegative, NonPositive };

struct ProfileVerification {
    bool pass = false;
    CurvatureOperatorDiag min_entries;
    CurvatureOperatorDiag max_entries;
    double worst_violation = 0.0;
    int points_checked = 0;
};

/// Evaluates the curvature diagonal on grid_n interior points (one-sided on
/// both sides of every knot) and checks the requested sign with tolerance.
ProfileVerification verify_profile(const WarpedMetricProfile& p,
                                   SignRequirement sign, int grid_n,
                                   double tol = 1e-9);

}  // namespace cone_moduli::metriclab
