#pragma once

#include <complex>
#include <span>
#include <vector>

#include "cone_moduli/errors.hpp"

namespace cone_moduli::mobius {

using Complex = std::complex<double>;

/// Point of the sphere at infinity, C union {infinity}.
struct BoundaryPoint {
    Complex z{0.0, 0.0};
    bool infinite = false;

    static BoundaryPoint at_infinity() { return {Complex(0, 0), true}; }
    static BoundaryPoint finite(Complex w) { return {w, false}; }
};

/// Chordal distance on C union {infinity} (diameter 2).
double chordal_distance(const BoundaryPoint& p, const BoundaryPoint& q);

/// SL2(C) representative of an orientation-preserving isometry of H^3.
///
/// Normalization: det = 1 and Re(trace) >= 0 (ties broken toward
/// Im(trace) >= 0) so outputs are deterministic.
struct MobiusTransform {
    Complex a{1, 0}, b{0, 0}, c{0, 0}, d{1, 0};

    static MobiusTransform identity();
    /// Builds and normalizes; throws FormatError when |det| is ~ 0.
    static MobiusTransform from_entries(Complex a, Complex b, Complex c,
                                        Complex d);

    Complex det() const { return a * d - b * c; }
    Complex trace() const { return a + d; }
    MobiusTransform inverse() const;

    /// Action on the boundary sphere.
    BoundaryPoint apply(const BoundaryPoint& p) const;
};

MobiusTransform compose(const MobiusTransform& A, const MobiusTransform& B);

enum class IsometryType { Identity, Elliptic, Parabolic, Loxodromic };

/// Trichotomy of a normalized SL2(C) element.
///
/// Elliptic: trace = +-2 cos(theta/2), rotation_angle = theta in (0, pi]
/// (the axis-orientation-free representative).
/// Loxodromic: trace = +-2 cosh((l + i tau)/2) with l = translation_length
/// and tau = twist in (-pi, pi].
struct IsometryClass {
    IsometryType type = IsometryType::Identity;
    double rotation_angle = 0.0;
    double translation_length = 0.0;
    double twist = 0.0;
};

/// Boundary cases within tol of |trace| = 2 resolve to Parabolic.
IsometryClass classify(const MobiusTransform& A, double tol = 1e-9);

/// Fixed points on the boundary sphere: roots of c z^2 + (d-a) z - b = 0,
/// with infinity handled when c = 0.  Parabolic elements return one point,
/// everything else two.  Throws IdentityInput on +-I.
std::vector<BoundaryPoint> fixed_points_boundary(const MobiusTransform& A,
                                                 double tol = 1e-9);

/// Result of the finite all-elliptic probe: a `true` answer says every
/// reduced word of length <= word_length is elliptic or the identity, which
/// is evidence (not proof) that the group fixes a point of H^3.
struct EllipticProbeResult {
    bool all_elliptic = true;
    /// Violating word as signed 1-based generator indices (negative =
    /// inverse); empty when all_elliptic.
    std::vector<int> witness;
    IsometryClass witness_class;
};

EllipticProbeResult all_elliptic_probe(
    std::span<const MobiusTransform> generators, int word_length,
    double tol = 1e-9);

}  // namespace cone_moduli::mobius
