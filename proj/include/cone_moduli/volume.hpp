#pragma once

#include <complex>
#include <span>
#include <vector>

#include "cone_moduli/errors.hpp"
#include "cone_moduli/triangulation.hpp"

namespace cone_moduli::volume {

using Complex = std::complex<double>;

/// Lobachevsky function L(theta) = -int_0^theta log|2 sin u| du, odd and
/// pi-periodic, evaluated by the zeta series (absolute error <= 1e-12).
double lobachevsky(double theta);

/// Volume of the regular ideal tetrahedron, nu = 3 L(pi/3).
double nu();

/// nu by tanh-sinh quadrature of -3 int_0^{pi/3} log|2 sin u| du.  Kept as
/// an independent route; it never feeds the production volume path.
double nu_quadrature();

/// Signed volume of the ideal tetrahedron with shape z:
/// L(arg z) + L(arg 1/(1-z)) + L(arg (z-1)/z).  Positive iff Im z > 0.
double tetra_volume(Complex z);

struct VolumeReport {
    std::vector<double> per_tet;
    double total = 0.0;
    double bound = 0.0;  // nu * n_tet
    bool bound_satisfied = false;
    /// Indices of negatively oriented tetrahedra (they contribute
    /// negatively to `total`); nonempty means the assignment is not a
    /// positively oriented realization.
    std::vector<int> negative_tets;
};

VolumeReport volume_report(const triangulation::IdealTriangulation& tri,
                           const triangulation::ShapeAssignment& s);
VolumeReport volume_report(std::span<const Complex> shapes);

}  // namespace cone_moduli::volume
