#pragma once

#include <array>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cone_moduli/errors.hpp"

namespace cone_moduli::triangulation {

using Complex = std::complex<double>;

/// One glued face: vertex v of this tetrahedron maps to perm[v] of to_tet,
/// and perm[face] = to_face.  Orientation-compatible gluings between
/// consistently right-handed tetrahedra are odd permutations under this
/// convention.
struct FaceSlot {
    int to_tet = -1;
    int to_face = -1;
    std::array<int, 4> perm{0, 1, 2, 3};
};

/// Corner of an edge class: `pair` selects the opposite-edge pair carrying
/// the shape parameter (0: edges {01},{23} -> z; 1: {02},{13} -> 1/(1-z);
/// 2: {03},{12} -> (z-1)/z).
struct EdgeCorner {
    int tet = 0;
    int pair = 0;
    friend bool operator==(const EdgeCorner&, const EdgeCorner&) = default;
    friend auto operator<=>(const EdgeCorner&, const EdgeCorner&) = default;
};

/// Peripheral curve as integer coefficients over the 3 * n_tet log-shape
/// parameters plus an integer multiple of i*pi.
struct PeripheralCurve {
    std::vector<int> coeffs;
    int pi_i_coeff = 0;
};

struct Cusp {
    PeripheralCurve meridian;
    PeripheralCurve longitude;
};

/// Combinatorial ideal triangulation of a link complement with peripheral
/// curve data.  Immutable after load; all invariants checked on
/// construction.
class IdealTriangulation {
public:
    /// `name_or_path` is a bundled census name ("figure8", "whitehead") or
    /// a path to a JSON file.  The CONE_MODULI_CENSUS_DIR environment
    /// variable redirects census names to <dir>/<name>.json.
    static IdealTriangulation load(const std::string& name_or_path);
    static IdealTriangulation from_json_text(const std::string& text);

    const std::string& name() const { return name_; }
    int n_tet() const { return n_tet_; }
    int n_cusps() const { return static_cast<int>(cusps_.size()); }
    const FaceSlot& gluing(int tet, int face) const {
        return slots_[4 * tet + face];
    }
    const std::vector<std::vector<EdgeCorner>>& edge_classes() const {
        return edge_classes_;
    }
    const std::vector<Cusp>& cusps() const { return cusps_; }

private:
    IdealTriangulation() = default;
    void validate_and_index();
    std::vector<std::vector<EdgeCorner>> walk_edge_orbits() const;
    int count_vertex_links() const;

    std::string name_;
    int n_tet_ = 0;
    std::vector<FaceSlot> slots_;
    std::vector<std::vector<EdgeCorner>> edge_classes_;
    std::vector<Cusp> cusps_;
};

/// One complex shape per tetrahedron plus explicit log-branch integers so
/// continuation can cross principal-branch cuts without hopping silently.
struct ShapeAssignment {
    std::vector<Complex> z;
    std::vector<std::array<int, 3>> log_branch;

    static ShapeAssignment regular(int n_tet);
    bool positively_oriented(double floor = 0.0) const;
    double min_im() const;
};

/// (Log z, Log 1/(1-z), Log (z-1)/z) with 2 pi i branch offsets applied.
/// Throws DegenerateShape when z is within 1e-14 of {0, 1}.
std::array<Complex, 3> log_params(Complex z, const std::array<int, 3>& branch);
std::array<Complex, 3> d_log_params(Complex z);

/// Edge and cusp equations of a triangulation in log form.  Edge equations
/// are required to equal 2 pi i exactly (not just mod 2 pi i).
class GluingSystem {
public:
    explicit GluingSystem(const IdealTriangulation& tri);
    /// Raw-row constructor for diagnostics and negative controls.
    GluingSystem(int n_tet, std::vector<std::vector<int>> edge_rows,
                 std::vector<std::vector<int>> meridian_rows,
                 std::vector<int> meridian_pi,
                 std::vector<std::vector<int>> longitude_rows,
                 std::vector<int> longitude_pi);

    int n_tet() const { return n_tet_; }
    int n_edges() const { return static_cast<int>(edge_rows_.size()); }
    int n_cusps() const { return static_cast<int>(meridian_rows_.size()); }

    /// Row-per-edge residuals: sum of corner logs minus 2 pi i.
    Eigen::VectorXcd edge_residuals(const ShapeAssignment& s) const;
    /// u_j: log-holonomy of the j-th meridian (0 at the complete structure;
    /// i*theta_j at a cone structure of angle theta_j).
    Complex meridian_log_holonomy(const ShapeAssignment& s, int cusp) const;
    Complex longitude_log_holonomy(const ShapeAssignment& s, int cusp) const;

    /// Stacked residual vector [edges - 2 pi i; u_j - u_target_j].
    Eigen::VectorXcd full_residuals(const ShapeAssignment& s,
                                    std::span<const Complex> u_targets) const;
    /// Analytic Jacobian of full_residuals with respect to the shapes.
    Eigen::MatrixXcd full_jacobian(const ShapeAssignment& s) const;
    /// Jacobian of the edge rows only (the Prop 6.4 corank block).
    Eigen::MatrixXcd edge_jacobian(const ShapeAssignment& s) const;

    const std::vector<std::vector<int>>& edge_rows() const {
        return edge_rows_;
    }

private:
    Complex row_value(const std::vector<int>& row, int pi_coeff,
                      const ShapeAssignment& s) const;
    int n_tet_ = 0;
    std::vector<std::vector<int>> edge_rows_;
    std::vector<std::vector<int>> meridian_rows_;
    std::vector<int> meridian_pi_;
    std::vector<std::vector<int>> longitude_rows_;
    std::vector<int> longitude_pi_;
};

GluingSystem assemble(const IdealTriangulation& tri);

/// Convenience wrapper matching the per-cusp operation name.
Complex meridian_log_holonomy(const IdealTriangulation& tri,
                              const ShapeAssignment& s, int cusp);

/// Rank / corank of a complex matrix by singular-value gap.
struct CorankReport {
    int corank = 0;
    double gap_ratio = 0.0;  // smallest kept / largest dropped
    Eigen::VectorXd singular_values;
};
CorankReport corank_report(const Eigen::MatrixXcd& m, double rel_tol = 1e-8);

/// Gauss-Bonnet test for compact Euclidean cone surfaces:
/// sum(2 pi - theta_i) = 2 pi (2 - 2 genus) within tol.
/// Angles must lie in (0, pi]; otherwise AngleOutOfRange.
bool euclidean_cone_surface_check(int genus, std::span<const double> angles,
                                  double tol = 1e-12);

}  // namespace cone_moduli::triangulation
