#pragma once

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cone_moduli/triangulation.hpp"

namespace cone_moduli::continuation {

using Complex = std::complex<double>;
using triangulation::GluingSystem;
using triangulation::IdealTriangulation;
using triangulation::ShapeAssignment;

struct SolveOptions {
    double tol = 1e-12;       // max-norm residual target
    int max_iters = 200;
};

/// Newton least-squares solve of the complete structure (all edge equations
/// = 2 pi i, all meridian log-holonomies = 0).  Default seed: all shapes at
/// exp(i pi / 3).  Throws NoConvergence / NonGeometric.
ShapeAssignment solve_complete(const IdealTriangulation& tri,
                               const std::optional<ShapeAssignment>& seed = {},
                               const SolveOptions& opts = {});
ShapeAssignment solve_complete(const GluingSystem& sys,
                               const std::optional<ShapeAssignment>& seed = {},
                               const SolveOptions& opts = {});

/// Per-component cone angles from the open cube (0, 2 pi / 3)^m, where
/// every hyperbolic link admits the cone structures.  Angles in
/// [2 pi / 3, pi) require extended_mode, the caller's explicit
/// acknowledgment of the extra hypotheses (no embedded sphere meeting the
/// link in three points) that cannot be checked algorithmically here.
struct ConeTarget {
    std::vector<double> theta;
    std::vector<int> signs;      // epsilon_j = +-1, default all +1
    bool extended_mode = false;

    static ConeTarget uniform(int m, double angle, bool extended = false);
    void validate(int m) const;  // throws AngleOutOfRange
};

/// Meridian trace vector: epsilon_j * 2 cosh(u_j / 2), which equals
/// epsilon_j * 2 cos(theta_j / 2) at a cone structure and epsilon_j * 2 at
/// the complete structure.
std::vector<Complex> trace_map(const GluingSystem& sys,
                               const ShapeAssignment& s,
                               std::span<const int> signs = {});

enum class PathStatus { Completed, Degenerated, StepLimit };

struct PathSample {
    double t = 0.0;
    ShapeAssignment shapes;
    std::vector<Complex> traces;
    double volume = 0.0;
    double degeneracy_margin = 0.0;  // min_j Im z_j
};

/// A tetrahedron crossing the flat locus is legal but never silent: the
/// solver adjusts the log branch and records the event.
struct OrientationEvent {
    int tet = 0;
    double t = 0.0;
    int new_sign = 0;  // sign of Im z after the crossing
};

struct DegenerationDiagnosis {
    double t_star = 0.0;                 // last accepted parameter
    std::vector<double> tet_margins;     // Im z_j at the last good sample
    std::vector<double> target_angles;   // theta_j at the failing target
    std::vector<bool> flat_cross_section;  // per cusp: (theta,theta,theta)
                                           // Euclidean Gauss-Bonnet match
    std::vector<double> gauss_bonnet_gap;  // |3(2pi - theta) - 4pi| per cusp
    std::string message;
};

struct ContinuationPath {
    PathStatus status = PathStatus::Completed;
    std::vector<PathSample> samples;
    std::vector<OrientationEvent> orientation_events;
    std::optional<DegenerationDiagnosis> diagnosis;

    const PathSample& final_sample() const { return samples.back(); }
};

struct ContinuationOptions {
    double max_dt = 0.05;           // largest step in the ray parameter
    double dt_floor = 1e-8;         // halving stops here
    double corrector_tol = 1e-11;   // max-norm residual per accepted sample
    int max_corrector_iters = 30;
    double max_step = 0.5;          // trust region on shape moves (max-norm)
    double degeneracy_floor = 1e-6;  // |Im z| below: orientation uncertifiable
    double volume_floor = 1e-6;      // signed volume below: collapsed
    int max_steps = 100000;
};

/// Lift the straight ray in trace space from f(start) to the target traces,
/// correcting in log-holonomy space (u_j = i theta_j(t) exactly).
ContinuationPath continue_to_angles(const IdealTriangulation& tri,
                                    const ShapeAssignment& start,
                                    const ConeTarget& target,
                                    const ContinuationOptions& opts = {});
ContinuationPath continue_to_angles(const GluingSystem& sys,
                                    const ShapeAssignment& start,
                                    const ConeTarget& target,
                                    const ContinuationOptions& opts = {});

struct SweepRow {
    int step = 0;
    std::vector<double> angles;
    bool ok = false;                 // row produced a final sample
    PathStatus status = PathStatus::Completed;
    double volume = 0.0;
    double min_im_z = 0.0;
    std::vector<Complex> traces;
    double t_star = 1.0;             // Degenerated rows: last good parameter
    std::string error;
};

struct SweepOptions {
    ContinuationOptions continuation;
    std::vector<int> signs;    // default all +1
    bool extended_mode = false;
    bool warm_start = true;    // chain the previous row's solution
    int jobs = 1;              // parallel rows, only without warm start
};

/// Cone-angle sweep along the ray direction `ray` (angles_j = s * ray_j for
/// each grid scalar s).  Errors are carried per row; the sweep continues.
std::vector<SweepRow> sweep(const IdealTriangulation& tri,
                            std::span<const double> grid,
                            std::span<const double> ray,
                            const SweepOptions& opts = {});

/// min_j Im z_j * |z_j| / (1 + |z_j|^2): a tetrahedron-flatness margin used
/// as a degeneration proxy (goes to 0 when some tetrahedron flattens; it is
/// not the injectivity radius).
double injectivity_proxy(const ShapeAssignment& s);

}  // namespace cone_moduli::continuation
