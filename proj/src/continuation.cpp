#include "cone_moduli/continuation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "cone_moduli/volume.hpp"

namespace cone_moduli::continuation {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoThirdsPi = 2.0 * std::numbers::pi / 3.0;

Eigen::VectorXcd shapes_vec(const ShapeAssignment& s) {
    Eigen::VectorXcd v(static_cast<int>(s.z.size()));
    for (int i = 0; i < v.size(); ++i) v(i) = s.z[i];
    return v;
}

bool shapes_valid(const Eigen::VectorXcd& z) {
    for (int i = 0; i < z.size(); ++i) {
        if (std::abs(z(i)) < 1e-12 || std::abs(z(i) - 1.0) < 1e-12 ||
            !std::isfinite(z(i).real()) || !std::isfinite(z(i).imag())) {
            return false;
        }
    }
    return true;
}

// Largest multiple of dz that moves every shape by less than a fraction of
// its distance to the parameter singularities {0, 1}.  This bounds the
// change of each of the three logs by ~0.45 < pi, which is what makes the
// branch-continuity rounding below exact.
double safe_move_scale(const Eigen::VectorXcd& z, const Eigen::VectorXcd& dz) {
    double scale = 1.0;
    for (int i = 0; i < z.size(); ++i) {
        double room =
            0.4 * std::min(std::abs(z(i)), std::abs(z(i) - 1.0));
        double move = std::abs(dz(i));
        if (move > room && move > 0.0) {
            scale = std::min(scale, room / move);
        }
    }
    return scale;
}

// Keep the three logs of each tetrahedron continuous across a shape move by
// adjusting branch integers: round((Im L_old_total - Im L_new_principal) /
// (2 pi)).  This is exact as long as the per-move change of each log stays
// below pi, which safe_move_scale guarantees.
void assign_with_branch_tracking(ShapeAssignment& s,
                                 const Eigen::VectorXcd& z_new) {
    const double two_pi = 2.0 * kPi;
    for (std::size_t t = 0; t < s.z.size(); ++t) {
        auto old_logs = triangulation::log_params(s.z[t], s.log_branch[t]);
        auto new_principal =
            triangulation::log_params(z_new(static_cast<int>(t)), {0, 0, 0});
        for (int l = 0; l < 3; ++l) {
            double k = std::round(
                (old_logs[l].imag() - new_principal[l].imag()) / two_pi);
            s.log_branch[t][l] = static_cast<int>(k);
        }
        s.z[t] = z_new(static_cast<int>(t));
    }
}

struct NewtonOutcome {
    bool converged = false;
    double best_residual = std::numeric_limits<double>::infinity();
    int iterations = 0;
};

// Damped Newton least-squares corrector at fixed u-targets, branch-tracked.
NewtonOutcome newton_correct(const GluingSystem& sys, ShapeAssignment& s,
                             std::span<const Complex> u_targets, double tol,
                             int max_iters) {
    NewtonOutcome out;
    for (int iter = 0; iter < max_iters; ++iter) {
        Eigen::VectorXcd F = sys.full_residuals(s, u_targets);
        double res = F.cwiseAbs().maxCoeff();
        out.best_residual = std::min(out.best_residual, res);
        out.iterations = iter;
        if (res < tol) {
            out.converged = true;
            return out;
        }
        Eigen::MatrixXcd J = sys.full_jacobian(s);
        Eigen::VectorXcd dz = J.colPivHouseholderQr().solve(-F);
        double step_norm = dz.cwiseAbs().maxCoeff();
        if (!std::isfinite(step_norm)) return out;
        if (step_norm > 0.5) dz *= 0.5 / step_norm;  // safeguard wild steps
        Eigen::VectorXcd z0 = shapes_vec(s);
        dz *= safe_move_scale(z0, dz);  // keep branch tracking exact

        double f0 = F.norm();
        double lambda = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 40; ++bt) {
            Eigen::VectorXcd z_try = z0 + lambda * dz;
            if (shapes_valid(z_try)) {
                ShapeAssignment trial = s;
                assign_with_branch_tracking(trial, z_try);
                Eigen::VectorXcd F_try = sys.full_residuals(trial, u_targets);
                if (F_try.norm() < f0 || lambda < 1e-6) {
                    s = std::move(trial);
                    moved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if (!moved) return out;
    }
    Eigen::VectorXcd F = sys.full_residuals(s, u_targets);
    double res = F.cwiseAbs().maxCoeff();
    out.best_residual = std::min(out.best_residual, res);
    out.converged = res < tol;
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Complete structure

ShapeAssignment solve_complete(const GluingSystem& sys,
                               const std::optional<ShapeAssignment>& seed,
                               const SolveOptions& opts) {
    ShapeAssignment s =
        seed.value_or(ShapeAssignment::regular(sys.n_tet()));
    if (s.log_branch.size() != s.z.size()) {
        s.log_branch.assign(s.z.size(), {0, 0, 0});
    }
    std::vector<Complex> u0(sys.n_cusps(), Complex(0, 0));

    double best = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < opts.max_iters; ++iter) {
        Eigen::VectorXcd F = sys.full_residuals(s, u0);
        double res = F.cwiseAbs().maxCoeff();
        best = std::min(best, res);
        if (res < opts.tol) {
            if (s.min_im() <= 0.0) {
                throw NonGeometric(
                    "solver converged to a non-positively-oriented solution");
            }
            return s;
        }
        Eigen::MatrixXcd J = sys.full_jacobian(s);
        Eigen::VectorXcd dz = J.colPivHouseholderQr().solve(-F);
        if (!dz.allFinite()) {
            throw NoConvergence("Newton step is not finite", best);
        }
        double f0 = F.norm();
        Eigen::VectorXcd z0 = shapes_vec(s);
        double lambda = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 60; ++bt) {
            Eigen::VectorXcd z_try = z0 + lambda * dz;
            if (shapes_valid(z_try)) {
                ShapeAssignment trial = s;
                for (std::size_t t = 0; t < trial.z.size(); ++t) {
                    trial.z[t] = z_try(static_cast<int>(t));
                    trial.log_branch[t] = {0, 0, 0};
                }
                Eigen::VectorXcd F_try = sys.full_residuals(trial, u0);
                if (F_try.norm() < f0) {
                    s = std::move(trial);
                    moved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if (!moved) {
            throw NoConvergence("Newton stalled (no descent direction)", best);
        }
    }
    throw NoConvergence("Newton did not reach tolerance", best);
}

ShapeAssignment solve_complete(const IdealTriangulation& tri,
                               const std::optional<ShapeAssignment>& seed,
                               const SolveOptions& opts) {
    return solve_complete(GluingSystem(tri), seed, opts);
}

// ---------------------------------------------------------------------------
// Cone targets and the trace map

ConeTarget ConeTarget::uniform(int m, double angle, bool extended) {
    ConeTarget t;
    t.theta.assign(m, angle);
    t.signs.assign(m, 1);
    t.extended_mode = extended;
    return t;
}

void ConeTarget::validate(int m) const {
    if (static_cast<int>(theta.size()) != m) {
        throw AngleOutOfRange("cone target has wrong number of angles");
    }
    if (!signs.empty() && static_cast<int>(signs.size()) != m) {
        throw AngleOutOfRange("sign vector has wrong length");
    }
    for (int sgn : signs) {
        if (sgn != 1 && sgn != -1) {
            throw AngleOutOfRange("signs must be +-1");
        }
    }
    // The open cube excludes the wall, but targeting it (exactly or within
    // rounding of the printed value) is how degeneration runs are launched,
    // so a hair of slack is allowed; such targets end Degenerated.
    double limit = (extended_mode ? kPi : kTwoThirdsPi) + 1e-4;
    for (double a : theta) {
        if (!(a > 0.0) || !(a <= limit)) {
            std::ostringstream msg;
            msg << "cone angle " << a << " outside (0, "
                << (extended_mode ? "pi" : "2 pi / 3") << ")";
            throw AngleOutOfRange(msg.str());
        }
    }
}

std::vector<Complex> trace_map(const GluingSystem& sys,
                               const ShapeAssignment& s,
                               std::span<const int> signs) {
    std::vector<Complex> out(sys.n_cusps());
    for (int c = 0; c < sys.n_cusps(); ++c) {
        double eps = signs.empty() ? 1.0 : static_cast<double>(signs[c]);
        Complex u = sys.meridian_log_holonomy(s, c);
        out[c] = eps * 2.0 * std::cosh(u / 2.0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ray lifting

namespace {

// Straight ray in trace space between elliptic/parabolic targets, expressed
// through x_j(t) = cos(theta_j(t) / 2) which interpolates linearly.
struct TraceRay {
    std::vector<double> x0, x1;

    double x(int j, double t) const { return (1.0 - t) * x0[j] + t * x1[j]; }
    double theta(int j, double t) const {
        return 2.0 * std::acos(std::clamp(x(j, t), -1.0, 1.0));
    }
    Complex u_target(int j, double t) const {
        return Complex(0.0, theta(j, t));
    }
    // d theta / dt; unbounded where x = 1 (the complete structure).
    double dtheta(int j, double t) const {
        double xx = x(j, t);
        double s = 1.0 - xx * xx;
        if (s < 1e-12) return std::numeric_limits<double>::infinity();
        return -2.0 * (x1[j] - x0[j]) / std::sqrt(s);
    }
};

std::vector<Complex> ray_targets(const TraceRay& ray, int m, double t) {
    std::vector<Complex> u(m);
    for (int j = 0; j < m; ++j) u[j] = ray.u_target(j, t);
    return u;
}

PathSample make_sample(const GluingSystem& sys, const ShapeAssignment& s,
                       double t, std::span<const int> signs) {
    PathSample sample;
    sample.t = t;
    sample.shapes = s;
    sample.traces = trace_map(sys, s, signs);
    auto report = volume::volume_report(std::span<const Complex>(s.z));
    sample.volume = report.total;
    sample.degeneracy_margin = s.min_im();
    if (!report.bound_satisfied) {
        throw std::logic_error(
            "volume bound nu * n_tet violated by an accepted sample");
    }
    return sample;
}

struct DegeneracyCheck {
    bool degenerate = false;
    bool flat_tet = false;
    bool collapsed_volume = false;
};

DegeneracyCheck check_degeneracy(const ShapeAssignment& s,
                                 const ContinuationOptions& opts) {
    DegeneracyCheck out;
    double min_abs_im = std::numeric_limits<double>::infinity();
    for (const Complex& z : s.z) {
        min_abs_im = std::min(min_abs_im, std::abs(z.imag()));
    }
    out.flat_tet = min_abs_im < opts.degeneracy_floor;
    double vol = 0.0;
    for (const Complex& z : s.z) vol += volume::tetra_volume(z);
    out.collapsed_volume = vol < opts.volume_floor;
    out.degenerate = out.flat_tet || out.collapsed_volume;
    return out;
}

DegenerationDiagnosis make_diagnosis(const TraceRay& ray, int m,
                                     double t_star, double t_fail,
                                     const PathSample& last_good) {
    DegenerationDiagnosis d;
    d.t_star = t_star;
    for (const Complex& z : last_good.shapes.z) {
        d.tet_margins.push_back(z.imag());
    }
    std::ostringstream msg;
    msg << "degenerated at t = " << t_fail << " (last good t = " << t_star
        << "); target angles:";
    for (int j = 0; j < m; ++j) {
        double th = ray.theta(j, t_fail);
        d.target_angles.push_back(th);
        msg << " " << th;
        // Cross-section diagnosis: a sphere meeting the singular locus in
        // three points of angle theta is Euclidean iff 3(2pi - theta) = 4pi.
        double gap = std::abs(3.0 * (2.0 * kPi - th) - 4.0 * kPi);
        d.gauss_bonnet_gap.push_back(gap);
        bool recognized = false;
        if (th > 0.0 && th <= kPi) {
            double angles[3] = {th, th, th};
            recognized = triangulation::euclidean_cone_surface_check(
                0, angles, 1e-2);
        }
        d.flat_cross_section.push_back(recognized);
        if (recognized) {
            msg << " [flat (theta,theta,theta) cross-section]";
        }
    }
    d.message = msg.str();
    return d;
}

}  // namespace

ContinuationPath continue_to_angles(const GluingSystem& sys,
                                    const ShapeAssignment& start,
                                    const ConeTarget& target,
                                    const ContinuationOptions& opts) {
    const int m = sys.n_cusps();
    target.validate(m);
    std::vector<int> signs =
        target.signs.empty() ? std::vector<int>(m, 1) : target.signs;

    // The start must solve the equations for some angle vector (the
    // complete structure has all theta_j = 0).
    TraceRay ray;
    ray.x0.resize(m);
    ray.x1.resize(m);
    ShapeAssignment s = start;
    if (s.log_branch.size() != s.z.size()) {
        s.log_branch.assign(s.z.size(), {0, 0, 0});
    }
    {
        Eigen::VectorXcd edge_res = sys.edge_residuals(s);
        if (edge_res.cwiseAbs().maxCoeff() > 1e-8) {
            throw std::invalid_argument(
                "continuation start does not satisfy the edge equations");
        }
        for (int j = 0; j < m; ++j) {
            Complex u = sys.meridian_log_holonomy(s, j);
            if (std::abs(u.real()) > 1e-8) {
                throw std::invalid_argument(
                    "continuation start has non-elliptic meridian holonomy");
            }
            ray.x0[j] = std::cos(u.imag() / 2.0);
            ray.x1[j] = std::cos(target.theta[j] / 2.0);
        }
    }

    ContinuationPath path;
    path.samples.push_back(make_sample(sys, s, 0.0, signs));

    double t = 0.0;
    double dt = opts.max_dt;
    int steps = 0;
    while (t < 1.0) {
        if (++steps > opts.max_steps) {
            path.status = PathStatus::StepLimit;
            return path;
        }
        double t_next = std::min(1.0, t + dt);
        auto u_tgt = ray_targets(ray, m, t_next);

        // tangent predictor (skipped where the ray speed is unbounded)
        ShapeAssignment trial = s;
        {
            bool finite = true;
            Eigen::VectorXcd rhs(sys.n_edges() + m);
            rhs.setZero();
            for (int j = 0; j < m; ++j) {
                double dth = ray.dtheta(j, t);
                if (!std::isfinite(dth) || std::abs(dth) > 1e3) {
                    finite = false;
                    break;
                }
                rhs(sys.n_edges() + j) = Complex(0.0, dth);
            }
            if (finite) {
                Eigen::MatrixXcd J = sys.full_jacobian(s);
                Eigen::VectorXcd zdot = J.colPivHouseholderQr().solve(rhs);
                Eigen::VectorXcd z0 = shapes_vec(s);
                Eigen::VectorXcd dz = (t_next - t) * zdot;
                dz *= safe_move_scale(z0, dz);
                Eigen::VectorXcd z_pred = z0 + dz;
                if (shapes_valid(z_pred) &&
                    dz.cwiseAbs().maxCoeff() < opts.max_step) {
                    assign_with_branch_tracking(trial, z_pred);
                }
            }
        }

        NewtonOutcome outcome = newton_correct(
            sys, trial, u_tgt, opts.corrector_tol, opts.max_corrector_iters);
        double move = 0.0;
        if (outcome.converged) {
            move = (shapes_vec(trial) - shapes_vec(s)).cwiseAbs().maxCoeff();
        }

        if (!outcome.converged || move > opts.max_step) {
            dt *= 0.5;
            if (dt >= opts.dt_floor) continue;
            throw NoConvergence(
                "corrector failed at the minimal step size",
                outcome.best_residual);
        }

        DegeneracyCheck check = check_degeneracy(trial, opts);
        if (check.degenerate) {
            // Bisect toward the wall so t_star is sharp.
            double lo = t, hi = t_next;
            ShapeAssignment s_good = s;
            for (int iter = 0; iter < 60 && hi - lo > opts.dt_floor; ++iter) {
                double mid = 0.5 * (lo + hi);
                ShapeAssignment s_mid = s_good;
                auto u_mid = ray_targets(ray, m, mid);
                NewtonOutcome mid_out =
                    newton_correct(sys, s_mid, u_mid, opts.corrector_tol,
                                   opts.max_corrector_iters);
                if (mid_out.converged &&
                    !check_degeneracy(s_mid, opts).degenerate) {
                    lo = mid;
                    s_good = s_mid;
                } else {
                    hi = mid;
                }
            }
            if (lo > t) {
                for (std::size_t j = 0; j < s.z.size(); ++j) {
                    if (std::signbit(s.z[j].imag()) !=
                        std::signbit(s_good.z[j].imag())) {
                        path.orientation_events.push_back(OrientationEvent{
                            static_cast<int>(j), lo,
                            s_good.z[j].imag() > 0.0 ? 1 : -1});
                    }
                }
                path.samples.push_back(make_sample(sys, s_good, lo, signs));
            }
            path.status = PathStatus::Degenerated;
            path.diagnosis =
                make_diagnosis(ray, m, lo, hi, path.samples.back());
            return path;
        }

        // accept
        for (std::size_t j = 0; j < s.z.size(); ++j) {
            if (std::signbit(s.z[j].imag()) !=
                std::signbit(trial.z[j].imag())) {
                path.orientation_events.push_back(OrientationEvent{
                    static_cast<int>(j), t_next,
                    trial.z[j].imag() > 0.0 ? 1 : -1});
            }
        }
        s = std::move(trial);
        path.samples.push_back(make_sample(sys, s, t_next, signs));
        t = t_next;
        if (outcome.iterations <= 5 && move < 0.25 * opts.max_step) {
            dt = std::min(opts.max_dt, dt * 1.6);
        }
    }
    path.status = PathStatus::Completed;
    return path;
}

ContinuationPath continue_to_angles(const IdealTriangulation& tri,
                                    const ShapeAssignment& start,
                                    const ConeTarget& target,
                                    const ContinuationOptions& opts) {
    return continue_to_angles(GluingSystem(tri), start, target, opts);
}

// ---------------------------------------------------------------------------
// Sweeps

namespace {

SweepRow run_sweep_row(const GluingSystem& sys, const ShapeAssignment& start,
                       int step, double s_val, std::span<const double> ray,
                       const SweepOptions& opts,
                       ShapeAssignment* final_shapes) {
    SweepRow row;
    row.step = step;
    const int m = sys.n_cusps();
    for (int j = 0; j < m; ++j) {
        row.angles.push_back(s_val * ray[j]);
    }
    try {
        ConeTarget target;
        target.theta = row.angles;
        target.signs = opts.signs.empty() ? std::vector<int>(m, 1)
                                          : opts.signs;
        target.extended_mode = opts.extended_mode;
        ContinuationPath path =
            continue_to_angles(sys, start, target, opts.continuation);
        const PathSample& last = path.final_sample();
        row.ok = true;
        row.status = path.status;
        row.volume = last.volume;
        row.min_im_z = last.degeneracy_margin;
        row.traces = last.traces;
        if (path.diagnosis) row.t_star = path.diagnosis->t_star;
        if (final_shapes && path.status == PathStatus::Completed) {
            *final_shapes = last.shapes;
        }
    } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
    }
    return row;
}

}  // namespace

std::vector<SweepRow> sweep(const IdealTriangulation& tri,
                            std::span<const double> grid,
                            std::span<const double> ray,
                            const SweepOptions& opts) {
    std::vector<SweepRow> rows;
    if (grid.empty()) return rows;
    GluingSystem sys(tri);
    const int m = sys.n_cusps();
    std::vector<double> ray_dir(ray.begin(), ray.end());
    if (ray_dir.empty()) ray_dir.assign(m, 1.0);
    if (static_cast<int>(ray_dir.size()) != m) {
        throw AngleOutOfRange("ray direction has wrong length");
    }
    ShapeAssignment complete = solve_complete(sys);

    rows.resize(grid.size());
    if (opts.warm_start || opts.jobs <= 1) {
        ShapeAssignment current = complete;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const ShapeAssignment& start =
                opts.warm_start ? current : complete;
            ShapeAssignment finish;
            rows[k] = run_sweep_row(sys, start, static_cast<int>(k), grid[k],
                                    ray_dir, opts, &finish);
            if (opts.warm_start && rows[k].ok &&
                rows[k].status == PathStatus::Completed) {
                current = std::move(finish);
            }
        }
        return rows;
    }

    // parallel rows, each from the complete structure (identical outputs
    // regardless of worker count)
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t k = next.fetch_add(1);
            if (k >= grid.size()) return;
            rows[k] = run_sweep_row(sys, complete, static_cast<int>(k),
                                    grid[k], ray_dir, opts, nullptr);
        }
    };
    std::vector<std::thread> pool;
    int jobs = std::max(1, opts.jobs);
    pool.reserve(jobs);
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return rows;
}

double injectivity_proxy(const ShapeAssignment& s) {
    double best = std::numeric_limits<double>::infinity();
    for (const Complex& z : s.z) {
        double a = std::abs(z);
        best = std::min(best, z.imag() * a / (1.0 + a * a));
    }
    return best;
}

}  // namespace cone_moduli::continuation
