#include "cone_moduli/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cone_moduli/continuation.hpp"
#include "cone_moduli/metriclab.hpp"
#include "cone_moduli/triangulation.hpp"
#include "cone_moduli/volume.hpp"

namespace cone_moduli::cli {

namespace {

namespace tr = cone_moduli::triangulation;
namespace ct = cone_moduli::continuation;
namespace vol = cone_moduli::volume;
namespace ml = cone_moduli::metriclab;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitDegenerated = 3;
constexpr int kExitNumerical = 4;

std::string fmt(double v, int sig = 15) {
    if (v == 0.0) v = 0.0;  // normalize -0
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", sig, v);
    return buf;
}

std::string fmt_complex(std::complex<double> z, int sig = 15) {
    std::string out = fmt(z.real(), sig);
    out += (z.imag() < 0 ? " - " : " + ");
    out += fmt(std::abs(z.imag()), sig);
    out += " i";
    return out;
}

std::string status_name(ct::PathStatus s) {
    switch (s) {
        case ct::PathStatus::Completed: return "completed";
        case ct::PathStatus::Degenerated: return "degenerated";
        case ct::PathStatus::StepLimit: return "steplimit";
    }
    return "unknown";
}

// ---- complete -------------------------------------------------------------

struct CompleteArgs {
    std::string input;
    bool json = false;
    int random_starts = 0;
    unsigned seed = 0;
};

int cmd_complete(const CompleteArgs& a, std::ostream& out, std::ostream& err) {
    tr::IdealTriangulation tri = tr::IdealTriangulation::load(a.input);
    tr::GluingSystem sys(tri);
    ct::ShapeAssignment s;
    try {
        s = ct::solve_complete(sys);
    } catch (const NoConvergence& e) {
        err << "numerical failure: " << e.what()
            << " (best residual " << fmt(e.best_residual, 3) << ")\n";
        return kExitNumerical;
    } catch (const NonGeometric& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }

    double scatter = 0.0;
    int reached = 0;
    if (a.random_starts > 0) {
        std::mt19937 rng(a.seed);
        std::uniform_real_distribution<double> re(-0.5, 1.5), im(0.2, 2.0);
        for (int k = 0; k < a.random_starts; ++k) {
            ct::ShapeAssignment seed_shapes;
            for (int t = 0; t < tri.n_tet(); ++t) {
                seed_shapes.z.emplace_back(re(rng), im(rng));
                seed_shapes.log_branch.push_back({0, 0, 0});
            }
            try {
                ct::ShapeAssignment s2 = ct::solve_complete(sys, seed_shapes);
                double dev = 0.0;
                for (int t = 0; t < tri.n_tet(); ++t) {
                    dev = std::max(dev, std::abs(s2.z[t] - s.z[t]));
                }
                scatter = std::max(scatter, dev);
                ++reached;
            } catch (const std::exception&) {
            }
        }
    }

    std::vector<std::complex<double>> u(tri.n_cusps(), 0.0);
    auto residual =
        sys.full_residuals(s, u).cwiseAbs().maxCoeff();
    auto report = vol::volume_report(tri, s);
    auto corank = tr::corank_report(sys.edge_jacobian(s));

    if (a.json) {
        nlohmann::json j;
        j["name"] = tri.name();
        j["n_tet"] = tri.n_tet();
        j["cusps"] = tri.n_cusps();
        for (const auto& z : s.z) {
            j["shapes"].push_back({z.real(), z.imag()});
        }
        j["max_residual"] = residual;
        j["volume"] = report.total;
        j["volume_bound"] = report.bound;
        j["bound_satisfied"] = report.bound_satisfied;
        j["corank"] = corank.corank;
        j["corank_gap_ratio"] = corank.gap_ratio;
        if (a.random_starts > 0) {
            j["random_starts"] = a.random_starts;
            j["random_starts_converged"] = reached;
            j["random_start_scatter"] = scatter;
        }
        out << j.dump(1) << "\n";
        return kExitOk;
    }

    out << "manifold: " << tri.name() << "  (" << tri.n_tet()
        << " tetrahedra, " << tri.n_cusps() << " cusp"
        << (tri.n_cusps() == 1 ? "" : "s") << ")\n";
    for (std::size_t t = 0; t < s.z.size(); ++t) {
        out << "  z[" << t << "] = " << fmt_complex(s.z[t]) << "\n";
    }
    out << "max residual: " << fmt(residual, 3) << "\n";
    out << "volume: " << fmt(report.total) << "\n";
    out << "bound nu*n3: " << fmt(report.bound) << "  satisfied: "
        << (report.bound_satisfied ? "yes" : "NO") << "\n";
    out << "edge jacobian corank: " << corank.corank << " (cusps: "
        << tri.n_cusps() << "), singular-value gap ratio "
        << fmt(corank.gap_ratio, 3) << "\n";
    if (a.random_starts > 0) {
        out << "random starts: " << reached << "/" << a.random_starts
            << " converged, scatter " << fmt(scatter, 3) << "\n";
    }
    return kExitOk;
}

// ---- cone ------------------------------------------------------------------

struct ConeArgs {
    std::string input;
    std::vector<double> angles;
    std::vector<int> signs;
    bool extended = false;
    double corrector_tol = 1e-11;
    double degeneracy_floor = 1e-6;
};

int cmd_cone(const ConeArgs& a, std::ostream& out, std::ostream& err) {
    tr::IdealTriangulation tri = tr::IdealTriangulation::load(a.input);
    tr::GluingSystem sys(tri);
    if (static_cast<int>(a.angles.size()) != tri.n_cusps()) {
        err << "usage error: " << tri.name() << " has " << tri.n_cusps()
            << " cusps, got " << a.angles.size() << " angles\n";
        return kExitUsage;
    }
    ct::ConeTarget target;
    target.theta = a.angles;
    target.signs = a.signs;
    target.extended_mode = a.extended;
    target.validate(tri.n_cusps());  // AngleOutOfRange -> usage error

    ct::ShapeAssignment start = ct::solve_complete(sys);
    ct::ContinuationOptions opts;
    opts.corrector_tol = a.corrector_tol;
    opts.degeneracy_floor = a.degeneracy_floor;
    ct::ContinuationPath path = ct::continue_to_angles(sys, start, target, opts);

    const ct::PathSample& last = path.final_sample();
    out << "status: " << status_name(path.status) << "  (samples: "
        << path.samples.size() << ")\n";
    for (const auto& ev : path.orientation_events) {
        out << "warning: tetrahedron " << ev.tet
            << " crossed the flat locus at t = " << fmt(ev.t, 6)
            << " (now " << (ev.new_sign > 0 ? "positively" : "negatively")
            << " oriented)\n";
    }
    for (std::size_t t = 0; t < last.shapes.z.size(); ++t) {
        out << "  z[" << t << "] = " << fmt_complex(last.shapes.z[t]) << "\n";
    }
    for (int c = 0; c < tri.n_cusps(); ++c) {
        std::complex<double> u = sys.meridian_log_holonomy(last.shapes, c);
        out << "  u[" << c << "] = " << fmt_complex(u, 12) << "   trace = "
            << fmt_complex(last.traces[c], 12) << "\n";
    }
    out << "volume: " << fmt(last.volume) << "\n";
    out << "min Im z: " << fmt(last.degeneracy_margin, 6) << "\n";

    if (path.status == ct::PathStatus::Degenerated) {
        const auto& d = *path.diagnosis;
        err << "degenerated: t* = " << fmt(d.t_star, 10) << "\n";
        err << d.message << "\n";
        return kExitDegenerated;
    }
    if (path.status == ct::PathStatus::StepLimit) {
        err << "numerical failure: step limit reached at t = "
            << fmt(last.t, 10) << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}

// ---- sweep -----------------------------------------------------------------

struct SweepArgs {
    std::string input;
    double from = 0.0;
    double to = 0.0;
    int steps = 0;
    std::vector<double> ray;
    std::string out_path;
    bool no_warm_start = false;
    int jobs = 1;
    bool extended = false;
    double corrector_tol = 1e-11;
    double degeneracy_floor = 1e-6;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
    if (a.steps < 2) {
        err << "usage error: --steps must be >= 2\n";
        return kExitUsage;
    }
    double limit = a.extended ? std::numbers::pi
                              : 2.0 * std::numbers::pi / 3.0;
    if (!(a.from > 0.0) || !(a.from < a.to) || a.to > limit + 1e-12) {
        err << "usage error: need 0 < from < to <= "
            << (a.extended ? "pi" : "2*pi/3") << "\n";
        return kExitUsage;
    }
    tr::IdealTriangulation tri = tr::IdealTriangulation::load(a.input);

    std::vector<double> grid(a.steps);
    for (int i = 0; i < a.steps; ++i) {
        grid[i] = a.from + (a.to - a.from) * i / (a.steps - 1.0);
    }
    ct::SweepOptions opts;
    opts.extended_mode = a.extended;
    opts.warm_start = !a.no_warm_start;
    opts.jobs = a.jobs;
    opts.continuation.corrector_tol = a.corrector_tol;
    opts.continuation.degeneracy_floor = a.degeneracy_floor;
    if (opts.jobs > 1 && opts.warm_start) {
        err << "usage error: --jobs requires --no-warm-start "
               "(warm-start chaining is sequential)\n";
        return kExitUsage;
    }
    std::vector<ct::SweepRow> rows =
        ct::sweep(tri, grid, a.ray, opts);

    std::ostringstream csv;
    csv << "# cone-moduli csv v1\n";
    csv << "step";
    int m = tri.n_cusps();
    for (int j = 1; j <= m; ++j) csv << ",angle_" << j;
    csv << ",volume,min_im_z";
    for (int j = 1; j <= m; ++j) {
        csv << ",trace_re_" << j << ",trace_im_" << j;
    }
    csv << ",status\n";
    double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& row : rows) {
        csv << row.step;
        for (double ang : row.angles) csv << "," << fmt(ang, 17);
        if (row.ok) {
            csv << "," << fmt(row.volume, 17) << ","
                << fmt(row.min_im_z, 17);
            for (const auto& tr_val : row.traces) {
                csv << "," << fmt(tr_val.real(), 17) << ","
                    << fmt(tr_val.imag(), 17);
            }
            csv << "," << status_name(row.status) << "\n";
        } else {
            csv << "," << fmt(nan, 17) << "," << fmt(nan, 17);
            for (int j = 0; j < m; ++j) {
                csv << "," << fmt(nan, 17) << "," << fmt(nan, 17);
            }
            csv << ",failed\n";
        }
    }

    if (a.out_path.empty()) {
        out << csv.str();
    } else {
        std::string tmp = a.out_path + ".tmp";
        {
            std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
            if (!f) {
                err << "cannot write " << tmp << "\n";
                return kExitUsage;
            }
            f << csv.str();
        }
        std::filesystem::rename(tmp, a.out_path);
        out << "wrote " << a.out_path << " (" << rows.size() << " rows)\n";
    }
    return kExitOk;
}

// ---- verify-metric ---------------------------------------------------------

struct VerifyArgs {
    std::string kind;
    double alpha = 1.5;
    double eps = 0.4;
    double z0 = 1.0;
    double zfar = 20.0;
    int grid = 1000;
};

int cmd_verify_metric(const VerifyArgs& a, std::ostream& out,
                      std::ostream& err) {
    ml::WarpedMetricProfile profile = [&] {
        if (a.kind == "fermi-hyp") return ml::fermi_hyperbolic(a.alpha);
        if (a.kind == "fermi-euc") return ml::fermi_euclidean(a.alpha);
        if (a.kind == "cone-smoothing") {
            return ml::build_cone_smoothing(a.alpha, a.eps);
        }
        if (a.kind == "cusp-flatten") {
            return ml::build_cusp_flattening(a.z0, a.zfar);
        }
        throw AngleOutOfRange("unknown metric kind: " + a.kind);
    }();

    ml::SignRequirement sign = (a.kind == "cone-smoothing")
                                   ? ml::SignRequirement::NonNegative
                                   : ml::SignRequirement::NonPositive;
    ml::ProfileVerification v = ml::verify_profile(profile, sign, a.grid);
    out << "kind: " << a.kind << "\n";
    out << "requirement: "
        << (sign == ml::SignRequirement::NonNegative ? "NonNegative"
                                                     : "NonPositive")
        << "\n";
    out << "points checked: " << v.points_checked << "\n";
    out << "min entries: (" << fmt(v.min_entries.lambda, 9) << ", "
        << fmt(v.min_entries.mu, 9) << ", " << fmt(v.min_entries.nu, 9)
        << ")\n";
    out << "max entries: (" << fmt(v.max_entries.lambda, 9) << ", "
        << fmt(v.max_entries.mu, 9) << ", " << fmt(v.max_entries.nu, 9)
        << ")\n";
    out << "worst violation: " << fmt(v.worst_violation, 3) << "\n";
    out << (v.pass ? "PASS" : "FAIL") << "\n";
    if (!v.pass) {
        err << "metric verification failed\n";
        return kExitNumerical;
    }
    return kExitOk;
}

// ---- nu --------------------------------------------------------------------

int cmd_nu(bool json, std::ostream& out) {
    double series = vol::nu();
    double quad = vol::nu_quadrature();
    double delta = std::abs(series - quad);
    if (json) {
        nlohmann::json j;
        j["nu"] = series;
        j["quadrature"] = quad;
        j["cross_check_delta"] = delta;
        out << j.dump(1) << "\n";
    } else {
        out << "nu = " << fmt(series, 12) << "\n";
        out << "quadrature cross-check delta = " << fmt(delta, 3) << "\n";
    }
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
    CLI::App app{"hyperbolic cone structures on link complements"};
    app.require_subcommand(1);

    CompleteArgs ca;
    auto* complete = app.add_subcommand(
        "complete", "solve the complete hyperbolic structure");
    complete->add_option("input", ca.input, "census name or JSON file")
        ->required();
    complete->add_flag("--json", ca.json, "JSON output");
    complete->add_option("--random-starts", ca.random_starts,
                         "extra Newton solves from random seeds");
    complete->add_option("--seed", ca.seed, "RNG seed (default 0)");

    ConeArgs na;
    auto* cone = app.add_subcommand(
        "cone", "deform to prescribed cone angles");
    cone->add_option("input", na.input)->required();
    cone->add_option("--angles", na.angles, "cone angles (radians)")
        ->required()
        ->delimiter(',');
    cone->add_option("--signs", na.signs, "trace signs, +-1 per cusp")
        ->delimiter(',');
    cone->add_flag("--extended", na.extended,
                   "allow angles in [2*pi/3, pi); you are asserting the "
                   "manifold has no sphere meeting the link in three points");
    cone->add_option("--corrector-tol", na.corrector_tol);
    cone->add_option("--degeneracy-floor", na.degeneracy_floor);

    SweepArgs sa;
    auto* sweep_cmd = app.add_subcommand(
        "sweep", "cone-angle sweep along a ray, CSV output");
    sweep_cmd->add_option("input", sa.input)->required();
    sweep_cmd->add_option("--from", sa.from)->required();
    sweep_cmd->add_option("--to", sa.to)->required();
    sweep_cmd->add_option("--steps", sa.steps)->required();
    sweep_cmd->add_option("--ray", sa.ray, "ray direction (default all 1)")
        ->delimiter(',');
    sweep_cmd->add_option("--out", sa.out_path, "CSV path (default stdout)");
    sweep_cmd->add_flag("--no-warm-start", sa.no_warm_start);
    sweep_cmd->add_option("--jobs", sa.jobs);
    sweep_cmd->add_flag("--extended", sa.extended);
    sweep_cmd->add_option("--corrector-tol", sa.corrector_tol);
    sweep_cmd->add_option("--degeneracy-floor", sa.degeneracy_floor);

    VerifyArgs va;
    auto* verify = app.add_subcommand(
        "verify-metric", "curvature sign checks for the model metrics");
    verify
        ->add_option("kind", va.kind,
                     "fermi-hyp | fermi-euc | cone-smoothing | cusp-flatten")
        ->required();
    verify->add_option("--alpha", va.alpha, "cone angle (radians)");
    verify->add_option("--eps", va.eps, "smoothing radius");
    verify->add_option("--z0", va.z0, "cusp height");
    verify->add_option("--zfar", va.zfar, "outer cusp height");
    verify->add_option("--grid", va.grid, "verification grid size");

    bool nu_json = false;
    auto* nu_cmd = app.add_subcommand(
        "nu", "the regular-ideal-tetrahedron volume constant");
    nu_cmd->add_flag("--json", nu_json);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (complete->parsed()) return cmd_complete(ca, out, err);
        if (cone->parsed()) return cmd_cone(na, out, err);
        if (sweep_cmd->parsed()) return cmd_sweep(sa, out, err);
        if (verify->parsed()) return cmd_verify_metric(va, out, err);
        if (nu_cmd->parsed()) return cmd_nu(nu_json, out);
    } catch (const FormatError& e) {
        err << "input error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const CombinatoricsError& e) {
        err << "input error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const AngleOutOfRange& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const InfeasibleSmoothing& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NoConvergence& e) {
        err << "numerical failure: " << e.what() << " (best residual "
            << fmt(e.best_residual, 3) << ")\n";
        return kExitNumerical;
    } catch (const NonGeometric& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitUsage;
}

}  // namespace cone_moduli::cli
