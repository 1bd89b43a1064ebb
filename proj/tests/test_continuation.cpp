#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cone_moduli/continuation.hpp"
#include "cone_moduli/triangulation.hpp"
#include "cone_moduli/volume.hpp"
#include "oracles.hpp"

using namespace cone_moduli;
using namespace cone_moduli::continuation;
namespace tr = cone_moduli::triangulation;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kWall = 2.0 * std::numbers::pi / 3.0;

double shape_distance(const ShapeAssignment& a, const ShapeAssignment& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.z.size(); ++i) {
        d = std::max(d, std::abs(a.z[i] - b.z[i]));
    }
    return d;
}

}  // namespace

TEST_CASE("solve_complete: figure8 reaches the regular point") {
    auto tri = tr::IdealTriangulation::load("figure8");
    auto s = solve_complete(tri);
    Complex regular = std::polar(1.0, kPi / 3.0);
    CHECK(std::abs(s.z[0] - regular) < 1e-12);
    CHECK(std::abs(s.z[1] - regular) < 1e-12);

    tr::GluingSystem sys(tri);
    std::vector<Complex> u0(1, 0.0);
    CHECK(sys.full_residuals(s, u0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("solve_complete: random seeds land on the same point") {
    auto tri = tr::IdealTriangulation::load("figure8");
    tr::GluingSystem sys(tri);
    auto reference = solve_complete(sys);
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> re(-0.5, 1.5), im(0.2, 2.0);
    for (int k = 0; k < 25; ++k) {
        ShapeAssignment seed;
        seed.z = {Complex(re(rng), im(rng)), Complex(re(rng), im(rng))};
        seed.log_branch.assign(2, {0, 0, 0});
        auto s = solve_complete(sys, seed);
        CHECK(shape_distance(s, reference) < 1e-9);
    }
}

TEST_CASE("solve_complete: corrupted edge equation fails loudly") {
    auto tri = tr::IdealTriangulation::load("figure8");
    tr::GluingSystem good(tri);
    auto edge_rows = good.edge_rows();
    edge_rows[0][0] += 1;  // perturb one coefficient
    tr::GluingSystem bad(
        tri.n_tet(), edge_rows,
        {tri.cusps()[0].meridian.coeffs}, {tri.cusps()[0].meridian.pi_i_coeff},
        {tri.cusps()[0].longitude.coeffs},
        {tri.cusps()[0].longitude.pi_i_coeff});
    bool failed_as_expected = false;
    try {
        auto s = solve_complete(bad);
        (void)s;
    } catch (const NoConvergence&) {
        failed_as_expected = true;
    } catch (const NonGeometric&) {
        failed_as_expected = true;
    }
    CHECK(failed_as_expected);
}

TEST_CASE("trace_map: complete structure gives +-2") {
    auto tri = tr::IdealTriangulation::load("figure8");
    tr::GluingSystem sys(tri);
    auto s = solve_complete(sys);
    auto f = trace_map(sys, s);
    REQUIRE(f.size() == 1);
    CHECK(std::abs(f[0] - Complex(2.0, 0.0)) < 1e-12);
    std::vector<int> minus = {-1};
    auto fm = trace_map(sys, s, minus);
    CHECK(std::abs(fm[0] + Complex(2.0, 0.0)) < 1e-12);
}

TEST_CASE("trace_map: u = i pi gives trace 0 (formula check)") {
    // one-tetrahedron synthetic system whose meridian row is log z
    tr::GluingSystem sys(1, {}, {{1, 0, 0}}, {0}, {{0, 1, 0}}, {0});
    ShapeAssignment s;
    s.z = {Complex(-1.0, 1e-9)};  // log z ~ i pi
    s.log_branch = {{0, 0, 0}};
    auto f = trace_map(sys, s);
    CHECK(std::abs(f[0]) < 1e-8);
}

TEST_CASE("continue_to_angles: figure8 to pi/3") {
    auto tri = tr::IdealTriangulation::load("figure8");
    tr::GluingSystem sys(tri);
    auto start = solve_complete(sys);
    auto path = continue_to_angles(sys, start, ConeTarget::uniform(1, kPi / 3));
    REQUIRE(path.status == PathStatus::Completed);
    const auto& last = path.final_sample();
    Complex u = sys.meridian_log_holonomy(last.shapes, 0);
    CHECK(std::abs(u - Complex(0.0, kPi / 3.0)) < 1e-10);
    CHECK(last.volume < 2.0 * volume::nu());
    CHECK(last.volume > 0.0);
    // trace target consistency
    CHECK(std::abs(last.traces[0] - 2.0 * std::cos(kPi / 6.0)) < 1e-9);
}

TEST_CASE("continue_to_angles: path invariants") {
    auto tri = tr::IdealTriangulation::load("figure8");
    tr::GluingSystem sys(tri);
    auto start = solve_complete(sys);
    ContinuationOptions opts;
    auto path =
        continue_to_angles(sys, start, ConeTarget::uniform(1, 1.2), opts);
    REQUIRE(path.status == PathStatus::Completed);
    for (std::size_t i = 1; i < path.samples.size(); ++i) {
        const auto& prev = path.samples[i - 1];
        const auto& cur = path.samples[i];
        CHECK(cur.t > prev.t);
        CHECK(shape_distance(prev.shapes, cur.shapes) < opts.max_step);
    }
    // corrector post-state re-verification through the public evaluators
    for (const auto& sample : path.samples) {
        CHECK(sys.edge_residuals(sample.shapes).cwiseAbs().maxCoeff() < 1e-10);
        Complex u = sys.meridian_log_holonomy(sample.shapes, 0);
        CHECK(std::abs(u.real()) < 1e-10);
    }
}

TEST_CASE("continue_to_angles: near-wall target completes, wall degenerates") {
    auto tri = tr::IdealTriangulation::load("figure8");
    tr::GluingSystem sys(tri);
    auto start = solve_complete(sys);

    auto near_wall = continue_to_angles(
        sys, start, ConeTarget::uniform(1, kWall - 1e-3));
    REQUIRE(near_wall.status == PathStatus::Completed);
    CHECK(near_wall.final_sample().volume < 1e-3);
    CHECK(near_wall.final_sample().volume > 0.0);
    CHECK(near_wall.final_sample().degeneracy_margin < 1e-2);
    // the orientation crossing is flagged, never silent
    CHECK(near_wall.orientation_events.size() == 1);
    CHECK(near_wall.orientation_events[0].tet == 1);

    auto wall = continue_to_angles(sys, start, ConeTarget::uniform(1, kWall));
    REQUIRE(wall.status == PathStatus::Degenerated);
    REQUIRE(wall.diagnosis.has_value());
    CHECK(wall.diagnosis->t_star > 0.99);
    CHECK(wall.diagnosis->flat_cross_section[0]);
}

TEST_CASE("branch bookkeeping engages across the flat locus") {
    auto tri = tr::IdealTriangulation::load("figure8");
    tr::GluingSystem sys(tri);
    auto start = solve_complete(sys);
    // pi/2 lies past the orientation crossing at arccos(1/4)
    auto path = continue_to_angles(sys, start, ConeTarget::uniform(1, kPi / 2));
    REQUIRE(path.status == PathStatus::Completed);
    const auto& shapes = path.final_sample().shapes;
    CHECK(shapes.z[1].imag() < 0.0);
    bool some_branch = false;
    for (const auto& branch : shapes.log_branch) {
        for (int k : branch) some_branch |= (k != 0);
    }
    CHECK(some_branch);
    // edge sums equal 2 pi i exactly (not just mod 2 pi i) with the
    // recorded branches...
    CHECK(sys.edge_residuals(shapes).cwiseAbs().maxCoeff() < 1e-10);
    // ...and fail without them
    ShapeAssignment principal = shapes;
    principal.log_branch.assign(shapes.z.size(), {0, 0, 0});
    CHECK(sys.edge_residuals(principal).cwiseAbs().maxCoeff() > 1.0);
    // volume strictly inside (0, 2 nu) at theta = pi/2
    CHECK(path.final_sample().volume > 0.0);
    CHECK(path.final_sample().volume < 2.0 * volume::nu());
}

TEST_CASE("cone volumes match an independent implementation") {
    // Frozen from a from-scratch Python solver (staged branch-tracked
    // Newton over numpy lstsq) run on the same census data.
    auto tri = tr::IdealTriangulation::load("figure8");
    tr::GluingSystem sys(tri);
    auto start = solve_complete(sys);
    auto path = continue_to_angles(sys, start, ConeTarget::uniform(1, kPi / 2));
    REQUIRE(path.status == PathStatus::Completed);
    CHECK(path.final_sample().volume ==
          doctest::Approx(0.5074708032048257).epsilon(1e-11));

    auto wl = tr::IdealTriangulation::load("whitehead");
    tr::GluingSystem wsys(wl);
    auto wstart = solve_complete(wsys);
    auto wpath =
        continue_to_angles(wsys, wstart, ConeTarget::uniform(2, kPi / 2));
    REQUIRE(wpath.status == PathStatus::Completed);
    CHECK(wpath.final_sample().volume ==
          doctest::Approx(1.5886466393001633).epsilon(1e-10));
}

TEST_CASE("continue_to_angles: theta outside the cube is rejected") {
    auto tri = tr::IdealTriangulation::load("figure8");
    auto start = solve_complete(tri);
    CHECK_THROWS_AS(
        continue_to_angles(tri, start, ConeTarget::uniform(1, 0.0)),
        AngleOutOfRange);
    CHECK_THROWS_AS(
        continue_to_angles(tri, start, ConeTarget::uniform(1, 2.5)),
        AngleOutOfRange);
}

TEST_CASE("extended mode admits angles past 2 pi / 3") {
    auto tri = tr::IdealTriangulation::load("whitehead");
    tr::GluingSystem sys(tri);
    auto start = solve_complete(sys);
    auto target = ConeTarget::uniform(2, 2.2, /*extended=*/true);
    auto path = continue_to_angles(sys, start, target);
    CHECK(path.status == PathStatus::Completed);
    Complex u = sys.meridian_log_holonomy(path.final_sample().shapes, 0);
    CHECK(std::abs(u - Complex(0.0, 2.2)) < 1e-10);
}

TEST_CASE("grid refinement does not move the endpoint") {
    auto tri = tr::IdealTriangulation::load("figure8");
    tr::GluingSystem sys(tri);
    auto start = solve_complete(sys);
    ContinuationOptions coarse, fine;
    coarse.max_dt = 0.05;
    fine.max_dt = 0.025;
    auto target = ConeTarget::uniform(1, 1.4);
    auto a = continue_to_angles(sys, start, target, coarse);
    auto b = continue_to_angles(sys, start, target, fine);
    REQUIRE(a.status == PathStatus::Completed);
    REQUIRE(b.status == PathStatus::Completed);
    CHECK(shape_distance(a.final_sample().shapes, b.final_sample().shapes) <
          1e-8);
}

TEST_CASE("two rays to the same target agree") {
    auto tri = tr::IdealTriangulation::load("figure8");
    tr::GluingSystem sys(tri);
    auto start = solve_complete(sys);
    double theta_final = 1.3;
    auto direct =
        continue_to_angles(sys, start, ConeTarget::uniform(1, theta_final));
    auto leg1 = continue_to_angles(sys, start, ConeTarget::uniform(1, 0.6));
    REQUIRE(leg1.status == PathStatus::Completed);
    auto leg2 = continue_to_angles(sys, leg1.final_sample().shapes,
                                   ConeTarget::uniform(1, theta_final));
    REQUIRE(direct.status == PathStatus::Completed);
    REQUIRE(leg2.status == PathStatus::Completed);
    CHECK(shape_distance(direct.final_sample().shapes,
                         leg2.final_sample().shapes) < 1e-7);
}

TEST_CASE("sweep: empty grid, monotone volume, warm start equivalence") {
    auto tri = tr::IdealTriangulation::load("figure8");
    CHECK(sweep(tri, std::vector<double>{}, std::vector<double>{}).empty());

    std::vector<double> grid;
    for (int i = 0; i < 16; ++i) grid.push_back(0.1 + i * (1.9 - 0.1) / 15.0);
    SweepOptions warm;
    auto rows = sweep(tri, grid, std::vector<double>{1.0}, warm);
    REQUIRE(rows.size() == 16);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        REQUIRE(rows[i].ok);
        CHECK(rows[i].status == PathStatus::Completed);
        if (i > 0) CHECK(rows[i].volume < rows[i - 1].volume);
    }

    SweepOptions cold = warm;
    cold.warm_start = false;
    auto rows2 = sweep(tri, grid, std::vector<double>{1.0}, cold);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(std::abs(rows[i].volume - rows2[i].volume) < 1e-9);
    }

    SweepOptions parallel = cold;
    parallel.jobs = 3;
    auto rows3 = sweep(tri, grid, std::vector<double>{1.0}, parallel);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows3[i].volume == rows2[i].volume);  // identical rows
        CHECK(rows3[i].min_im_z == rows2[i].min_im_z);
    }
}

TEST_CASE("sweep: whitehead symmetric ray keeps traces equal") {
    auto tri = tr::IdealTriangulation::load("whitehead");
    std::vector<double> grid;
    for (int i = 0; i < 8; ++i) grid.push_back(0.2 + i * 0.18);
    std::vector<double> ray = {1.0, 1.0};
    auto rows = sweep(tri, grid, ray);
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& row : rows) {
        REQUIRE(row.ok);
        CHECK(std::abs(row.traces[0] - row.traces[1]) < 1e-9);
        CHECK(row.volume < prev);  // strictly decreasing along the ray
        prev = row.volume;
    }
}

TEST_CASE("degenerated sweep rows carry their status") {
    auto tri = tr::IdealTriangulation::load("figure8");
    std::vector<double> grid = {1.0, kWall};
    auto rows = sweep(tri, grid, std::vector<double>{1.0});
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].status == PathStatus::Completed);
    CHECK(rows[1].status == PathStatus::Degenerated);
    CHECK(rows[1].t_star > 0.99);
}

TEST_CASE("injectivity proxy: formula anchors") {
    ShapeAssignment regular = ShapeAssignment::regular(2);
    double a = std::abs(regular.z[0]);
    double expected = regular.z[0].imag() * a / (1.0 + a * a);
    CHECK(injectivity_proxy(regular) == doctest::Approx(expected));

    ShapeAssignment flat;
    flat.z = {Complex(0.5, 0.0)};
    flat.log_branch = {{0, 0, 0}};
    CHECK(injectivity_proxy(flat) == 0.0);
}

TEST_CASE("injectivity proxy decreases while positively oriented") {
    auto tri = tr::IdealTriangulation::load("figure8");
    tr::GluingSystem sys(tri);
    auto start = solve_complete(sys);
    // stay below the orientation crossing at arccos(1/4) ~ 1.318
    auto path = continue_to_angles(sys, start, ConeTarget::uniform(1, 1.25));
    REQUIRE(path.status == PathStatus::Completed);
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& sample : path.samples) {
        double p = injectivity_proxy(sample.shapes);
        CHECK(p < prev + 1e-12);
        prev = p;
    }
}

TEST_CASE("property: random targets in the open cube all complete") {
    auto tri = tr::IdealTriangulation::load("whitehead");
    tr::GluingSystem sys(tri);
    auto start = solve_complete(sys);
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(0.01, kWall - 0.01);
    for (int k = 0; k < 30; ++k) {
        ConeTarget target;
        target.theta = {u(rng), u(rng)};
        target.signs = {1, 1};
        auto path = continue_to_angles(sys, start, target);
        REQUIRE(path.status == PathStatus::Completed);
        for (int c = 0; c < 2; ++c) {
            Complex uc =
                sys.meridian_log_holonomy(path.final_sample().shapes, c);
            CHECK(std::abs(uc - Complex(0.0, target.theta[c])) < 1e-9);
        }
    }
}

TEST_CASE("property: chained cone-to-cone continuations") {
    auto tri = tr::IdealTriangulation::load("figure8");
    tr::GluingSystem sys(tri);
    auto s = solve_complete(sys);
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> u(0.01, kWall - 0.01);
    for (int leg = 0; leg < 12; ++leg) {
        double theta = u(rng);
        auto path = continue_to_angles(sys, s, ConeTarget::uniform(1, theta));
        REQUIRE(path.status == PathStatus::Completed);
        s = path.final_sample().shapes;
        Complex uu = sys.meridian_log_holonomy(s, 0);
        CHECK(std::abs(uu - Complex(0.0, theta)) < 1e-9);
    }
}

TEST_CASE("volume bound holds at every accepted sample") {
    auto tri = tr::IdealTriangulation::load("whitehead");
    tr::GluingSystem sys(tri);
    auto start = solve_complete(sys);
    ConeTarget target;
    target.theta = {1.1, 0.7};
    target.signs = {1, 1};
    auto path = continue_to_angles(sys, start, target);
    REQUIRE(path.status == PathStatus::Completed);
    for (const auto& sample : path.samples) {
        auto report = volume::volume_report(
            std::span<const Complex>(sample.shapes.z));
        CHECK(report.bound_satisfied);
    }
    Complex u0 = sys.meridian_log_holonomy(path.final_sample().shapes, 0);
    Complex u1 = sys.meridian_log_holonomy(path.final_sample().shapes, 1);
    CHECK(std::abs(u0 - Complex(0.0, 1.1)) < 1e-10);
    CHECK(std::abs(u1 - Complex(0.0, 0.7)) < 1e-10);
    // frozen from the independent Python solver on the same census data
    CHECK(path.final_sample().volume ==
          doctest::Approx(2.857502127098670).epsilon(1e-11));
}
