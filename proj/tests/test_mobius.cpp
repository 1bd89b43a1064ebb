#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cone_moduli/mobius.hpp"
#include "oracles.hpp"

using namespace cone_moduli;
using namespace cone_moduli::mobius;

namespace {

constexpr double kPi = std::numbers::pi;

MobiusTransform diag(Complex lambda) {
    return MobiusTransform::from_entries(lambda, 0.0, 0.0, 1.0 / lambda);
}

MobiusTransform random_sl2(std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (;;) {
        Complex a{u(rng), u(rng)}, b{u(rng), u(rng)}, c{u(rng), u(rng)},
            d{u(rng), u(rng)};
        if (std::abs(a * d - b * c) > 0.1) {
            return MobiusTransform::from_entries(a, b, c, d);
        }
    }
}

}  // namespace

TEST_CASE("normalization fixes det and trace sign") {
    auto A = MobiusTransform::from_entries({2, 0}, {1, 1}, {0, 0}, {1, 0});
    CHECK(std::abs(A.det() - 1.0) < 1e-12);
    CHECK(A.trace().real() >= 0.0);
    auto B = MobiusTransform::from_entries({-3, 0}, {0, 0}, {1, 0}, {-1, 0});
    CHECK(B.trace().real() >= 0.0);
}

TEST_CASE("compose: identity, inverse, diagonal product") {
    auto I = MobiusTransform::identity();
    auto A = MobiusTransform::from_entries({1, 0}, {2, 1}, {0.5, 0}, {2, 0});
    auto IA = compose(I, A);
    CHECK(std::abs(IA.a - A.a) < 1e-12);
    CHECK(std::abs(IA.b - A.b) < 1e-12);

    auto AAinv = compose(A, A.inverse());
    CHECK(std::abs(AAinv.a - 1.0) < 1e-12);
    CHECK(std::abs(AAinv.b) < 1e-12);
    CHECK(std::abs(AAinv.c) < 1e-12);

    auto D = compose(diag(2.0), diag(3.0));
    CHECK(std::abs(D.a - 6.0) < 1e-12);
    CHECK(std::abs(D.d - 1.0 / 6.0) < 1e-12);
}

TEST_CASE("compose is associative to 1e-12") {
    std::mt19937 rng(11);
    for (int i = 0; i < 50; ++i) {
        auto A = random_sl2(rng), B = random_sl2(rng), C = random_sl2(rng);
        auto left = compose(compose(A, B), C);
        auto right = compose(A, compose(B, C));
        CHECK(std::abs(left.a - right.a) < 1e-12);
        CHECK(std::abs(left.b - right.b) < 1e-12);
        CHECK(std::abs(left.c - right.c) < 1e-12);
        CHECK(std::abs(left.d - right.d) < 1e-12);
    }
}

TEST_CASE("classify: unipotent is parabolic") {
    auto A = MobiusTransform::from_entries({1, 0}, {1, 0}, {0, 0}, {1, 0});
    CHECK(classify(A).type == IsometryType::Parabolic);
}

TEST_CASE("classify: diagonal rotation by pi/3") {
    auto A = diag(std::polar(1.0, kPi / 6.0));
    auto cls = classify(A);
    REQUIRE(cls.type == IsometryType::Elliptic);
    CHECK(cls.rotation_angle == doctest::Approx(kPi / 3.0).epsilon(1e-12));
}

TEST_CASE("classify: trace 3 loxodromic, length from the bisection oracle") {
    double lambda = (3.0 + std::sqrt(5.0)) / 2.0;
    auto A = diag(lambda);
    auto cls = classify(A);
    REQUIRE(cls.type == IsometryType::Loxodromic);
    // independent: solve 2 cosh(l/2) = 3 by bisection
    double l_oracle = oracles::bisect_cosh_half(3.0);
    CHECK(cls.translation_length == doctest::Approx(l_oracle).epsilon(1e-10));
    // and confirm against the eigenvalue log
    CHECK(cls.translation_length ==
          doctest::Approx(2.0 * std::log(lambda)).epsilon(1e-12));
    CHECK(cls.twist == doctest::Approx(0.0));
}

TEST_CASE("classify: identity and near-identity") {
    CHECK(classify(MobiusTransform::identity()).type ==
          IsometryType::Identity);
    auto almost = MobiusTransform::from_entries({-1, 0}, {1e-12, 0}, {0, 0},
                                                {-1, 0});
    CHECK(classify(almost).type == IsometryType::Identity);
}

TEST_CASE("classification invariant under sign flip and conjugation") {
    std::mt19937 rng(5);
    for (int i = 0; i < 200; ++i) {
        auto A = random_sl2(rng);
        auto P = random_sl2(rng);
        MobiusTransform minus_a{-A.a, -A.b, -A.c, -A.d};  // raw -A
        CHECK(classify(minus_a).type == classify(A).type);
        auto conj = compose(compose(P, A), P.inverse());
        auto ca = classify(A);
        auto cb = classify(conj);
        CHECK(ca.type == cb.type);
        if (ca.type == IsometryType::Elliptic) {
            CHECK(ca.rotation_angle ==
                  doctest::Approx(cb.rotation_angle).epsilon(1e-6));
        }
        if (ca.type == IsometryType::Loxodromic) {
            CHECK(ca.translation_length ==
                  doctest::Approx(cb.translation_length).epsilon(1e-6));
        }
    }
}

TEST_CASE("elliptic angle reproduces |trace|") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> ang(0.05, 2.0 * kPi - 0.05);
    for (int i = 0; i < 200; ++i) {
        double theta = ang(rng);
        auto A = diag(std::polar(1.0, theta / 2.0));
        auto cls = classify(A);
        if (cls.type != IsometryType::Elliptic) continue;  // theta ~ 2 pi
        double re_trace = 2.0 * std::cos(cls.rotation_angle / 2.0);
        CHECK(std::abs(re_trace - std::abs(A.trace())) < 1e-9);
    }
}

TEST_CASE("fixed points: parabolic translation fixes only infinity") {
    auto A = MobiusTransform::from_entries({1, 0}, {1, 0}, {0, 0}, {1, 0});
    auto pts = fixed_points_boundary(A);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].infinite);
}

TEST_CASE("fixed points: diagonal fixes 0 and infinity") {
    auto pts = fixed_points_boundary(diag(3.0));
    REQUIRE(pts.size() == 2);
    bool has_inf = pts[0].infinite || pts[1].infinite;
    bool has_zero = (!pts[0].infinite && std::abs(pts[0].z) < 1e-12) ||
                    (!pts[1].infinite && std::abs(pts[1].z) < 1e-12);
    CHECK(has_inf);
    CHECK(has_zero);
}

TEST_CASE("fixed points: rotation [[0,1],[-1,0]] fixes +-i") {
    auto A = MobiusTransform::from_entries({0, 0}, {1, 0}, {-1, 0}, {0, 0});
    auto pts = fixed_points_boundary(A);
    REQUIRE(pts.size() == 2);
    for (const auto& p : pts) {
        REQUIRE(!p.infinite);
        CHECK(std::abs(std::abs(p.z.imag()) - 1.0) < 1e-12);
        CHECK(std::abs(p.z.real()) < 1e-12);
    }
}

TEST_CASE("fixed points are genuinely fixed (chordal metric)") {
    std::mt19937 rng(13);
    for (int i = 0; i < 200; ++i) {
        auto A = random_sl2(rng);
        if (classify(A).type == IsometryType::Identity) continue;
        for (const auto& p : fixed_points_boundary(A)) {
            CHECK(chordal_distance(A.apply(p), p) < 1e-9);
        }
    }
}

TEST_CASE("fixed points of +-I rejected") {
    CHECK_THROWS_AS(fixed_points_boundary(MobiusTransform::identity()),
                    IdentityInput);
    MobiusTransform minus_i{{-1, 0}, {0, 0}, {0, 0}, {-1, 0}};
    CHECK_THROWS_AS(fixed_points_boundary(minus_i), IdentityInput);
}

TEST_CASE("all_elliptic_probe: cyclic elliptic group") {
    MobiusTransform gens[] = {diag(std::polar(1.0, kPi / 4.0))};
    auto res = all_elliptic_probe(gens, 6);
    CHECK(res.all_elliptic);
    CHECK(res.witness.empty());
}

TEST_CASE("all_elliptic_probe: parabolic generator is the witness") {
    MobiusTransform gens[] = {
        MobiusTransform::from_entries({1, 0}, {1, 0}, {0, 0}, {1, 0})};
    auto res = all_elliptic_probe(gens, 1);
    CHECK(!res.all_elliptic);
    REQUIRE(res.witness.size() == 1);
    CHECK(res.witness_class.type == IsometryType::Parabolic);
}

TEST_CASE("all_elliptic_probe: two pi-rotations with disjoint axes") {
    // rotation by pi about the (0, infinity) axis
    auto A = diag(Complex(0, 1));
    // rotation by pi about the (1, 2) axis: conjugate by T with T(0) = 1,
    // T(infinity) = 2, i.e. T = [[2, 1], [1, 1]]
    auto T = MobiusTransform::from_entries({2, 0}, {1, 0}, {1, 0}, {1, 0});
    auto B = compose(compose(T, A), T.inverse());
    CHECK(classify(B).type == IsometryType::Elliptic);

    // oracle: the product has trace -6 (computed by explicit matrix algebra:
    // diag(i, -i) * i[[3, -4], [2, -3]] = [[-3, 4], [2, -3]])
    auto AB = compose(A, B);
    CHECK(std::abs(AB.trace()) == doctest::Approx(6.0).epsilon(1e-9));

    MobiusTransform gens[] = {A, B};
    auto res = all_elliptic_probe(gens, 2);
    CHECK(!res.all_elliptic);
    CHECK(res.witness_class.type == IsometryType::Loxodromic);
}
