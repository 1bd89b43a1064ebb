#include "cone_moduli/mobius.hpp"

#include <cmath>

namespace cone_moduli::mobius {

namespace {

constexpr double kPi = 3.14159265358979323846;

MobiusTransform normalized(Complex a, Complex b, Complex c, Complex d) {
    Complex det = a * d - b * c;
    if (std::abs(det) < 1e-30) {
        throw FormatError("Mobius transform has vanishing determinant");
    }
    Complex s = std::sqrt(det);
    a /= s; b /= s; c /= s; d /= s;
    Complex tr = a + d;
    bool flip = tr.real() < 0.0 ||
                (tr.real() == 0.0 && tr.imag() < 0.0);
    if (flip) {
        a = -a; b = -b; c = -c; d = -d;
    }
    return MobiusTransform{a, b, c, d};
}

double dist_to_pm_identity(const MobiusTransform& A) {
    auto dist = [](const MobiusTransform& M, double s) {
        double m = 0.0;
        m = std::max(m, std::abs(M.a - s));
        m = std::max(m, std::abs(M.b));
        m = std::max(m, std::abs(M.c));
        m = std::max(m, std::abs(M.d - s));
        return m;
    };
    return std::min(dist(A, 1.0), dist(A, -1.0));
}

}  // namespace

double chordal_distance(const BoundaryPoint& p, const BoundaryPoint& q) {
    auto lift = [](const BoundaryPoint& x) {
        if (x.infinite) return 0.0;  // handled separately
        return 1.0 + std::norm(x.z);
    };
    if (p.infinite && q.infinite) return 0.0;
    if (p.infinite) return 2.0 / std::sqrt(lift(q));
    if (q.infinite) return 2.0 / std::sqrt(lift(p));
    return 2.0 * std::abs(p.z - q.z) / std::sqrt(lift(p) * lift(q));
}

MobiusTransform MobiusTransform::identity() { return MobiusTransform{}; }

MobiusTransform MobiusTransform::from_entries(Complex a, Complex b, Complex c,
                                              Complex d) {
    return normalized(a, b, c, d);
}

MobiusTransform MobiusTransform::inverse() const {
    return normalized(d, -b, -c, a);
}

BoundaryPoint MobiusTransform::apply(const BoundaryPoint& p) const {
    if (p.infinite) {
        if (std::abs(c) < 1e-14) return BoundaryPoint::at_infinity();
        return BoundaryPoint::finite(a / c);
    }
    Complex num = a * p.z + b;
    Complex den = c * p.z + d;
    if (std::abs(den) < 1e-14 * (1.0 + std::abs(num))) {
        return BoundaryPoint::at_infinity();
    }
    return BoundaryPoint::finite(num / den);
}

MobiusTransform compose(const MobiusTransform& A, const MobiusTransform& B) {
    return normalized(A.a * B.a + A.b * B.c, A.a * B.b + A.b * B.d,
                      A.c * B.a + A.d * B.c, A.c * B.b + A.d * B.d);
}

IsometryClass classify(const MobiusTransform& A, double tol) {
    IsometryClass out;
    if (dist_to_pm_identity(A) <= tol) {
        out.type = IsometryType::Identity;
        return out;
    }
    Complex tr = A.trace();
    double abs_tr = std::abs(tr);
    if (std::abs(tr.imag()) <= tol && std::abs(abs_tr - 2.0) <= tol) {
        out.type = IsometryType::Parabolic;
        return out;
    }
    if (std::abs(tr.imag()) <= tol && abs_tr < 2.0) {
        out.type = IsometryType::Elliptic;
        // trace = +-2 cos(theta/2); report theta in (0, pi].
        double x = std::min(1.0, abs_tr / 2.0);
        out.rotation_angle = 2.0 * std::acos(x);
        return out;
    }
    out.type = IsometryType::Loxodromic;
    Complex t = (tr.real() < 0.0) ? -tr : tr;
    Complex root = std::sqrt(t * t - 4.0);
    Complex lambda = (t + root) / 2.0;
    if (std::abs(lambda) < 1.0) lambda = (t - root) / 2.0;
    out.translation_length = 2.0 * std::log(std::abs(lambda));
    double tau = 2.0 * std::arg(lambda);
    while (tau > kPi) tau -= 2.0 * kPi;
    while (tau <= -kPi) tau += 2.0 * kPi;
    out.twist = tau;
    return out;
}

std::vector<BoundaryPoint> fixed_points_boundary(const MobiusTransform& A,
                                                 double tol) {
    if (dist_to_pm_identity(A) <= tol) {
        throw IdentityInput("fixed_points_boundary: +-I fixes everything");
    }
    bool parabolic = classify(A, tol).type == IsometryType::Parabolic;
    std::vector<BoundaryPoint> out;
    if (std::abs(A.c) < 1e-13) {
        out.push_back(BoundaryPoint::at_infinity());
        if (!parabolic && std::abs(A.d - A.a) > 1e-13) {
            out.push_back(BoundaryPoint::finite(A.b / (A.d - A.a)));
        }
        return out;
    }
    Complex tr = A.trace();
    if (parabolic) {
        out.push_back(BoundaryPoint::finite((A.a - A.d) / (2.0 * A.c)));
        return out;
    }
    Complex root = std::sqrt(tr * tr - 4.0);
    out.push_back(BoundaryPoint::finite((A.a - A.d + root) / (2.0 * A.c)));
    out.push_back(BoundaryPoint::finite((A.a - A.d - root) / (2.0 * A.c)));
    return out;
}

namespace {

void probe_words(std::span<const MobiusTransform> gens,
                 std::span<const MobiusTransform> inv_gens, int depth_left,
                 int last_letter, const MobiusTransform& word,
                 std::vector<int>& letters, EllipticProbeResult& result,
                 double tol) {
    if (!result.all_elliptic || depth_left == 0) return;
    int k = static_cast<int>(gens.size());
    for (int letter = 1; letter <= k; ++letter) {
        for (int sign : {+1, -1}) {
            int signed_letter = sign * letter;
            if (signed_letter == -last_letter) continue;  // reduced words only
            const MobiusTransform& g =
                sign > 0 ? gens[letter - 1] : inv_gens[letter - 1];
            MobiusTransform next = compose(word, g);
            letters.push_back(signed_letter);
            IsometryClass cls = classify(next, tol);
            if (cls.type != IsometryType::Elliptic &&
                cls.type != IsometryType::Identity) {
                result.all_elliptic = false;
                result.witness = letters;
                result.witness_class = cls;
                letters.pop_back();
                return;
            }
            probe_words(gens, inv_gens, depth_left - 1, signed_letter, next,
                        letters, result, tol);
            letters.pop_back();
            if (!result.all_elliptic) return;
        }
    }
}

}  // namespace

EllipticProbeResult all_elliptic_probe(
    std::span<const MobiusTransform> generators, int word_length, double tol) {
    EllipticProbeResult result;
    std::vector<MobiusTransform> inv;
    inv.reserve(generators.size());
    for (const auto& g : generators) inv.push_back(g.inverse());
    std::vector<int> letters;
    probe_words(generators, inv, word_length, 0, MobiusTransform::identity(),
                letters, result, tol);
    return result;
}

}  // namespace cone_moduli::mobius
