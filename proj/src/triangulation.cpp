#include "cone_moduli/triangulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

namespace cone_moduli::detail {
// Defined in the configure-time generated census_data.cpp.
const char* census_json(const std::string& name);
}  // namespace cone_moduli::detail

namespace cone_moduli::triangulation {

namespace {

using nlohmann::json;

constexpr double kPi = std::numbers::pi;
const Complex kTwoPiI{0.0, 2.0 * kPi};

// Opposite-edge pair index of the unordered tetrahedron edge {v, w}.
int pair_of_edge(int v, int w) {
    if (v > w) std::swap(v, w);
    if ((v == 0 && w == 1) || (v == 2 && w == 3)) return 0;
    if ((v == 0 && w == 2) || (v == 1 && w == 3)) return 1;
    return 2;
}

int perm_sign(const std::array<int, 4>& p) {
    int s = 1;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (p[i] > p[j]) s = -s;
    return s;
}

bool is_permutation(const std::array<int, 4>& p) {
    std::array<bool, 4> seen{};
    for (int v : p) {
        if (v < 0 || v > 3 || seen[v]) return false;
        seen[v] = true;
    }
    return true;
}

std::array<int, 4> inverse_perm(const std::array<int, 4>& p) {
    std::array<int, 4> q{};
    for (int i = 0; i < 4; ++i) q[p[i]] = i;
    return q;
}

}  // namespace

// ---------------------------------------------------------------------------
// IdealTriangulation

IdealTriangulation IdealTriangulation::load(const std::string& name_or_path) {
    const bool is_census =
        name_or_path == "figure8" || name_or_path == "whitehead";
    std::string text;
    if (is_census) {
        if (const char* dir = std::getenv("CONE_MODULI_CENSUS_DIR")) {
            std::ifstream in(std::string(dir) + "/" + name_or_path + ".json");
            if (in) {
                std::ostringstream ss;
                ss << in.rdbuf();
                text = ss.str();
            }
        }
        if (text.empty()) {
            text = detail::census_json(name_or_path);
        }
    } else {
        std::ifstream in(name_or_path);
        if (!in) {
            throw FormatError("cannot open triangulation file: " +
                              name_or_path);
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    return from_json_text(text);
}

IdealTriangulation IdealTriangulation::from_json_text(
    const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("invalid JSON: ") + e.what());
    }
    IdealTriangulation tri;
    try {
        tri.name_ = j.at("name").get<std::string>();
        tri.n_tet_ = j.at("n_tet").get<int>();
        if (tri.n_tet_ < 1) throw FormatError("n_tet must be >= 1");
        tri.slots_.assign(4 * tri.n_tet_, FaceSlot{});

        for (const auto& g : j.at("gluings")) {
            if (!g.is_array() || g.size() != 5) {
                throw FormatError("gluing entry must be "
                                  "[tet, face, to_tet, to_face, perm]");
            }
            int t = g[0].get<int>(), f = g[1].get<int>();
            int t2 = g[2].get<int>(), f2 = g[3].get<int>();
            std::array<int, 4> p{};
            for (int i = 0; i < 4; ++i) p[i] = g[4][i].get<int>();
            auto in_range = [&](int tt, int ff) {
                return tt >= 0 && tt < tri.n_tet_ && ff >= 0 && ff < 4;
            };
            if (!in_range(t, f) || !in_range(t2, f2) || !is_permutation(p)) {
                throw FormatError("gluing entry out of range");
            }
            if (p[f] != f2) {
                throw CombinatoricsError("gluing perm does not map face to "
                                         "target face");
            }
            if (t == t2 && f == f2) {
                throw CombinatoricsError("face glued to itself");
            }
            auto& slot = tri.slots_[4 * t + f];
            auto& back = tri.slots_[4 * t2 + f2];
            if (slot.to_tet >= 0 || back.to_tet >= 0) {
                throw CombinatoricsError("face glued twice");
            }
            slot = FaceSlot{t2, f2, p};
            back = FaceSlot{t, f, inverse_perm(p)};
        }

        for (const auto& cls : j.at("edges")) {
            std::vector<EdgeCorner> corners;
            for (const auto& c : cls) {
                corners.push_back(EdgeCorner{c[0].get<int>(),
                                             c[1].get<int>()});
            }
            tri.edge_classes_.push_back(std::move(corners));
        }

        for (const auto& c : j.at("cusps")) {
            Cusp cusp;
            cusp.meridian.coeffs = c.at("meridian").get<std::vector<int>>();
            cusp.longitude.coeffs = c.at("longitude").get<std::vector<int>>();
            cusp.meridian.pi_i_coeff = c.at("pi_i_coeff_m").get<int>();
            cusp.longitude.pi_i_coeff = c.at("pi_i_coeff_l").get<int>();
            tri.cusps_.push_back(std::move(cusp));
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("schema violation: ") + e.what());
    }
    tri.validate_and_index();
    return tri;
}

std::vector<std::vector<EdgeCorner>> IdealTriangulation::walk_edge_orbits()
    const {
    std::set<std::pair<int, std::pair<int, int>>> seen;
    std::vector<std::vector<EdgeCorner>> classes;
    for (int t0 = 0; t0 < n_tet_; ++t0) {
        for (int v0 = 0; v0 < 4; ++v0) {
            for (int w0 = v0 + 1; w0 < 4; ++w0) {
                if (seen.count({t0, {v0, w0}})) continue;
                std::vector<EdgeCorner> corners;
                // enter-face: one of the two faces containing the edge
                int enter0 = -1;
                for (int x = 0; x < 4; ++x) {
                    if (x != v0 && x != w0) { enter0 = x; break; }
                }
                int t = t0, v = v0, w = w0, enter = enter0;
                std::size_t guard = 0;
                do {
                    int lo = std::min(v, w), hi = std::max(v, w);
                    seen.insert({t, {lo, hi}});
                    corners.push_back(EdgeCorner{t, pair_of_edge(v, w)});
                    int exit_face = -1;
                    for (int x = 0; x < 4; ++x) {
                        if (x != v && x != w && x != enter) {
                            exit_face = x;
                            break;
                        }
                    }
                    const FaceSlot& slot = slots_[4 * t + exit_face];
                    int nv = slot.perm[v], nw = slot.perm[w];
                    int nenter = slot.perm[exit_face];
                    t = slot.to_tet;
                    v = nv;
                    w = nw;
                    enter = nenter;
                    if (++guard > static_cast<std::size_t>(64 * n_tet_)) {
                        throw CombinatoricsError(
                            "edge orbit fails to close");
                    }
                } while (!(t == t0 && std::min(v, w) == v0 &&
                           std::max(v, w) == w0 && enter == enter0));
                classes.push_back(std::move(corners));
            }
        }
    }
    return classes;
}

int IdealTriangulation::count_vertex_links() const {
    std::vector<int> comp(4 * n_tet_, -1);
    int n_comp = 0;
    for (int start = 0; start < 4 * n_tet_; ++start) {
        if (comp[start] >= 0) continue;
        std::vector<int> stack{start};
        comp[start] = n_comp;
        while (!stack.empty()) {
            int cur = stack.back();
            stack.pop_back();
            int t = cur / 4, v = cur % 4;
            for (int f = 0; f < 4; ++f) {
                if (f == v) continue;
                const FaceSlot& slot = slots_[4 * t + f];
                int nxt = 4 * slot.to_tet + slot.perm[v];
                if (comp[nxt] < 0) {
                    comp[nxt] = n_comp;
                    stack.push_back(nxt);
                }
            }
        }
        ++n_comp;
    }
    return n_comp;
}

void IdealTriangulation::validate_and_index() {
    for (int t = 0; t < n_tet_; ++t) {
        for (int f = 0; f < 4; ++f) {
            const FaceSlot& slot = slots_[4 * t + f];
            if (slot.to_tet < 0) {
                throw CombinatoricsError("unglued face");
            }
            if (perm_sign(slot.perm) != -1) {
                throw CombinatoricsError(
                    "gluing permutation is not orientation-compatible");
            }
            const FaceSlot& back = slots_[4 * slot.to_tet + slot.to_face];
            if (back.to_tet != t || back.to_face != f ||
                back.perm != inverse_perm(slot.perm)) {
                throw CombinatoricsError("gluings are not involutive");
            }
        }
    }

    auto canonical = [](std::vector<std::vector<EdgeCorner>> classes) {
        for (auto& cls : classes) std::sort(cls.begin(), cls.end());
        std::sort(classes.begin(), classes.end());
        return classes;
    };
    auto walked = walk_edge_orbits();
    std::size_t total = 0;
    for (const auto& cls : walked) total += cls.size();
    if (total != static_cast<std::size_t>(6 * n_tet_)) {
        throw CombinatoricsError("edge-count mismatch (expected 6 * n_tet "
                                 "corners)");
    }
    if (canonical(edge_classes_) != canonical(walked)) {
        throw CombinatoricsError(
            "edge classes in file do not match the face gluings");
    }

    if (cusps_.empty()) {
        throw CombinatoricsError("need at least one cusp");
    }
    int n_links = count_vertex_links();
    if (n_links != static_cast<int>(cusps_.size())) {
        throw CombinatoricsError("cusp count does not match vertex links");
    }
    for (const auto& cusp : cusps_) {
        if (cusp.meridian.coeffs.size() !=
                static_cast<std::size_t>(3 * n_tet_) ||
            cusp.longitude.coeffs.size() !=
                static_cast<std::size_t>(3 * n_tet_)) {
            throw FormatError("peripheral coefficient vectors must have "
                              "length 3 * n_tet");
        }
        bool nonzero = false;
        for (int m : cusp.meridian.coeffs) nonzero |= (m != 0);
        if (!nonzero) throw CombinatoricsError("meridian vector is zero");
    }
}

// ---------------------------------------------------------------------------
// Shapes

ShapeAssignment ShapeAssignment::regular(int n_tet) {
    ShapeAssignment s;
    s.z.assign(n_tet, Complex(0.5, std::sqrt(3.0) / 2.0));
    s.log_branch.assign(n_tet, {0, 0, 0});
    return s;
}

bool ShapeAssignment::positively_oriented(double floor) const {
    for (const Complex& zz : z) {
        if (zz.imag() <= floor) return false;
    }
    return true;
}

double ShapeAssignment::min_im() const {
    double m = std::numeric_limits<double>::infinity();
    for (const Complex& zz : z) m = std::min(m, zz.imag());
    return m;
}

std::array<Complex, 3> log_params(Complex z,
                                  const std::array<int, 3>& branch) {
    if (std::abs(z) < 1e-14 || std::abs(z - 1.0) < 1e-14) {
        throw DegenerateShape("shape parameter at 0 or 1");
    }
    const Complex two_pi_i{0.0, 2.0 * kPi};
    return {std::log(z) + double(branch[0]) * two_pi_i,
            -std::log(1.0 - z) + double(branch[1]) * two_pi_i,
            std::log((z - 1.0) / z) + double(branch[2]) * two_pi_i};
}

std::array<Complex, 3> d_log_params(Complex z) {
    if (std::abs(z) < 1e-14 || std::abs(z - 1.0) < 1e-14) {
        throw DegenerateShape("shape parameter at 0 or 1");
    }
    return {1.0 / z, 1.0 / (1.0 - z), 1.0 / (z * (z - 1.0))};
}

// ---------------------------------------------------------------------------
// GluingSystem

GluingSystem::GluingSystem(int n_tet, std::vector<std::vector<int>> edge_rows,
                           std::vector<std::vector<int>> meridian_rows,
                           std::vector<int> meridian_pi,
                           std::vector<std::vector<int>> longitude_rows,
                           std::vector<int> longitude_pi)
    : n_tet_(n_tet),
      edge_rows_(std::move(edge_rows)),
      meridian_rows_(std::move(meridian_rows)),
      meridian_pi_(std::move(meridian_pi)),
      longitude_rows_(std::move(longitude_rows)),
      longitude_pi_(std::move(longitude_pi)) {}

GluingSystem::GluingSystem(const IdealTriangulation& tri)
    : n_tet_(tri.n_tet()) {
    for (const auto& cls : tri.edge_classes()) {
        std::vector<int> row(3 * n_tet_, 0);
        for (const EdgeCorner& c : cls) row[3 * c.tet + c.pair] += 1;
        edge_rows_.push_back(std::move(row));
    }
    for (const Cusp& cusp : tri.cusps()) {
        meridian_rows_.push_back(cusp.meridian.coeffs);
        meridian_pi_.push_back(cusp.meridian.pi_i_coeff);
        longitude_rows_.push_back(cusp.longitude.coeffs);
        longitude_pi_.push_back(cusp.longitude.pi_i_coeff);
    }
}

Complex GluingSystem::row_value(const std::vector<int>& row, int pi_coeff,
                                const ShapeAssignment& s) const {
    Complex acc{0.0, 0.0};
    for (int t = 0; t < n_tet_; ++t) {
        const int* r = row.data() + 3 * t;
        if (r[0] == 0 && r[1] == 0 && r[2] == 0) continue;
        auto L = log_params(s.z[t], s.log_branch[t]);
        acc += double(r[0]) * L[0] + double(r[1]) * L[1] + double(r[2]) * L[2];
    }
    return acc + Complex(0.0, kPi) * double(pi_coeff);
}

Eigen::VectorXcd GluingSystem::edge_residuals(const ShapeAssignment& s) const {
    Eigen::VectorXcd out(n_edges());
    for (int e = 0; e < n_edges(); ++e) {
        out(e) = row_value(edge_rows_[e], 0, s) - kTwoPiI;
    }
    return out;
}

Complex GluingSystem::meridian_log_holonomy(const ShapeAssignment& s,
                                            int cusp) const {
    return row_value(meridian_rows_[cusp], meridian_pi_[cusp], s);
}

Complex GluingSystem::longitude_log_holonomy(const ShapeAssignment& s,
                                             int cusp) const {
    return row_value(longitude_rows_[cusp], longitude_pi_[cusp], s);
}

Eigen::VectorXcd GluingSystem::full_residuals(
    const ShapeAssignment& s, std::span<const Complex> u_targets) const {
    Eigen::VectorXcd out(n_edges() + n_cusps());
    out.head(n_edges()) = edge_residuals(s);
    for (int c = 0; c < n_cusps(); ++c) {
        out(n_edges() + c) = meridian_log_holonomy(s, c) - u_targets[c];
    }
    return out;
}

namespace {

void fill_jacobian_row(Eigen::MatrixXcd& J, int row_idx,
                       const std::vector<int>& row,
                       const ShapeAssignment& s) {
    int n = static_cast<int>(s.z.size());
    for (int t = 0; t < n; ++t) {
        const int* r = row.data() + 3 * t;
        if (r[0] == 0 && r[1] == 0 && r[2] == 0) {
            J(row_idx, t) = Complex(0, 0);
            continue;
        }
        auto d = d_log_params(s.z[t]);
        J(row_idx, t) =
            double(r[0]) * d[0] + double(r[1]) * d[1] + double(r[2]) * d[2];
    }
}

}  // namespace

Eigen::MatrixXcd GluingSystem::edge_jacobian(const ShapeAssignment& s) const {
    Eigen::MatrixXcd J(n_edges(), n_tet_);
    for (int e = 0; e < n_edges(); ++e) {
        fill_jacobian_row(J, e, edge_rows_[e], s);
    }
    return J;
}

Eigen::MatrixXcd GluingSystem::full_jacobian(const ShapeAssignment& s) const {
    Eigen::MatrixXcd J(n_edges() + n_cusps(), n_tet_);
    for (int e = 0; e < n_edges(); ++e) {
        fill_jacobian_row(J, e, edge_rows_[e], s);
    }
    for (int c = 0; c < n_cusps(); ++c) {
        fill_jacobian_row(J, n_edges() + c, meridian_rows_[c], s);
    }
    return J;
}

GluingSystem assemble(const IdealTriangulation& tri) {
    return GluingSystem(tri);
}

Complex meridian_log_holonomy(const IdealTriangulation& tri,
                              const ShapeAssignment& s, int cusp) {
    return GluingSystem(tri).meridian_log_holonomy(s, cusp);
}

CorankReport corank_report(const Eigen::MatrixXcd& m, double rel_tol) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    CorankReport out;
    out.singular_values = svd.singularValues();
    const auto& sv = out.singular_values;
    double cutoff = rel_tol * sv(0);
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff) ++rank;
    }
    out.corank = static_cast<int>(sv.size()) - rank;
    if (rank > 0 && rank < sv.size()) {
        out.gap_ratio = sv(rank - 1) / std::max(sv(rank), 1e-300);
    } else {
        out.gap_ratio = std::numeric_limits<double>::infinity();
    }
    return out;
}

bool euclidean_cone_surface_check(int genus, std::span<const double> angles,
                                  double tol) {
    for (double a : angles) {
        if (!(a > 0.0) || a > kPi + 1e-15) {
            throw AngleOutOfRange("cone angles must lie in (0, pi]");
        }
    }
    double defect = 0.0;
    for (double a : angles) defect += 2.0 * kPi - a;
    double target = 2.0 * kPi * (2.0 - 2.0 * genus);
    return std::abs(defect - target) <= tol;
}

}  // namespace cone_moduli::triangulation
