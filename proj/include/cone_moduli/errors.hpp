#pragma once

#include <stdexcept>
#include <string>

namespace cone_moduli {

/// Malformed input file or schema violation.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Structurally invalid triangulation (face glued twice, bad edge data, ...).
class CombinatoricsError : public std::runtime_error {
public:
    explicit CombinatoricsError(const std::string& msg)
        : std::runtime_error(msg) {}
};

/// A shape parameter hit {0, 1} where the log-parameters blow up.
class DegenerateShape : public std::runtime_error {
public:
    explicit DegenerateShape(const std::string& msg)
        : std::runtime_error(msg) {}
};

/// Fixed-point query on +/-I, which fixes everything.
class IdentityInput : public std::runtime_error {
public:
    explicit IdentityInput(const std::string& msg)
        : std::runtime_error(msg) {}
};

/// Newton stalled; carries the best residual reached.
class NoConvergence : public std::runtime_error {
public:
    NoConvergence(const std::string& msg, double best_residual)
        : std::runtime_error(msg), best_residual(best_residual) {}
    double best_residual;
};

/// Solver converged but the solution is not positively oriented.
class NonGeometric : public std::runtime_error {
public:
    explicit NonGeometric(const std::string& msg)
        : std::runtime_error(msg) {}
};

/// Cone angle outside the range a checker accepts.
class AngleOutOfRange : public std::runtime_error {
public:
    explicit AngleOutOfRange(const std::string& msg)
        : std::runtime_error(msg) {}
};

/// Cone-smoothing interpolant cannot be concave for these parameters.
class InfeasibleSmoothing : public std::runtime_error {
public:
    InfeasibleSmoothing(const std::string& msg, double min_feasible_eps)
        : std::runtime_error(msg), min_feasible_eps(min_feasible_eps) {}
    double min_feasible_eps;
};

/// Two-sided curvature evaluation requested at a profile knot.
class KnotPoint : public std::runtime_error {
public:
    explicit KnotPoint(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cone_moduli
