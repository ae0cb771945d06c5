#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mbw {

/// Coordinates in the domain; the second entry is unused in one dimension.
using Point = std::array<double, 2>;

enum class DomainKind { Circle, FlatTorus, Interval, AbstractComplex };

/// Flat compact domains. An Interval is a level window (a, b) of a function
/// living on a base circle of length lx.
struct Domain {
    DomainKind kind = DomainKind::Circle;
    double lx = 0.0;
    double ly = 0.0;
    double window_a = -std::numeric_limits<double>::infinity();
    double window_b = std::numeric_limits<double>::infinity();

    static Domain circle(double length);
    static Domain torus(double lx, double ly);
    static Domain interval(double base_length, double a, double b);
    static Domain abstract_complex();

    int dim() const;
    double diameter() const;
    bool has_window() const;
};

/// Value, gradient and Hessian of f at one point.
struct Jet {
    double value = 0.0;
    std::array<double, 2> grad{};
    std::array<std::array<double, 2>, 2> hess{};
};

class MorseFunction {
public:
    using Evaluator = std::function<Jet(const Point&)>;

    MorseFunction(std::string name, Domain domain, Evaluator evaluator, bool closed_form = true);

    Jet jet(const Point& x) const { return evaluator_(x); }
    double value(const Point& x) const { return evaluator_(x).value; }

    const Domain& domain() const { return domain_; }
    const std::string& name() const { return name_; }
    bool closed_form() const { return closed_form_; }

    /// -f with the same domain; every jet component is negated exactly.
    MorseFunction negated() const;

    /// Restrict to a level window (a, b) on the same periodic base.
    MorseFunction windowed(double a, double b) const;

private:
    std::string name_;
    Domain domain_;
    Evaluator evaluator_;
    bool closed_form_;
};

/// amplitude * cos|sin(2*pi*(kx*x/lx + ky*y/ly)).
struct TrigTerm {
    enum class Kind { Cos, Sin };
    Kind kind = Kind::Cos;
    int kx = 0;
    int ky = 0;
    double amplitude = 0.0;
};

MorseFunction make_trig_polynomial(std::string name, Domain domain, std::vector<TrigTerm> terms);

/// Periodic cubic Hermite interpolant of grid samples (row-major, x fastest).
/// Node derivatives come from fourth-order centered differences.
MorseFunction make_sampled(std::string name, Domain domain, int nx, int ny, std::vector<double> samples);

/// Plain text, one value per grid node, row-major.
std::vector<double> read_samples_file(const std::string& path, std::size_t expected_count);

enum class PointClass { Unclassified, Homological, Lower, Upper };

std::string_view to_string(PointClass c);

struct CriticalPoint {
    int id = 0;
    Point position{};
    double value = 0.0;
    int morse_index = 0;
    std::vector<double> hessian_eigs;  // ascending
    PointClass cls = PointClass::Unclassified;
    std::optional<int> partner;
};

struct FindOptions {
    double newton_tol = 1e-12;
    int max_iterations = 100;
};

struct CriticalSearch {
    std::vector<CriticalPoint> points;  // sorted by value, ids in that order
    std::vector<std::string> warnings;
};

CriticalSearch find_critical_points(const MorseFunction& f, int seed_resolution, const FindOptions& options = {});

struct SymmetricEigen {
    std::vector<double> values;   // ascending
    std::vector<double> vectors;  // column-major n x n, column k pairs with values[k]
};

/// Cyclic Jacobi rotations on a dense symmetric matrix (row-major n x n).
SymmetricEigen jacobi_eigen(std::span<const double> a, std::size_t n, double symmetry_tol = 1e-12);

/// Sorted eigenvalues of a small symmetric matrix; throws NotSymmetric.
std::vector<double> hessian_spectrum(std::span<const double> h, std::size_t d, double symmetry_tol = 1e-12);

struct Violation {
    std::vector<int> point_ids;
    std::string description;
};

struct HypothesisReport {
    bool excellent = true;
    bool distinct_values = true;
    bool distinct_gaps = true;
    std::vector<Violation> violations;
};

/// Tolerance used for "distinct" comparisons: 1e-9 times the value range.
double value_tolerance(std::span<const CriticalPoint> points);

/// Excellence (nondegenerate, distinct values) and, when an upper -> lower
/// pairing is supplied, pairwise-distinct gaps. Never throws.
HypothesisReport check_hypotheses(std::span<const CriticalPoint> points,
                                  const std::map<int, int>* pairing = nullptr);

}  // namespace mbw
