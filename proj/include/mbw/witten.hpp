#pragma once

#include <Eigen/Sparse>
#include <optional>
#include <string>
#include <vector>

#include "mbw/filtration.hpp"
#include "mbw/landscape.hpp"

namespace mbw {

enum class Scheme { ConjugatedDEC, DirectStencil };
std::string_view to_string(Scheme s);

using SparseMatrix = Eigen::SparseMatrix<double>;

struct WittenOperator {
    SparseMatrix matrix;
    SparseMatrix d_lower;  // D_{p-1}: (p-1)-cochains -> p-cochains (empty for p = 0 or stencil)
    SparseMatrix d_upper;  // D_p: p-cochains -> (p+1)-cochains (empty for top degree or stencil)
    int degree = 0;
    double h = 0.0;
    Scheme scheme = Scheme::ConjugatedDEC;
    WindowSpec window;           // full window means no boundary
    std::vector<int> unknowns;   // cell id (DEC) or vertex id (stencil) per row
    double norm = 0.0;           // max absolute row sum
    double asymmetry = 0.0;      // before symmetrization, relative to norm
    std::optional<double> kernel_residual;  // stencil: |L g| / |g| for g = exp(-(f - min f)/h)

    bool factored() const { return scheme == Scheme::ConjugatedDEC; }
};

/// Conjugated discrete coboundaries on a cubical complex; active cells are the
/// unknowns, quotiented cells carry the Dirichlet side of a window and dropped
/// cells are absent (natural condition on the upper side).
WittenOperator assemble_conjugated(const FilteredComplex& fc, const MorseFunction& f, int p, double h);

/// -h^2 Lap + |grad f|^2 - h Lap f with second-order stencils (0-forms). A
/// window removes nodes at or below a and closes nodes above b with a Robin
/// ghost row.
WittenOperator assemble_direct_0form(const FilteredComplex& fc, const MorseFunction& f, double h);

enum class SolverKind { DenseTridiagonal, DenseJacobi, ShiftInvertIteration };
std::string_view to_string(SolverKind s);

struct SpectrumOptions {
    std::size_t dense_limit = 1024;
    std::size_t jacobi_limit = 16;
    int max_iterations = 400;
    double residual_tol = 1e-12;  // relative to the matrix norm
    bool throw_on_stall = true;
    bool count_window = true;     // grow k until the last eigenvalue reaches h^{3/2}
};

struct SpectrumResult {
    std::vector<double> eigenvalues;  // ascending
    std::vector<double> residuals;
    SolverKind solver = SolverKind::DenseTridiagonal;
    int count_below_h32 = 0;
    int iterations = 0;
    bool stalled = false;
    double norm = 0.0;
};

SpectrumResult low_spectrum(const WittenOperator& op, int k, const SpectrumOptions& opt = {});

/// Smallest certifiable eigenvalue magnitude for a matrix of this norm.
double eig_floor(double norm);

struct SweepSpec {
    const MorseFunction* function = nullptr;
    int resolution = 0;
    Scheme scheme = Scheme::ConjugatedDEC;
    WindowSpec window;
    int k = 4;
    SpectrumOptions solver;
};

struct SweepRow {
    double h = 0.0;
    int p = 0;
    std::vector<double> eigenvalues;
    int count_below_h32 = 0;
    double residual_max = 0.0;
    Scheme scheme = Scheme::ConjugatedDEC;
    double norm = 0.0;
};

/// One row per h, in input order; each (h, p) solve runs as its own task.
std::vector<SweepRow> sweep_h(const SweepSpec& spec, const std::vector<double>& hs, int p);

struct FitResult {
    double slope = 0.0;
    double log_prefactor = 0.0;
    double r2 = 0.0;
    std::vector<std::pair<double, double>> points_used;  // (h, lambda)
};

/// Least squares of log(lambda/h) against 1/h. floor is an absolute lower bound
/// every lambda must exceed.
FitResult fit_arrhenius(const std::vector<std::pair<double, double>>& points, double floor = 0.0);

/// Selects eigenvalue `index` (0-based) from each row; the floor is taken per row.
FitResult fit_arrhenius(const std::vector<SweepRow>& rows, std::size_t index);

/// CSV with columns h, p, lambda_1..lambda_k, count_below_h32, residual_max, scheme.
std::string format_sweep_csv(const std::vector<SweepRow>& rows);

/// Coordinate text: `row col value` per stored entry.
std::string format_coo(const SparseMatrix& m);

}  // namespace mbw
