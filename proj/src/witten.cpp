#include "mbw/witten.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <random>
#include <sstream>

#include "mbw/error.hpp"

namespace mbw {

std::string_view to_string(Scheme s)
{
    return s == Scheme::ConjugatedDEC ? "dec" : "stencil";
}

std::string_view to_string(SolverKind s)
{
    switch (s) {
    case SolverKind::DenseTridiagonal: return "dense-tridiagonal";
    case SolverKind::DenseJacobi: return "dense-jacobi";
    case SolverKind::ShiftInvertIteration: return "shift-invert";
    }
    return "dense-tridiagonal";
}

double eig_floor(double norm)
{
    return 1e-12 * norm;
}

namespace {

using Triplet = Eigen::Triplet<double>;
using DenseMatrix = Eigen::MatrixXd;

double row_sum_norm(const SparseMatrix& m)
{
    Eigen::VectorXd rows = Eigen::VectorXd::Zero(m.rows());
    for (int c = 0; c < m.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(m, c); it; ++it)
            rows[it.row()] += std::fabs(it.value());
    return m.rows() ? rows.maxCoeff() : 0.0;
}

// Records the relative asymmetry, refuses large ones, then symmetrizes exactly.
void finish_operator(WittenOperator& op, SparseMatrix a)
{
    op.norm = row_sum_norm(a);
    SparseMatrix at = a.transpose();
    SparseMatrix diff = a - at;
    double asym = 0.0;
    for (int c = 0; c < diff.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(diff, c); it; ++it)
            asym = std::max(asym, std::fabs(it.value()));
    op.asymmetry = op.norm > 0.0 ? asym / op.norm : 0.0;
    if (op.asymmetry > 1e-13)
        throw Error(ErrorCode::NotSymmetric, "assembled operator is not symmetric");
    op.matrix = 0.5 * (a + at);
    op.matrix.makeCompressed();
}

void require_grid(const FilteredComplex& fc)
{
    if (!fc.grid)
        throw Error(ErrorCode::UsageError, "Witten operators need a cubical grid complex");
    if (!fc.grid->periodic_x || (fc.grid->dim() == 2 && !fc.grid->periodic_y))
        throw Error(ErrorCode::UsageError, "Witten operators need a periodic grid");
}

}  // namespace

WittenOperator assemble_conjugated(const FilteredComplex& fc, const MorseFunction& f, int p, double h)
{
    require_grid(fc);
    const CubicalGrid& g = *fc.grid;
    const int d = g.dim();
    if (p < 0 || p > d)
        throw Error(ErrorCode::UsageError, "degree out of range");
    if (!(h > 0.0) || !std::isfinite(h))
        throw Error(ErrorCode::UsageError, "h must be positive");

    std::vector<int> index(fc.cells.size(), -1);
    std::vector<int> counts(static_cast<std::size_t>(d + 1), 0);
    std::vector<double> fb(fc.cells.size(), 0.0);
    WittenOperator op;
    op.degree = p;
    op.h = h;
    op.scheme = Scheme::ConjugatedDEC;
    op.window = fc.window;
    for (const auto& c : fc.cells) {
        if (fc.marks[static_cast<std::size_t>(c.id)] != CellMark::Active || std::abs(c.dim - p) > 1)
            continue;
        index[static_cast<std::size_t>(c.id)] = counts[static_cast<std::size_t>(c.dim)]++;
        fb[static_cast<std::size_t>(c.id)] = f.value(c.barycenter);
        if (c.dim == p)
            op.unknowns.push_back(c.id);
    }

    // D_q maps active q-cells to active (q+1)-cells
    auto coboundary = [&](int q) {
        SparseMatrix m(counts[static_cast<std::size_t>(q + 1)], counts[static_cast<std::size_t>(q)]);
        std::vector<Triplet> t;
        for (const auto& tau : fc.cells) {
            if (tau.dim != q + 1 || index[static_cast<std::size_t>(tau.id)] < 0)
                continue;
            for (const auto& face : tau.boundary) {
                const int col = index[static_cast<std::size_t>(face.cell)];
                if (col < 0)
                    continue;
                const Cell& sigma = fc.cells[static_cast<std::size_t>(face.cell)];
                const double spacing = (tau.slot.spans_x && !sigma.slot.spans_x) ? g.dx : g.dy;
                const double df = fb[static_cast<std::size_t>(face.cell)] - fb[static_cast<std::size_t>(tau.id)];
                if (2.0 * std::fabs(df) / h > 5.0)
                    throw Error(ErrorCode::WeightOverflow, "grid too coarse for h: |grad f| dx / h exceeds 5");
                t.emplace_back(index[static_cast<std::size_t>(tau.id)], col, face.sign * (h / spacing) * std::exp(df / h));
            }
        }
        m.setFromTriplets(t.begin(), t.end());
        m.makeCompressed();
        return m;
    };

    const int n = counts[static_cast<std::size_t>(p)];
    SparseMatrix a(n, n);
    if (p > 0) {
        op.d_lower = coboundary(p - 1);
        a += SparseMatrix(op.d_lower * SparseMatrix(op.d_lower.transpose()));
    }
    if (p < d) {
        op.d_upper = coboundary(p);
        a += SparseMatrix(SparseMatrix(op.d_upper.transpose()) * op.d_upper);
    }
    finish_operator(op, a);
    return op;
}

WittenOperator assemble_direct_0form(const FilteredComplex& fc, const MorseFunction& f, double h)
{
    require_grid(fc);
    if (!(h > 0.0) || !std::isfinite(h))
        throw Error(ErrorCode::UsageError, "h must be positive");
    const CubicalGrid& g = *fc.grid;
    const int d = g.dim();
    const int nv = g.nx * g.ny;
    WittenOperator op;
    op.degree = 0;
    op.h = h;
    op.scheme = Scheme::DirectStencil;
    op.window = fc.window;

    std::vector<int> index(static_cast<std::size_t>(nv), -1);
    for (int v = 0; v < nv; ++v)
        if (fc.marks[static_cast<std::size_t>(v)] == CellMark::Active) {
            index[static_cast<std::size_t>(v)] = static_cast<int>(op.unknowns.size());
            op.unknowns.push_back(v);
        }
    std::vector<Jet> jets(static_cast<std::size_t>(nv));
    for (int v = 0; v < nv; ++v)
        jets[static_cast<std::size_t>(v)] = f.jet(fc.cells[static_cast<std::size_t>(v)].barycenter);

    std::vector<Triplet> t;
    for (int v : op.unknowns) {
        const int i = v % g.nx, j = v / g.nx;
        const Jet& jv = jets[static_cast<std::size_t>(v)];
        double diag = jv.grad[0] * jv.grad[0] + jv.grad[1] * jv.grad[1] - h * (jv.hess[0][0] + jv.hess[1][1]);
        struct Nb {
            int vertex;
            double spacing;
        };
        std::vector<Nb> nbs{{j * g.nx + (i + 1) % g.nx, g.dx}, {j * g.nx + (i + g.nx - 1) % g.nx, g.dx}};
        if (d == 2) {
            nbs.push_back({((j + 1) % g.ny) * g.nx + i, g.dy});
            nbs.push_back({((j + g.ny - 1) % g.ny) * g.nx + i, g.dy});
        }
        const int row = index[static_cast<std::size_t>(v)];
        for (const auto& nb : nbs) {
            const double c = h * h / (nb.spacing * nb.spacing);
            diag += c;
            const CellMark m = fc.marks[static_cast<std::size_t>(nb.vertex)];
            if (m == CellMark::Active) {
                t.emplace_back(row, index[static_cast<std::size_t>(nb.vertex)], -c);
            } else if (m == CellMark::Dropped) {
                // ghost node from h du/dn + (df/dn) u = 0 at the midpoint
                const double dfdn =
                    (fc.vertex_values[static_cast<std::size_t>(nb.vertex)] - fc.vertex_values[static_cast<std::size_t>(v)]) /
                    nb.spacing;
                const double r = (h / nb.spacing - 0.5 * dfdn) / (h / nb.spacing + 0.5 * dfdn);
                diag -= c * r;
            }
        }
        t.emplace_back(row, row, diag);
    }
    SparseMatrix a(static_cast<int>(op.unknowns.size()), static_cast<int>(op.unknowns.size()));
    a.setFromTriplets(t.begin(), t.end());
    finish_operator(op, a);

    if (fc.window.is_full()) {
        const double fmin = *std::min_element(fc.vertex_values.begin(), fc.vertex_values.end());
        Eigen::VectorXd gs(nv);
        for (int v = 0; v < nv; ++v)
            gs[v] = std::exp(-(fc.vertex_values[static_cast<std::size_t>(v)] - fmin) / h);
        op.kernel_residual = (op.matrix * gs).norm() / gs.norm();
    }
    return op;
}

namespace {

struct Partial {
    Eigen::VectorXd values;  // ascending, at least m entries
    DenseMatrix vectors;     // n x m
    SolverKind solver = SolverKind::DenseTridiagonal;
    int iterations = 0;
    bool stalled = false;
    std::vector<double> all_values;  // full spectrum when dense
};

Partial dense_solve(const WittenOperator& op, int m, const SpectrumOptions& opt)
{
    const auto n = static_cast<std::size_t>(op.matrix.rows());
    DenseMatrix a(op.matrix);
    Partial out;
    if (n <= opt.jacobi_limit) {
        std::vector<double> rm(n * n);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c)
                rm[r * n + c] = a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        const SymmetricEigen se = jacobi_eigen(rm, n, 1e-13);
        out.solver = SolverKind::DenseJacobi;
        out.values = Eigen::Map<const Eigen::VectorXd>(se.values.data(), static_cast<Eigen::Index>(n));
        out.vectors = Eigen::Map<const DenseMatrix>(se.vectors.data(), static_cast<Eigen::Index>(n),
                                                    static_cast<Eigen::Index>(n))
                          .leftCols(m);
    } else {
        Eigen::SelfAdjointEigenSolver<DenseMatrix> es(a);
        if (es.info() != Eigen::Success)
            throw Error(ErrorCode::NoConvergence, "dense symmetric eigensolver failed");
        out.solver = SolverKind::DenseTridiagonal;
        out.values = es.eigenvalues();
        out.vectors = es.eigenvectors().leftCols(m);
    }
    out.all_values.assign(out.values.data(), out.values.data() + out.values.size());
    return out;
}

DenseMatrix orthonormalize(const DenseMatrix& y)
{
    Eigen::HouseholderQR<DenseMatrix> qr(y);
    return qr.householderQ() * DenseMatrix::Identity(y.rows(), y.cols());
}

Partial shift_invert(const WittenOperator& op, int want, int m, const SpectrumOptions& opt)
{
    const Eigen::Index n = op.matrix.rows();
    const double sigma = -1e-6 * op.norm;
    SparseMatrix shifted = op.matrix;
    for (Eigen::Index i = 0; i < n; ++i)
        shifted.coeffRef(i, i) -= sigma;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted);
    if (ldlt.info() != Eigen::Success)
        throw Error(ErrorCode::NoConvergence, "sparse factorization of the shifted operator failed");

    std::mt19937_64 rng(0x5eedULL + static_cast<std::uint64_t>(n));
    std::normal_distribution<double> gauss;
    DenseMatrix x(n, m);
    for (Eigen::Index c = 0; c < m; ++c)
        for (Eigen::Index r = 0; r < n; ++r)
            x(r, c) = gauss(rng);
    x = orthonormalize(x);

    Partial out;
    out.solver = SolverKind::ShiftInvertIteration;
    out.stalled = true;
    int settled = 0;
    const double tol = opt.residual_tol * op.norm;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        const DenseMatrix q = orthonormalize(ldlt.solve(x));
        DenseMatrix aq = op.matrix * q;
        DenseMatrix hm = q.transpose() * aq;
        hm = 0.5 * (hm + hm.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<DenseMatrix> es(hm);
        x = q * es.eigenvectors();
        aq = aq * es.eigenvectors();
        out.values = es.eigenvalues();
        out.iterations = it;
        bool ok = true;
        for (int i = 0; i < want && ok; ++i)
            ok = (aq.col(i) - out.values[i] * x.col(i)).norm() <= tol;
        if (ok && ++settled > 2) {
            out.stalled = false;
            break;
        }
    }
    out.vectors = x;
    return out;
}

// Rayleigh-Ritz with the factored form |D_{p-1}^T q|^2 + |D_p q|^2, which keeps
// relative accuracy for eigenvalues far below eps * norm.
void refine(const WittenOperator& op, Partial& part)
{
    const DenseMatrix& q = part.vectors;
    DenseMatrix b = DenseMatrix::Zero(q.cols(), q.cols());
    if (op.d_lower.size() > 0) {
        const DenseMatrix t = SparseMatrix(op.d_lower.transpose()) * q;
        b += t.transpose() * t;
    }
    if (op.d_upper.size() > 0) {
        const DenseMatrix t = op.d_upper * q;
        b += t.transpose() * t;
    }
    b = 0.5 * (b + b.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(b);
    part.vectors = q * es.eigenvectors();
    for (Eigen::Index i = 0; i < q.cols(); ++i)
        part.values[i] = es.eigenvalues()[i];
}

}  // namespace

SpectrumResult low_spectrum(const WittenOperator& op, int k, const SpectrumOptions& opt)
{
    if (k < 1)
        throw Error(ErrorCode::UsageError, "k must be at least 1");
    SpectrumResult res;
    res.norm = op.norm;
    const int n = static_cast<int>(op.matrix.rows());
    if (n == 0)
        return res;
    const double window = std::pow(op.h, 1.5);
    int kk = std::min(k, n);
    Partial part;
    while (true) {
        const int m = std::min(n, kk + 6);
        if (static_cast<std::size_t>(n) <= opt.dense_limit)
            part = dense_solve(op, m, opt);
        else
            part = shift_invert(op, kk, m, opt);
        if (op.factored())
            refine(op, part);
        if (!opt.count_window || kk >= n || part.values[kk - 1] >= window || !part.all_values.empty())
            break;
        kk = std::min(n, 2 * kk);
    }
    if (part.stalled && opt.throw_on_stall)
        throw Error(ErrorCode::SolverStall, "shift-invert iteration did not reach the residual tolerance in " +
                                                std::to_string(part.iterations) + " iterations");

    res.solver = part.solver;
    res.iterations = part.iterations;
    res.stalled = part.stalled;
    const int m = static_cast<int>(part.vectors.cols());
    for (int i = 0; i < std::min(k, m); ++i) {
        res.eigenvalues.push_back(part.values[i]);
        const Eigen::VectorXd v = part.vectors.col(i);
        res.residuals.push_back((op.matrix * v - part.values[i] * v).norm());
    }
    // refined values replace the leading part of a dense spectrum
    std::vector<double> pool = part.all_values;
    for (int i = 0; i < m && i < static_cast<int>(pool.size()); ++i)
        pool[static_cast<std::size_t>(i)] = part.values[i];
    if (pool.empty())
        for (int i = 0; i < m; ++i)
            pool.push_back(part.values[i]);
    res.count_below_h32 = static_cast<int>(std::count_if(pool.begin(), pool.end(), [&](double v) { return v < window; }));
    return res;
}

std::vector<SweepRow> sweep_h(const SweepSpec& spec, const std::vector<double>& hs, int p)
{
    if (!spec.function)
        throw Error(ErrorCode::UsageError, "sweep needs a function");
    FilteredComplex fc = build_cubical_sampled(*spec.function, spec.resolution);
    if (!spec.window.is_full())
        fc = restrict_window(fc, spec.window);
    if (spec.scheme == Scheme::DirectStencil && p != 0)
        throw Error(ErrorCode::UsageError, "the direct stencil scheme handles 0-forms only");

    std::vector<std::future<SweepRow>> jobs;
    for (double h : hs)
        jobs.push_back(std::async(std::launch::async, [&fc, &spec, h, p] {
            const WittenOperator op = spec.scheme == Scheme::ConjugatedDEC
                                          ? assemble_conjugated(fc, *spec.function, p, h)
                                          : assemble_direct_0form(fc, *spec.function, h);
            const SpectrumResult sr = low_spectrum(op, spec.k, spec.solver);
            SweepRow row;
            row.h = h;
            row.p = p;
            row.eigenvalues = sr.eigenvalues;
            row.count_below_h32 = sr.count_below_h32;
            row.residual_max = sr.residuals.empty() ? 0.0 : *std::max_element(sr.residuals.begin(), sr.residuals.end());
            row.scheme = spec.scheme;
            row.norm = sr.norm;
            return row;
        }));
    std::vector<SweepRow> rows;
    for (auto& j : jobs)
        rows.push_back(j.get());
    return rows;
}

FitResult fit_arrhenius(const std::vector<std::pair<double, double>>& points, double floor)
{
    if (points.size() < 4)
        throw Error(ErrorCode::InsufficientData, "Arrhenius fit needs at least 4 points");
    for (const auto& [h, lambda] : points) {
        if (!(h > 0.0))
            throw Error(ErrorCode::InsufficientData, "fit needs positive h");
        if (!(lambda > floor) || !(lambda > 0.0))
            throw Error(ErrorCode::FloorContamination, "eigenvalue below the floor at h=" + std::to_string(h));
    }
    const double n = static_cast<double>(points.size());
    double sx = 0, sy = 0;
    for (const auto& [h, lambda] : points) {
        sx += 1.0 / h;
        sy += std::log(lambda / h);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& [h, lambda] : points) {
        const double dx = 1.0 / h - mx, dy = std::log(lambda / h) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0)
        throw Error(ErrorCode::InsufficientData, "fit needs distinct h values");
    FitResult r;
    r.slope = sxy / sxx;
    r.log_prefactor = my - r.slope * mx;
    double ss_res = 0;
    for (const auto& [h, lambda] : points) {
        const double e = std::log(lambda / h) - (r.log_prefactor + r.slope / h);
        ss_res += e * e;
    }
    r.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    r.points_used = points;
    return r;
}

FitResult fit_arrhenius(const std::vector<SweepRow>& rows, std::size_t index)
{
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : rows) {
        if (index >= row.eigenvalues.size())
            throw Error(ErrorCode::InsufficientData, "sweep row lacks the selected eigenvalue");
        const double lambda = row.eigenvalues[index];
        if (!(lambda > eig_floor(row.norm)))
            throw Error(ErrorCode::FloorContamination, "eigenvalue below the floor at h=" + std::to_string(row.h));
        pts.emplace_back(row.h, lambda);
    }
    return fit_arrhenius(pts, 0.0);
}

std::string format_sweep_csv(const std::vector<SweepRow>& rows)
{
    std::size_t k = 0;
    for (const auto& r : rows)
        k = std::max(k, r.eigenvalues.size());
    std::ostringstream out;
    out << "h,p";
    for (std::size_t i = 1; i <= k; ++i)
        out << ",lambda_" << i;
    out << ",count_below_h32,residual_max,scheme\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& r : rows) {
        out << num(r.h) << ',' << r.p;
        for (std::size_t i = 0; i < k; ++i)
            out << ',' << (i < r.eigenvalues.size() ? num(r.eigenvalues[i]) : std::string());
        out << ',' << r.count_below_h32 << ',' << num(r.residual_max) << ',' << to_string(r.scheme) << '\n';
    }
    return out.str();
}

std::string format_coo(const SparseMatrix& m)
{
    std::ostringstream out;
    out << "# " << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
    char buf[96];
    for (int c = 0; c < m.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(m, c); it; ++it) {
            std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", static_cast<long>(it.row()), static_cast<long>(it.col()),
                          it.value());
            out << buf;
        }
    return out.str();
}

}  // namespace mbw
