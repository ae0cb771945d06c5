#include "mbw/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>

#include "mbw/error.hpp"

namespace mbw {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap(double x, double period)
{
    double r = std::fmod(x, period);
    if (r < 0.0)
        r += period;
    if (r >= period)
        r = 0.0;
    return r;
}

double periodic_delta(double a, double b, double period)
{
    double d = std::fabs(a - b);
    d = std::fmod(d, period);
    return std::min(d, period - d);
}

}  // namespace

Domain Domain::circle(double length)
{
    if (!(length > 0.0))
        throw Error(ErrorCode::ConfigError, "circle length must be positive");
    Domain d;
    d.kind = DomainKind::Circle;
    d.lx = length;
    return d;
}

Domain Domain::torus(double lx, double ly)
{
    if (!(lx > 0.0) || !(ly > 0.0))
        throw Error(ErrorCode::ConfigError, "torus lengths must be positive");
    Domain d;
    d.kind = DomainKind::FlatTorus;
    d.lx = lx;
    d.ly = ly;
    return d;
}

Domain Domain::interval(double base_length, double a, double b)
{
    if (!(a < b))
        throw Error(ErrorCode::ConfigError, "interval window needs a < b");
    Domain d = circle(base_length);
    d.kind = DomainKind::Interval;
    d.window_a = a;
    d.window_b = b;
    return d;
}

Domain Domain::abstract_complex()
{
    Domain d;
    d.kind = DomainKind::AbstractComplex;
    return d;
}

int Domain::dim() const
{
    switch (kind) {
    case DomainKind::Circle:
    case DomainKind::Interval:
        return 1;
    case DomainKind::FlatTorus:
    case DomainKind::AbstractComplex:
        return 2;
    }
    return 1;
}

double Domain::diameter() const
{
    if (kind == DomainKind::FlatTorus)
        return 0.5 * std::hypot(lx, ly);
    return 0.5 * lx;
}

bool Domain::has_window() const
{
    return std::isfinite(window_a) || std::isfinite(window_b);
}

MorseFunction::MorseFunction(std::string name, Domain domain, Evaluator evaluator, bool closed_form)
    : name_(std::move(name)), domain_(domain), evaluator_(std::move(evaluator)), closed_form_(closed_form)
{
}

MorseFunction MorseFunction::negated() const
{
    auto inner = evaluator_;
    return MorseFunction(
        "-" + name_, domain_,
        [inner](const Point& x) {
            Jet j = inner(x);
            j.value = -j.value;
            for (auto& g : j.grad)
                g = -g;
            for (auto& row : j.hess)
                for (auto& h : row)
                    h = -h;
            return j;
        },
        closed_form_);
}

MorseFunction MorseFunction::windowed(double a, double b) const
{
    if (domain_.dim() != 1)
        throw Error(ErrorCode::BoundaryMismatch, "level windows as domains are one-dimensional");
    return MorseFunction(name_, Domain::interval(domain_.lx, a, b), evaluator_, closed_form_);
}

MorseFunction make_trig_polynomial(std::string name, Domain domain, std::vector<TrigTerm> terms)
{
    if (domain.kind == DomainKind::AbstractComplex)
        throw Error(ErrorCode::ConfigError, "trig polynomials need a circle or torus");
    const double wx = kTwoPi / domain.lx;
    const double wy = domain.dim() == 2 ? kTwoPi / domain.ly : 0.0;
    if (domain.dim() == 1)
        for (const auto& t : terms)
            if (t.ky != 0)
                throw Error(ErrorCode::ConfigError, "circle terms cannot depend on y");
    auto eval = [terms = std::move(terms), wx, wy](const Point& x) {
        Jet j;
        for (const auto& t : terms) {
            const double ax = t.kx * wx;
            const double ay = t.ky * wy;
            const double phase = ax * x[0] + ay * x[1];
            const double c = std::cos(phase);
            const double s = std::sin(phase);
            // u = trig(phase), u' and u'' with respect to phase
            double u, du, ddu;
            if (t.kind == TrigTerm::Kind::Cos) {
                u = c;
                du = -s;
                ddu = -c;
            } else {
                u = s;
                du = c;
                ddu = -s;
            }
            const double a = t.amplitude;
            j.value += a * u;
            j.grad[0] += a * du * ax;
            j.grad[1] += a * du * ay;
            j.hess[0][0] += a * ddu * ax * ax;
            j.hess[0][1] += a * ddu * ax * ay;
            j.hess[1][1] += a * ddu * ay * ay;
        }
        j.hess[1][0] = j.hess[0][1];
        return j;
    };
    return MorseFunction(std::move(name), domain, std::move(eval), true);
}

namespace {

struct HermiteBasis {
    // value basis at left/right node, derivative basis at left/right node,
    // each with first and second t-derivatives
    std::array<double, 2> v, dv, ddv;
    std::array<double, 2> d, dd, ddd;
};

HermiteBasis hermite(double t)
{
    const double t2 = t * t, t3 = t2 * t;
    HermiteBasis b;
    b.v = {2 * t3 - 3 * t2 + 1, -2 * t3 + 3 * t2};
    b.dv = {6 * t2 - 6 * t, -6 * t2 + 6 * t};
    b.ddv = {12 * t - 6, -12 * t + 6};
    b.d = {t3 - 2 * t2 + t, t3 - t2};
    b.dd = {3 * t2 - 4 * t + 1, 3 * t2 - 2 * t};
    b.ddd = {6 * t - 4, 6 * t - 2};
    return b;
}

struct SampledGrid {
    int nx = 0, ny = 1;
    double dx = 1.0, dy = 1.0;
    std::vector<double> f, fx, fy, fxy;

    std::size_t at(int i, int j) const
    {
        i = ((i % nx) + nx) % nx;
        j = ((j % ny) + ny) % ny;
        return static_cast<std::size_t>(j) * nx + i;
    }
};

// fourth-order centered first derivative along x (axis 0) or y (axis 1)
std::vector<double> fd4(const SampledGrid& g, const std::vector<double>& v, int axis)
{
    std::vector<double> out(v.size(), 0.0);
    const double h = axis == 0 ? g.dx : g.dy;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            auto s = [&](int k) { return axis == 0 ? v[g.at(i + k, j)] : v[g.at(i, j + k)]; };
            out[g.at(i, j)] = (-s(2) + 8.0 * s(1) - 8.0 * s(-1) + s(-2)) / (12.0 * h);
        }
    return out;
}

}  // namespace

MorseFunction make_sampled(std::string name, Domain domain, int nx, int ny, std::vector<double> samples)
{
    if (domain.kind == DomainKind::AbstractComplex)
        throw Error(ErrorCode::ConfigError, "sampled functions need a circle or torus");
    const bool two_d = domain.dim() == 2;
    if (!two_d)
        ny = 1;
    if (nx < 5 || (two_d && ny < 5))
        throw Error(ErrorCode::ConfigError, "sampled grids need at least 5 nodes per direction");
    if (samples.size() != static_cast<std::size_t>(nx) * ny)
        throw Error(ErrorCode::ConfigError, "sample count does not match the grid");
    for (double v : samples)
        if (!std::isfinite(v))
            throw Error(ErrorCode::NonFiniteValue, "non-finite sample");

    auto g = std::make_shared<SampledGrid>();
    g->nx = nx;
    g->ny = ny;
    g->dx = domain.lx / nx;
    g->dy = two_d ? domain.ly / ny : 1.0;
    g->f = std::move(samples);
    g->fx = fd4(*g, g->f, 0);
    if (two_d) {
        g->fy = fd4(*g, g->f, 1);
        g->fxy = fd4(*g, g->fx, 1);
    }
    const double lx = domain.lx, ly = domain.ly;

    auto eval = [g, two_d, lx, ly](const Point& p) {
        const double x = wrap(p[0], lx) / g->dx;
        const int i = std::min(static_cast<int>(std::floor(x)), g->nx - 1);
        const auto bx = hermite(x - i);
        Jet jet;
        if (!two_d) {
            for (int a = 0; a < 2; ++a) {
                const auto k = g->at(i + a, 0);
                jet.value += g->f[k] * bx.v[a] + g->fx[k] * g->dx * bx.d[a];
                jet.grad[0] += (g->f[k] * bx.dv[a] + g->fx[k] * g->dx * bx.dd[a]) / g->dx;
                jet.hess[0][0] += (g->f[k] * bx.ddv[a] + g->fx[k] * g->dx * bx.ddd[a]) / (g->dx * g->dx);
            }
            return jet;
        }
        const double y = wrap(p[1], ly) / g->dy;
        const int j = std::min(static_cast<int>(std::floor(y)), g->ny - 1);
        const auto by = hermite(y - j);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                const auto k = g->at(i + a, j + b);
                // coefficient per (x-basis kind, y-basis kind)
                const double c_vv = g->f[k];
                const double c_dv = g->fx[k] * g->dx;
                const double c_vd = g->fy[k] * g->dy;
                const double c_dd = g->fxy[k] * g->dx * g->dy;
                auto combine = [&](double xv, double xd, double yv, double yd) {
                    return c_vv * xv * yv + c_dv * xd * yv + c_vd * xv * yd + c_dd * xd * yd;
                };
                jet.value += combine(bx.v[a], bx.d[a], by.v[b], by.d[b]);
                jet.grad[0] += combine(bx.dv[a], bx.dd[a], by.v[b], by.d[b]) / g->dx;
                jet.grad[1] += combine(bx.v[a], bx.d[a], by.dv[b], by.dd[b]) / g->dy;
                jet.hess[0][0] += combine(bx.ddv[a], bx.ddd[a], by.v[b], by.d[b]) / (g->dx * g->dx);
                jet.hess[1][1] += combine(bx.v[a], bx.d[a], by.ddv[b], by.ddd[b]) / (g->dy * g->dy);
                jet.hess[0][1] += combine(bx.dv[a], bx.dd[a], by.dv[b], by.dd[b]) / (g->dx * g->dy);
            }
        jet.hess[1][0] = jet.hess[0][1];
        return jet;
    };
    return MorseFunction(std::move(name), domain, std::move(eval), false);
}

std::vector<double> read_samples_file(const std::string& path, std::size_t expected_count)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open samples file " + path);
    std::vector<double> values;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.resize(hash);
        std::istringstream ls(line);
        double v;
        while (ls >> v)
            values.push_back(v);
        if (!ls.eof())
            throw Error(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": not a number");
    }
    if (expected_count != 0 && values.size() != expected_count)
        throw Error(ErrorCode::ParseError, path + ": expected " + std::to_string(expected_count) + " values, got " +
                                               std::to_string(values.size()));
    return values;
}

std::string_view to_string(PointClass c)
{
    switch (c) {
    case PointClass::Unclassified: return "unclassified";
    case PointClass::Homological: return "homological";
    case PointClass::Lower: return "lower";
    case PointClass::Upper: return "upper";
    }
    return "unclassified";
}

SymmetricEigen jacobi_eigen(std::span<const double> a_in, std::size_t n, double symmetry_tol)
{
    if (a_in.size() != n * n)
        throw Error(ErrorCode::NotSymmetric, "matrix is not square");
    std::vector<double> a(a_in.begin(), a_in.end());
    double amax = 0.0;
    for (double v : a) {
        if (!std::isfinite(v))
            throw Error(ErrorCode::NonFiniteValue, "non-finite matrix entry");
        amax = std::max(amax, std::fabs(v));
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::fabs(a[i * n + j] - a[j * n + i]) > symmetry_tol * amax)
                throw Error(ErrorCode::NotSymmetric, "asymmetry exceeds tolerance");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            a[j * n + i] = a[i * n + j];

    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        v[i * n + i] = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0, diag = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            diag += a[i * n + i] * a[i * n + i];
            for (std::size_t j = i + 1; j < n; ++j)
                off += a[i * n + j] * a[i * n + j];
        }
        if (off == 0.0 || off <= 1e-34 * diag)
            break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (apq == 0.0)
                    continue;
                const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);
                a[p * n + p] -= t * apq;
                a[q * n + q] += t * apq;
                a[p * n + q] = a[q * n + p] = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    if (r != p && r != q) {
                        const double g = a[r * n + p];
                        const double h = a[r * n + q];
                        a[r * n + p] = a[p * n + r] = g - s * (h + g * tau);
                        a[r * n + q] = a[q * n + r] = h + s * (g - h * tau);
                    }
                    // columns of v are eigenvectors; v is stored row-major here
                    const double g = v[r * n + p];
                    const double h = v[r * n + q];
                    v[r * n + p] = g - s * (h + g * tau);
                    v[r * n + q] = h + s * (g - h * tau);
                }
            }
    }

    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i)
        idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return a[x * n + x] < a[y * n + y]; });
    SymmetricEigen out;
    out.values.resize(n);
    out.vectors.resize(n * n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a[idx[k] * n + idx[k]];
        for (std::size_t r = 0; r < n; ++r)
            out.vectors[k * n + r] = v[r * n + idx[k]];
    }
    return out;
}

std::vector<double> hessian_spectrum(std::span<const double> h, std::size_t d, double symmetry_tol)
{
    return jacobi_eigen(h, d, symmetry_tol).values;
}

namespace {

double point_distance(const Domain& dom, const Point& a, const Point& b)
{
    const double dx = periodic_delta(a[0], b[0], dom.lx);
    if (dom.dim() == 1)
        return dx;
    return std::hypot(dx, periodic_delta(a[1], b[1], dom.ly));
}

std::vector<double> hessian_of(const Jet& j, int d)
{
    if (d == 1)
        return {j.hess[0][0]};
    return {j.hess[0][0], j.hess[0][1], j.hess[1][0], j.hess[1][1]};
}

// one Newton step x <- x - H^{-1} grad; returns false if H is singular
bool newton_step(const Jet& j, int d, Point& x, double max_step)
{
    double sx = 0.0, sy = 0.0;
    if (d == 1) {
        if (j.hess[0][0] == 0.0)
            return false;
        sx = -j.grad[0] / j.hess[0][0];
    } else {
        const double a = j.hess[0][0], b = j.hess[0][1], c = j.hess[1][0], e = j.hess[1][1];
        const double det = a * e - b * c;
        if (det == 0.0)
            return false;
        sx = -(e * j.grad[0] - b * j.grad[1]) / det;
        sy = -(a * j.grad[1] - c * j.grad[0]) / det;
    }
    const double len = std::hypot(sx, sy);
    if (len > max_step) {
        sx *= max_step / len;
        sy *= max_step / len;
    }
    x[0] += sx;
    x[1] += sy;
    return true;
}

}  // namespace

CriticalSearch find_critical_points(const MorseFunction& f, int seed_resolution, const FindOptions& options)
{
    const Domain& dom = f.domain();
    if (dom.kind == DomainKind::AbstractComplex)
        throw Error(ErrorCode::UsageError, "critical point search needs a circle, torus or interval");
    if (seed_resolution < 8)
        throw Error(ErrorCode::UsageError, "seed_resolution must be at least 8");
    const int d = dom.dim();
    const int ny = d == 2 ? seed_resolution : 1;
    const double merge_tol = 1e-8 * dom.diameter();
    const double max_step = 0.125 * (d == 2 ? std::min(dom.lx, dom.ly) : dom.lx);

    double hess_scale = 0.0;
    for (int jy = 0; jy < ny; ++jy)
        for (int ix = 0; ix < seed_resolution; ++ix) {
            Point x{dom.lx * ix / seed_resolution, d == 2 ? dom.ly * jy / ny : 0.0};
            const Jet jet = f.jet(x);
            for (const auto& row : jet.hess)
                for (double h : row)
                    hess_scale = std::max(hess_scale, std::fabs(h));
        }
    const double degeneracy_tol = 1e-8 * hess_scale;

    CriticalSearch out;
    std::vector<Point> found;
    int failed = 0;
    for (int jy = 0; jy < ny; ++jy)
        for (int ix = 0; ix < seed_resolution; ++ix) {
            Point x{dom.lx * (ix + 0.5) / seed_resolution, d == 2 ? dom.ly * (jy + 0.5) / ny : 0.0};
            bool converged = false;
            for (int it = 0; it < options.max_iterations; ++it) {
                const Jet jet = f.jet(x);
                if (std::hypot(jet.grad[0], jet.grad[1]) <= options.newton_tol) {
                    converged = true;
                    break;
                }
                if (!newton_step(jet, d, x, max_step))
                    break;
                x[0] = wrap(x[0], dom.lx);
                if (d == 2)
                    x[1] = wrap(x[1], dom.ly);
            }
            if (!converged) {
                ++failed;
                continue;
            }
            const bool dup = std::any_of(found.begin(), found.end(),
                                         [&](const Point& p) { return point_distance(dom, p, x) <= merge_tol; });
            if (!dup)
                found.push_back(x);
        }
    if (failed > 0)
        out.warnings.push_back("NoConvergence: " + std::to_string(failed) + " of " +
                               std::to_string(seed_resolution * ny) + " Newton seeds did not reach newton_tol");

    for (const Point& x : found) {
        const Jet jet = f.jet(x);
        CriticalPoint cp;
        cp.position = x;
        cp.value = jet.value;
        const auto h = hessian_of(jet, d);
        cp.hessian_eigs = hessian_spectrum(h, static_cast<std::size_t>(d));
        for (double e : cp.hessian_eigs)
            if (std::fabs(e) < degeneracy_tol)
                throw Error(ErrorCode::DegenerateCritical,
                            "critical point at (" + std::to_string(x[0]) + ", " + std::to_string(x[1]) +
                                ") has a near-zero Hessian eigenvalue");
        cp.morse_index =
            static_cast<int>(std::count_if(cp.hessian_eigs.begin(), cp.hessian_eigs.end(), [](double e) { return e < 0.0; }));
        if (dom.kind == DomainKind::Interval && !(cp.value > dom.window_a && cp.value < dom.window_b))
            continue;
        out.points.push_back(std::move(cp));
    }
    std::sort(out.points.begin(), out.points.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
        if (a.value != b.value)
            return a.value < b.value;
        return a.position < b.position;
    });
    for (std::size_t i = 0; i < out.points.size(); ++i)
        out.points[i].id = static_cast<int>(i);
    return out;
}

double value_tolerance(std::span<const CriticalPoint> points)
{
    if (points.empty())
        return 0.0;
    auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                        [](const CriticalPoint& a, const CriticalPoint& b) { return a.value < b.value; });
    return 1e-9 * (hi->value - lo->value);
}

HypothesisReport check_hypotheses(std::span<const CriticalPoint> points, const std::map<int, int>* pairing)
{
    HypothesisReport r;
    double eig_scale = 0.0;
    for (const auto& p : points)
        for (double e : p.hessian_eigs)
            eig_scale = std::max(eig_scale, std::fabs(e));
    const double degeneracy_tol = 1e-8 * eig_scale;
    bool nondegenerate = true;
    for (const auto& p : points) {
        const bool bad = p.hessian_eigs.empty() ||
                         std::any_of(p.hessian_eigs.begin(), p.hessian_eigs.end(),
                                     [&](double e) { return std::fabs(e) <= degeneracy_tol; });
        if (bad) {
            nondegenerate = false;
            r.violations.push_back({{p.id}, "degenerate or missing Hessian"});
        }
    }

    const double vtol = value_tolerance(points);
    std::vector<const CriticalPoint*> sorted;
    for (const auto& p : points)
        sorted.push_back(&p);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->value < b->value; });
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i]->value - sorted[i - 1]->value <= vtol) {
            r.distinct_values = false;
            r.violations.push_back({{sorted[i - 1]->id, sorted[i]->id}, "equal critical values"});
        }
    r.excellent = nondegenerate && r.distinct_values;

    if (pairing) {
        auto value_of = [&](int id) {
            for (const auto& p : points)
                if (p.id == id)
                    return p.value;
            return std::numeric_limits<double>::quiet_NaN();
        };
        std::vector<std::pair<double, int>> gaps;
        for (const auto& [upper, lower] : *pairing)
            gaps.emplace_back(value_of(upper) - value_of(lower), upper);
        std::sort(gaps.begin(), gaps.end());
        for (std::size_t i = 1; i < gaps.size(); ++i)
            if (gaps[i].first - gaps[i - 1].first <= vtol) {
                r.distinct_gaps = false;
                r.violations.push_back({{gaps[i - 1].second, gaps[i].second}, "equal barrier gaps"});
            }
    }
    return r;
}

}  // namespace mbw
