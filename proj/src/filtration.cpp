#include "mbw/filtration.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "mbw/error.hpp"

namespace mbw {

int FilteredComplex::count(int dim) const
{
    return static_cast<int>(std::count_if(cells.begin(), cells.end(), [dim](const Cell& c) { return c.dim == dim; }));
}

int FilteredComplex::euler_characteristic() const
{
    int chi = 0;
    for (const auto& c : cells)
        chi += (c.dim % 2 == 0) ? 1 : -1;
    return chi;
}

bool FilteredComplex::boundary_squared_zero() const
{
    for (const auto& c : cells) {
        if (c.dim < 2)
            continue;
        std::map<int, long> acc;
        for (const auto& f : c.boundary)
            for (const auto& g : cells[static_cast<std::size_t>(f.cell)].boundary)
                acc[g.cell] += static_cast<long>(f.sign) * g.sign;
        for (const auto& [id, v] : acc)
            if (v != 0)
                return false;
    }
    return true;
}

bool FilteredComplex::lower_star_monotone() const
{
    for (const auto& c : cells)
        for (const auto& f : c.boundary) {
            const Cell& face = cells[static_cast<std::size_t>(f.cell)];
            if (face.filtration_value > c.filtration_value || face.order_index >= c.order_index)
                return false;
        }
    return true;
}

namespace {

void check_finite(const std::vector<double>& values)
{
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw Error(ErrorCode::NonFiniteValue, "vertex " + std::to_string(i) + " has a non-finite value");
}

// Fills vertex ranks, lower-star values and the total order.
void finalize(FilteredComplex& fc)
{
    const std::size_t nv = fc.vertex_values.size();
    std::vector<int> by_value(nv);
    std::iota(by_value.begin(), by_value.end(), 0);
    std::sort(by_value.begin(), by_value.end(), [&](int a, int b) {
        const double va = fc.vertex_values[static_cast<std::size_t>(a)];
        const double vb = fc.vertex_values[static_cast<std::size_t>(b)];
        return va != vb ? va < vb : a < b;
    });
    fc.vertex_rank.assign(nv, 0);
    for (std::size_t r = 0; r < nv; ++r)
        fc.vertex_rank[static_cast<std::size_t>(by_value[r])] = static_cast<int>(r);

    for (auto& c : fc.cells) {
        if (c.dim == 0) {
            c.max_vertex = c.id;
        } else {
            int best = -1;
            for (const auto& f : c.boundary) {
                const int v = fc.cells[static_cast<std::size_t>(f.cell)].max_vertex;
                if (best < 0 || fc.vertex_rank[static_cast<std::size_t>(v)] > fc.vertex_rank[static_cast<std::size_t>(best)])
                    best = v;
            }
            c.max_vertex = best;
        }
        c.filtration_value = fc.vertex_values[static_cast<std::size_t>(c.max_vertex)];
        fc.max_dim = std::max(fc.max_dim, c.dim);
    }

    fc.order.resize(fc.cells.size());
    std::iota(fc.order.begin(), fc.order.end(), 0);
    std::sort(fc.order.begin(), fc.order.end(), [&](int a, int b) {
        const Cell& ca = fc.cells[static_cast<std::size_t>(a)];
        const Cell& cb = fc.cells[static_cast<std::size_t>(b)];
        if (ca.filtration_value != cb.filtration_value)
            return ca.filtration_value < cb.filtration_value;
        const int ra = fc.vertex_rank[static_cast<std::size_t>(ca.max_vertex)];
        const int rb = fc.vertex_rank[static_cast<std::size_t>(cb.max_vertex)];
        if (ra != rb)
            return ra < rb;
        if (ca.dim != cb.dim)
            return ca.dim < cb.dim;
        return a < b;
    });
    for (std::size_t k = 0; k < fc.order.size(); ++k)
        fc.cells[static_cast<std::size_t>(fc.order[k])].order_index = static_cast<int>(k);
    fc.marks.assign(fc.cells.size(), CellMark::Active);
}

}  // namespace

FilteredComplex build_cubical(const CubicalGrid& grid, const std::vector<double>& vertex_values)
{
    const bool two_d = grid.ny > 1;
    const long long total = static_cast<long long>(grid.nx) * grid.ny;
    if (grid.nx < 2 || grid.ny < 1)
        throw Error(ErrorCode::ConfigError, "grid needs at least two nodes");
    if (total > 10'000'000)
        throw Error(ErrorCode::SizeExceeded, "grid has more than 1e7 nodes");
    if (vertex_values.size() != static_cast<std::size_t>(total))
        throw Error(ErrorCode::ConfigError, "vertex value count does not match the grid");
    if ((grid.periodic_x && grid.nx < 3) || (two_d && grid.periodic_y && grid.ny < 3))
        throw Error(ErrorCode::ConfigError, "periodic directions need at least three nodes");
    check_finite(vertex_values);

    FilteredComplex fc;
    fc.grid = grid;
    if (!two_d)
        fc.grid->periodic_y = false;
    fc.vertex_values = vertex_values;
    const int nx = grid.nx, ny = grid.ny;
    const int ex = grid.periodic_x ? nx : nx - 1;                 // x-edges per row
    const int ey = two_d ? (grid.periodic_y ? ny : ny - 1) : 0;   // y-edge rows

    auto vid = [&](int i, int j) { return (j % ny) * nx + (i % nx); };
    const int n_vertices = nx * ny;
    const int n_xedges = ex * ny;
    const int n_yedges = nx * ey;
    auto xedge = [&](int i, int j) { return n_vertices + (j % ny) * ex + i; };
    auto yedge = [&](int i, int j) { return n_vertices + n_xedges + j * nx + (i % nx); };

    fc.cells.reserve(static_cast<std::size_t>(n_vertices + n_xedges + n_yedges + ex * ey));
    auto add = [&](int dim, GridSlot slot, std::vector<Face> boundary) {
        Cell c;
        c.id = static_cast<int>(fc.cells.size());
        c.dim = dim;
        c.slot = slot;
        c.boundary = std::move(boundary);
        c.barycenter = {(slot.i + (slot.spans_x ? 0.5 : 0.0)) * grid.dx, (slot.j + (slot.spans_y ? 0.5 : 0.0)) * grid.dy};
        fc.cells.push_back(std::move(c));
    };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            add(0, {i, j, false, false}, {});
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < ex; ++i)
            add(1, {i, j, true, false}, {{vid(i, j), -1}, {vid(i + 1, j), 1}});
    for (int j = 0; j < ey; ++j)
        for (int i = 0; i < nx; ++i)
            add(1, {i, j, false, true}, {{vid(i, j), -1}, {vid(i, j + 1), 1}});
    for (int j = 0; j < ey; ++j)
        for (int i = 0; i < ex; ++i)
            add(2, {i, j, true, true},
                {{xedge(i, j), 1}, {yedge(i + 1, j), 1}, {xedge(i, j + 1), -1}, {yedge(i, j), -1}});

    if (two_d)
        fc.domain_tag = grid.periodic_x && grid.periodic_y ? Domain::torus(nx * grid.dx, ny * grid.dy)
                                                            : Domain::abstract_complex();
    else
        fc.domain_tag = grid.periodic_x ? Domain::circle(nx * grid.dx) : Domain::abstract_complex();
    finalize(fc);
    return fc;
}

FilteredComplex build_cubical_sampled(const MorseFunction& f, int resolution)
{
    const Domain& dom = f.domain();
    if (dom.kind == DomainKind::AbstractComplex)
        throw Error(ErrorCode::UsageError, "cannot sample a function on an abstract complex");
    CubicalGrid g;
    g.nx = resolution;
    g.dx = dom.lx / resolution;
    if (dom.dim() == 2) {
        g.ny = resolution;
        g.dy = dom.ly / resolution;
    }
    std::vector<double> values(static_cast<std::size_t>(g.nx) * g.ny);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            values[static_cast<std::size_t>(j) * g.nx + i] = f.value({i * g.dx, j * g.dy});
    FilteredComplex fc = build_cubical(g, values);
    if (dom.kind == DomainKind::Interval) {
        fc = restrict_window(fc, {dom.window_a, dom.window_b});
        fc.domain_tag = dom;
    }
    return fc;
}

FilteredComplex build_simplicial(int dim, const std::vector<std::array<double, 3>>& positions,
                                 const std::vector<double>& values, const std::vector<std::vector<int>>& simplices)
{
    if (dim < 1 || dim > 2)
        throw Error(ErrorCode::ParseError, "simplicial complexes must have dimension 1 or 2");
    if (positions.size() != values.size())
        throw Error(ErrorCode::ParseError, "position and value counts differ");
    check_finite(values);
    const int nv = static_cast<int>(values.size());

    std::map<std::pair<int, int>, int> edge_index;
    std::map<std::pair<int, int>, int> directed_uses;
    std::vector<std::vector<int>> tops;
    std::map<std::vector<int>, int> seen;
    for (std::size_t s = 0; s < simplices.size(); ++s) {
        const auto& sx = simplices[s];
        if (static_cast<int>(sx.size()) != dim + 1)
            throw Error(ErrorCode::ParseError, "simplex " + std::to_string(s) + " has the wrong vertex count");
        for (int v : sx)
            if (v < 0 || v >= nv)
                throw Error(ErrorCode::ParseError, "simplex " + std::to_string(s) + " uses an unknown vertex");
        auto key = sx;
        std::sort(key.begin(), key.end());
        if (std::adjacent_find(key.begin(), key.end()) != key.end())
            throw Error(ErrorCode::ParseError, "simplex " + std::to_string(s) + " repeats a vertex");
        if (!seen.emplace(key, static_cast<int>(s)).second)
            throw Error(ErrorCode::ParseError, "simplex " + std::to_string(s) + " is listed twice");
        for (int a = 0; a <= dim; ++a)
            for (int b = a + 1; b <= dim; ++b)
                edge_index.emplace(std::minmax(sx[static_cast<std::size_t>(a)], sx[static_cast<std::size_t>(b)]), 0);
        if (dim == 2)
            for (int a = 0; a < 3; ++a)
                ++directed_uses[{sx[static_cast<std::size_t>(a)], sx[static_cast<std::size_t>((a + 1) % 3)]}];
        tops.push_back(sx);
    }
    // orientation is only checked on manifold edges; non-manifold edges warn below
    for (const auto& [e, uses] : directed_uses) {
        const auto rev = directed_uses.find({e.second, e.first});
        const int total = uses + (rev == directed_uses.end() ? 0 : rev->second);
        if (uses > 1 && total == 2)
            throw Error(ErrorCode::OrientationError, "edge (" + std::to_string(e.first) + "," +
                                                         std::to_string(e.second) +
                                                         ") is traversed in the same direction by two triangles");
    }

    FilteredComplex fc;
    fc.vertex_values = values;
    for (int v = 0; v < nv; ++v) {
        Cell c;
        c.id = v;
        c.barycenter = {positions[static_cast<std::size_t>(v)][0], positions[static_cast<std::size_t>(v)][1]};
        fc.cells.push_back(c);
    }
    for (auto& [e, id] : edge_index) {
        id = static_cast<int>(fc.cells.size());
        Cell c;
        c.id = id;
        c.dim = 1;
        c.boundary = {{e.first, -1}, {e.second, 1}};
        for (int k = 0; k < 2; ++k)
            c.barycenter[static_cast<std::size_t>(k)] =
                0.5 * (positions[static_cast<std::size_t>(e.first)][static_cast<std::size_t>(k)] +
                       positions[static_cast<std::size_t>(e.second)][static_cast<std::size_t>(k)]);
        fc.cells.push_back(c);
    }
    if (dim == 2) {
        std::map<std::pair<int, int>, int> edge_degree;
        for (const auto& t : tops) {
            Cell c;
            c.id = static_cast<int>(fc.cells.size());
            c.dim = 2;
            // boundary [v1,v2] - [v0,v2] + [v0,v1]
            const std::array<std::array<int, 3>, 3> terms{{{t[1], t[2], 1}, {t[0], t[2], -1}, {t[0], t[1], 1}}};
            for (const auto& [u, w, s] : terms) {
                const auto key = std::minmax(u, w);
                ++edge_degree[key];
                c.boundary.push_back({edge_index.at(key), u < w ? s : -s});
            }
            for (int k = 0; k < 2; ++k) {
                double sum = 0.0;
                for (int v : t)
                    sum += positions[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)];
                c.barycenter[static_cast<std::size_t>(k)] = sum / 3.0;
            }
            fc.cells.push_back(std::move(c));
        }
        for (const auto& [e, k] : edge_degree)
            if (k > 2)
                fc.warnings.push_back("NonManifoldWarning: edge (" + std::to_string(e.first) + "," +
                                      std::to_string(e.second) + ") lies on " + std::to_string(k) + " triangles");
    }
    finalize(fc);
    return fc;
}

FilteredComplex load_simplicial(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open complex file " + path);
    std::ostringstream text;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.resize(hash);
        text << line << '\n';
    }
    std::istringstream ts(text.str());
    auto fail = [&](const std::string& what) { return Error(ErrorCode::ParseError, path + ": " + what); };

    long dim = 0, nv = 0, ns = 0;
    if (!(ts >> dim >> nv >> ns) || nv < 1 || ns < 1)
        throw fail("bad header, expected `dim nv ns`");
    if (nv > 1'000'000 || ns > 2'000'000)
        throw Error(ErrorCode::SizeExceeded, path + ": complex too large");
    std::vector<std::array<double, 3>> pos(static_cast<std::size_t>(nv));
    std::vector<double> values(static_cast<std::size_t>(nv));
    for (long v = 0; v < nv; ++v) {
        auto& p = pos[static_cast<std::size_t>(v)];
        if (!(ts >> p[0] >> p[1] >> p[2] >> values[static_cast<std::size_t>(v)]))
            throw fail("vertex line " + std::to_string(v) + " is malformed");
    }
    std::vector<std::vector<int>> simplices(static_cast<std::size_t>(ns), std::vector<int>(static_cast<std::size_t>(dim + 1)));
    for (long s = 0; s < ns; ++s)
        for (auto& v : simplices[static_cast<std::size_t>(s)])
            if (!(ts >> v))
                throw fail("simplex line " + std::to_string(s) + " is malformed");
    std::string extra;
    if (ts >> extra)
        throw fail("trailing content after the last simplex");
    return build_simplicial(static_cast<int>(dim), pos, values, simplices);
}

IntMatrix boundary_matrix(const FilteredComplex& fc, int p)
{
    IntMatrix m;
    std::vector<int> row_of(fc.cells.size(), -1);
    for (int id : fc.order) {
        const Cell& c = fc.cells[static_cast<std::size_t>(id)];
        if (c.dim == p - 1) {
            row_of[static_cast<std::size_t>(id)] = m.rows++;
            m.row_cells.push_back(id);
        } else if (c.dim == p) {
            m.col_cells.push_back(id);
        }
    }
    m.cols = static_cast<int>(m.col_cells.size());
    m.columns.resize(m.col_cells.size());
    for (std::size_t k = 0; k < m.col_cells.size(); ++k) {
        auto& col = m.columns[k];
        for (const auto& f : fc.cells[static_cast<std::size_t>(m.col_cells[k])].boundary)
            col.emplace_back(row_of[static_cast<std::size_t>(f.cell)], f.sign);
        std::sort(col.begin(), col.end());
    }
    return m;
}

double complex_value_tolerance(const FilteredComplex& fc)
{
    if (fc.vertex_values.empty())
        return 0.0;
    auto [lo, hi] = std::minmax_element(fc.vertex_values.begin(), fc.vertex_values.end());
    return 1e-9 * (*hi - *lo);
}

FilteredComplex restrict_window(const FilteredComplex& fc, const WindowSpec& w)
{
    if (!(w.a < w.b))
        throw Error(ErrorCode::BoundaryMismatch, "window needs a < b");
    const double tol = complex_value_tolerance(fc);
    for (double v : fc.vertex_values)
        if (std::fabs(v - w.a) <= tol || std::fabs(v - w.b) <= tol)
            throw Error(ErrorCode::WindowOnCriticalValue, "window level coincides with a cell value");
    FilteredComplex out = fc;
    out.window = w;
    bool any_active = false;
    for (const auto& c : out.cells) {
        CellMark m = CellMark::Active;
        if (c.filtration_value <= w.a)
            m = CellMark::Quotiented;
        else if (c.filtration_value > w.b)
            m = CellMark::Dropped;
        out.marks[static_cast<std::size_t>(c.id)] = m;
        any_active = any_active || m == CellMark::Active;
    }
    if (!any_active)
        throw Error(ErrorCode::BoundaryMismatch, "window contains no cells");
    return out;
}

}  // namespace mbw
