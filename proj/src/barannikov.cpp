#include "mbw/barannikov.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "mbw/error.hpp"

namespace mbw {

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b)
{
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r))
        throw Error(ErrorCode::ArithmeticOverflow, "integer overflow in boundary reduction");
    return r;
}

std::int64_t checked_sub(std::int64_t a, std::int64_t b)
{
    std::int64_t r;
    if (__builtin_sub_overflow(a, b, &r))
        throw Error(ErrorCode::ArithmeticOverflow, "integer overflow in boundary reduction");
    return r;
}

using IntColumn = std::vector<std::pair<int, std::int64_t>>;  // (order index, coefficient), ascending

// a*x - b*y with rows merged, zeros removed, content divided out
IntColumn combine(const IntColumn& x, std::int64_t a, const IntColumn& y, std::int64_t b)
{
    IntColumn out;
    out.reserve(x.size() + y.size());
    std::size_t i = 0, j = 0;
    while (i < x.size() || j < y.size()) {
        int row;
        std::int64_t v = 0;
        if (j == y.size() || (i < x.size() && x[i].first < y[j].first)) {
            row = x[i].first;
            v = checked_mul(a, x[i++].second);
        } else if (i == x.size() || y[j].first < x[i].first) {
            row = y[j].first;
            v = checked_sub(0, checked_mul(b, y[j++].second));
        } else {
            row = x[i].first;
            v = checked_sub(checked_mul(a, x[i++].second), checked_mul(b, y[j++].second));
        }
        if (v != 0)
            out.emplace_back(row, v);
    }
    std::int64_t g = 0;
    for (const auto& e : out)
        g = std::gcd(g, e.second);
    if (g > 1)
        for (auto& e : out)
            e.second /= g;
    return out;
}

}  // namespace

PersistencePairing reduce(const FilteredComplex& fc)
{
    const int n = static_cast<int>(fc.order.size());
    std::vector<IntColumn> reduced(static_cast<std::size_t>(n));
    std::vector<int> owner(static_cast<std::size_t>(n), -1);  // pivot row -> column
    std::vector<char> cleared(static_cast<std::size_t>(n), 0);
    auto active = [&](int cell) { return fc.marks[static_cast<std::size_t>(cell)] == CellMark::Active; };

    for (int d = fc.max_dim; d >= 1; --d) {
        for (int k = 0; k < n; ++k) {
            const Cell& c = fc.at_order(k);
            if (c.dim != d || !active(c.id) || cleared[static_cast<std::size_t>(k)])
                continue;
            IntColumn col;
            for (const auto& f : c.boundary)
                if (active(f.cell))
                    col.emplace_back(fc.cells[static_cast<std::size_t>(f.cell)].order_index, f.sign);
            std::sort(col.begin(), col.end());
            while (!col.empty()) {
                const int o = owner[static_cast<std::size_t>(col.back().first)];
                if (o < 0)
                    break;
                const IntColumn& other = reduced[static_cast<std::size_t>(o)];
                col = combine(col, other.back().second, other, col.back().second);
            }
            if (!col.empty()) {
                owner[static_cast<std::size_t>(col.back().first)] = k;
                cleared[static_cast<std::size_t>(col.back().first)] = 1;
                reduced[static_cast<std::size_t>(k)] = std::move(col);
            }
        }
    }

    PersistencePairing pp;
    for (int k = 0; k < n; ++k) {
        const Cell& c = fc.at_order(k);
        if (!active(c.id))
            continue;
        if (!reduced[static_cast<std::size_t>(k)].empty()) {
            const Cell& b = fc.at_order(reduced[static_cast<std::size_t>(k)].back().first);
            pp.pairs.push_back({b.id, c.id, b.filtration_value, c.filtration_value, b.dim});
        } else if (owner[static_cast<std::size_t>(k)] < 0) {
            pp.essentials.push_back({c.id, c.filtration_value, c.dim});
        }
    }
    std::sort(pp.pairs.begin(), pp.pairs.end(), [&](const PersistencePair& x, const PersistencePair& y) {
        return fc.cells[static_cast<std::size_t>(x.death_cell)].order_index <
               fc.cells[static_cast<std::size_t>(y.death_cell)].order_index;
    });
    return pp;
}

namespace {

std::vector<double> unit_hessian(int index, int d)
{
    std::vector<double> e(static_cast<std::size_t>(d), 1.0);
    for (int i = 0; i < index; ++i)
        e[static_cast<std::size_t>(i)] = -1.0;
    return e;
}

void fill_degrees(BarannikovComplex& bc, int max_dim)
{
    int top = max_dim;
    for (const auto& p : bc.points)
        top = std::max(top, p.morse_index);
    bc.betti.assign(static_cast<std::size_t>(top + 1), 0);
    bc.degree_lists.assign(static_cast<std::size_t>(top + 1), {});
    for (const auto& p : bc.points) {
        bc.degree_lists[static_cast<std::size_t>(p.morse_index)].push_back(p.id);
        if (p.cls == PointClass::Homological)
            ++bc.betti[static_cast<std::size_t>(p.morse_index)];
    }
    for (auto& list : bc.degree_lists)
        std::stable_sort(list.begin(), list.end(),
                         [&](int a, int b) { return bc.point(a).value < bc.point(b).value; });
}

void link(BarannikovComplex& bc, int upper, int lower)
{
    bc.points[static_cast<std::size_t>(upper)].cls = PointClass::Upper;
    bc.points[static_cast<std::size_t>(upper)].partner = lower;
    bc.points[static_cast<std::size_t>(lower)].cls = PointClass::Lower;
    bc.points[static_cast<std::size_t>(lower)].partner = upper;
    bc.pairing[upper] = lower;
}

// Collects the vertex ids of a cell.
void vertices_of(const FilteredComplex& fc, int cell, std::set<int>& out)
{
    const Cell& c = fc.cells[static_cast<std::size_t>(cell)];
    if (c.dim == 0) {
        out.insert(c.id);
        return;
    }
    for (const auto& f : c.boundary)
        vertices_of(fc, f.cell, out);
}

}  // namespace

MatchOptions grid_match_options(const FilteredComplex& fc, std::span<const CriticalPoint> pts)
{
    MatchOptions opt;
    double jump = 0.0;
    for (const auto& c : fc.cells) {
        if (c.dim != fc.max_dim)
            continue;
        std::set<int> vs;
        vertices_of(fc, c.id, vs);
        double lo = INFINITY, hi = -INFINITY;
        for (int v : vs) {
            lo = std::min(lo, fc.vertex_values[static_cast<std::size_t>(v)]);
            hi = std::max(hi, fc.vertex_values[static_cast<std::size_t>(v)]);
        }
        jump = std::max(jump, hi - lo);
    }
    double hess = 0.0;
    for (const auto& p : pts)
        for (double e : p.hessian_eigs)
            hess = std::max(hess, std::fabs(e));
    double spacing = 0.0;
    if (fc.grid)
        spacing = std::max(fc.grid->dx, fc.grid->dim() == 2 ? fc.grid->dy : 0.0);
    opt.noise_floor = fc.grid ? 2.0 * jump : 0.0;
    opt.match_tol = 10.0 * hess * spacing * spacing;
    if (!fc.grid)
        opt.match_tol = std::max(opt.match_tol, complex_value_tolerance(fc));
    return opt;
}

BarannikovComplex match_cells_to_points(const FilteredComplex& fc, const PersistencePairing& pp,
                                        std::vector<CriticalPoint> pts, const MatchOptions& opt)
{
    std::stable_sort(pts.begin(), pts.end(), [](const CriticalPoint& a, const CriticalPoint& b) { return a.value < b.value; });
    for (std::size_t i = 0; i < pts.size(); ++i) {
        pts[i].id = static_cast<int>(i);
        pts[i].cls = PointClass::Unclassified;
        pts[i].partner.reset();
    }
    BarannikovComplex bc;
    bc.points = std::move(pts);
    std::vector<char> used(bc.points.size(), 0);

    auto match = [&](int cell_id) {
        const Cell& c = fc.cells[static_cast<std::size_t>(cell_id)];
        int hit = -1;
        for (const auto& p : bc.points) {
            if (p.morse_index != c.dim || std::fabs(p.value - c.filtration_value) > opt.match_tol)
                continue;
            if (hit >= 0)
                throw Error(ErrorCode::AmbiguousMatch, "two critical points match the event at value " +
                                                           std::to_string(c.filtration_value));
            hit = p.id;
        }
        if (hit < 0)
            throw Error(ErrorCode::UnmatchedEvent, "no index-" + std::to_string(c.dim) +
                                                       " critical point near event value " +
                                                       std::to_string(c.filtration_value));
        if (used[static_cast<std::size_t>(hit)])
            throw Error(ErrorCode::AmbiguousMatch, "critical point " + std::to_string(hit) + " matches two events");
        used[static_cast<std::size_t>(hit)] = 1;
        return hit;
    };

    for (const auto& e : pp.essentials)
        bc.points[static_cast<std::size_t>(match(e.cell))].cls = PointClass::Homological;
    for (const auto& pr : pp.pairs) {
        if (pr.death_value - pr.birth_value <= opt.noise_floor)
            continue;
        const int upper = match(pr.death_cell);
        const int lower = match(pr.birth_cell);
        link(bc, upper, lower);
    }
    for (const auto& p : bc.points)
        if (!used[static_cast<std::size_t>(p.id)])
            throw Error(ErrorCode::UnmatchedEvent,
                        "critical point " + std::to_string(p.id) + " at value " + std::to_string(p.value) +
                            " owns no significant persistence event");
    fill_degrees(bc, fc.max_dim);
    return bc;
}

BarannikovComplex points_from_pairing(const FilteredComplex& fc, const PersistencePairing& pp, double noise_floor)
{
    struct Ev {
        int cell;
        int partner_cell;  // -1 for essentials
        bool upper;
    };
    std::vector<Ev> evs;
    for (const auto& e : pp.essentials)
        evs.push_back({e.cell, -1, false});
    for (const auto& pr : pp.pairs) {
        if (pr.death_value - pr.birth_value <= noise_floor)
            continue;
        evs.push_back({pr.death_cell, pr.birth_cell, true});
        evs.push_back({pr.birth_cell, pr.death_cell, false});
    }
    auto cell = [&](int id) -> const Cell& { return fc.cells[static_cast<std::size_t>(id)]; };
    std::sort(evs.begin(), evs.end(), [&](const Ev& a, const Ev& b) {
        const Cell& ca = cell(a.cell);
        const Cell& cb = cell(b.cell);
        return ca.filtration_value != cb.filtration_value ? ca.filtration_value < cb.filtration_value
                                                          : ca.order_index < cb.order_index;
    });
    std::map<int, int> point_of_cell;
    BarannikovComplex bc;
    for (const auto& ev : evs) {
        const Cell& c = cell(ev.cell);
        CriticalPoint p;
        p.id = static_cast<int>(bc.points.size());
        p.position = c.barycenter;
        p.value = c.filtration_value;
        p.morse_index = c.dim;
        p.hessian_eigs = unit_hessian(c.dim, fc.max_dim);
        p.cls = PointClass::Homological;
        point_of_cell[ev.cell] = p.id;
        bc.points.push_back(std::move(p));
    }
    for (const auto& ev : evs)
        if (ev.upper)
            link(bc, point_of_cell.at(ev.cell), point_of_cell.at(ev.partner_cell));
    fill_degrees(bc, fc.max_dim);
    return bc;
}

std::vector<int> betti(const BarannikovComplex& bc)
{
    std::vector<int> b(bc.betti.size(), 0);
    for (const auto& p : bc.points)
        if (p.cls == PointClass::Homological) {
            if (static_cast<std::size_t>(p.morse_index) >= b.size())
                b.resize(static_cast<std::size_t>(p.morse_index) + 1, 0);
            ++b[static_cast<std::size_t>(p.morse_index)];
        }
    return b;
}

std::string check_structure(const BarannikovComplex& bc)
{
    std::set<int> images;
    for (const auto& [u, l] : bc.pairing) {
        if (u < 0 || l < 0 || static_cast<std::size_t>(u) >= bc.points.size() ||
            static_cast<std::size_t>(l) >= bc.points.size())
            return "pairing refers to an unknown point";
        const auto& up = bc.point(u);
        const auto& lo = bc.point(l);
        if (up.cls != PointClass::Upper || lo.cls != PointClass::Lower)
            return "pair " + std::to_string(u) + "->" + std::to_string(l) + " does not run Upper to Lower";
        if (up.morse_index != lo.morse_index + 1)
            return "pair " + std::to_string(u) + "->" + std::to_string(l) + " does not drop the index by one";
        if (!(up.value > lo.value))
            return "pair " + std::to_string(u) + "->" + std::to_string(l) + " does not drop the value";
        if (!images.insert(l).second)
            return "point " + std::to_string(l) + " is the image of two upper points";
        if (bc.pairing.count(l))
            return "boundary squared is nonzero at point " + std::to_string(l);
    }
    for (const auto& p : bc.points) {
        switch (p.cls) {
        case PointClass::Unclassified:
            return "point " + std::to_string(p.id) + " is unclassified";
        case PointClass::Homological:
            if (p.partner)
                return "homological point " + std::to_string(p.id) + " has a partner";
            break;
        case PointClass::Upper:
            if (!p.partner || !bc.pairing.count(p.id) || bc.pairing.at(p.id) != *p.partner)
                return "upper point " + std::to_string(p.id) + " is not in the pairing";
            break;
        case PointClass::Lower:
            if (!p.partner || !images.count(p.id) || bc.pairing.at(*p.partner) != p.id)
                return "lower point " + std::to_string(p.id) + " is not hit by the pairing";
            break;
        }
    }
    if (betti(bc) != bc.betti)
        return "stored Betti numbers differ from the homological counts";
    return {};
}

GapReport check_gap_hypothesis(const BarannikovComplex& bc)
{
    GapReport r;
    for (const auto& [u, l] : bc.pairing)
        r.gaps.emplace_back(bc.point(u).value - bc.point(l).value, u);
    std::sort(r.gaps.begin(), r.gaps.end());
    const double tol = value_tolerance(bc.points);
    for (std::size_t i = 1; i < r.gaps.size(); ++i)
        if (r.gaps[i].first - r.gaps[i - 1].first <= tol)
            r.distinct = false;
    return r;
}

std::string_view to_string(GeneratorReason r)
{
    switch (r) {
    case GeneratorReason::HomologicalInM: return "homological";
    case GeneratorReason::UpperWithPartnerBelowA: return "upper-partner-below-a";
    case GeneratorReason::LowerWithPartnerAboveB: return "lower-partner-above-b";
    }
    return "homological";
}

RelativeBasis relative_basis(const BarannikovComplex& bc, const WindowSpec& w)
{
    if (!(w.a < w.b))
        throw Error(ErrorCode::BoundaryMismatch, "window needs a < b");
    const double tol = value_tolerance(bc.points);
    for (const auto& p : bc.points)
        if (std::fabs(p.value - w.a) <= tol || std::fabs(p.value - w.b) <= tol)
            throw Error(ErrorCode::WindowOnCriticalValue, "window level coincides with critical point " + std::to_string(p.id));
    RelativeBasis rb;
    rb.window = w;
    rb.ranks.assign(bc.betti.size(), 0);
    for (const auto& p : bc.points) {
        if (!(p.value > w.a && p.value < w.b))
            continue;
        std::optional<GeneratorReason> why;
        if (p.cls == PointClass::Homological)
            why = GeneratorReason::HomologicalInM;
        else if (p.cls == PointClass::Upper && bc.point(*p.partner).value < w.a)
            why = GeneratorReason::UpperWithPartnerBelowA;
        else if (p.cls == PointClass::Lower && bc.point(*p.partner).value > w.b)
            why = GeneratorReason::LowerWithPartnerAboveB;
        if (why) {
            rb.generators.push_back({p.id, *why, p.morse_index});
            ++rb.ranks[static_cast<std::size_t>(p.morse_index)];
        }
    }
    return rb;
}

std::string format_classification(const BarannikovComplex& bc)
{
    std::ostringstream out;
    out << "# id degree value class partner gap\n";
    char buf[64];
    for (const auto& p : bc.points) {
        std::snprintf(buf, sizeof buf, "%.17g", p.value);
        out << p.id << ' ' << p.morse_index << ' ' << buf << ' ' << to_string(p.cls) << ' ';
        if (p.partner) {
            std::snprintf(buf, sizeof buf, "%.17g", std::fabs(p.value - bc.point(*p.partner).value));
            out << *p.partner << ' ' << buf;
        } else {
            out << "- -";
        }
        out << '\n';
    }
    return out.str();
}

// ---- Rational ------------------------------------------------------------

namespace {

using i128 = __int128;

i128 gcd128(i128 a, i128 b)
{
    if (a < 0)
        a = -a;
    if (b < 0)
        b = -b;
    while (b != 0) {
        i128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

Rational make_rational(i128 n, i128 d)
{
    if (d == 0)
        throw Error(ErrorCode::ArithmeticOverflow, "rational division by zero");
    if (d < 0) {
        n = -n;
        d = -d;
    }
    const i128 g = gcd128(n, d);
    if (g > 1) {
        n /= g;
        d /= g;
    }
    constexpr i128 lim = std::numeric_limits<std::int64_t>::max();
    if (n > lim || n < -lim || d > lim)
        throw Error(ErrorCode::ArithmeticOverflow, "rational overflow in rank oracle");
    return Rational(static_cast<std::int64_t>(n), static_cast<std::int64_t>(d));
}

}  // namespace

Rational::Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d)
{
    if (d == 0)
        throw Error(ErrorCode::ArithmeticOverflow, "rational with zero denominator");
    if (den_ < 0) {
        num_ = -num_;
        den_ = -den_;
    }
    const std::int64_t g = std::gcd(num_, den_);
    if (g > 1) {
        num_ /= g;
        den_ /= g;
    }
}

Rational Rational::operator+(const Rational& o) const
{
    return make_rational(static_cast<i128>(num_) * o.den_ + static_cast<i128>(o.num_) * den_,
                         static_cast<i128>(den_) * o.den_);
}

Rational Rational::operator-(const Rational& o) const
{
    return make_rational(static_cast<i128>(num_) * o.den_ - static_cast<i128>(o.num_) * den_,
                         static_cast<i128>(den_) * o.den_);
}

Rational Rational::operator*(const Rational& o) const
{
    return make_rational(static_cast<i128>(num_) * o.num_, static_cast<i128>(den_) * o.den_);
}

Rational Rational::operator/(const Rational& o) const
{
    return make_rational(static_cast<i128>(num_) * o.den_, static_cast<i128>(den_) * o.num_);
}

// ---- rank oracle ---------------------------------------------------------

RankOracle::RankOracle(const FilteredComplex& fc, std::size_t max_cells) : fc_(fc)
{
    if (fc.cells.size() > max_cells)
        throw Error(ErrorCode::OracleSizeExceeded,
                    "rank oracle limited to " + std::to_string(max_cells) + " cells, complex has " +
                        std::to_string(fc.cells.size()));
    n_ = static_cast<int>(fc.cells.size());
    max_dim_ = fc.max_dim;
}

int RankOracle::rank(int col_dim, int col_lo, int col_hi, int row_lo, int row_hi) const
{
    using Col = std::vector<std::pair<int, Rational>>;
    std::vector<Col> pivots(static_cast<std::size_t>(n_));
    std::vector<char> has_pivot(static_cast<std::size_t>(n_), 0);
    int r = 0;
    for (int k = col_lo; k < col_hi; ++k) {
        const Cell& c = fc_.at_order(k);
        if (c.dim != col_dim)
            continue;
        Col col;
        for (const auto& f : c.boundary) {
            const int row = fc_.cells[static_cast<std::size_t>(f.cell)].order_index;
            if (row >= row_lo && row < row_hi)
                col.emplace_back(row, Rational(f.sign));
        }
        std::sort(col.begin(), col.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        while (!col.empty() && has_pivot[static_cast<std::size_t>(col.back().first)]) {
            const Col& p = pivots[static_cast<std::size_t>(col.back().first)];
            const Rational factor = col.back().second / p.back().second;
            Col next;
            std::size_t i = 0, j = 0;
            while (i < col.size() || j < p.size()) {
                if (j == p.size() || (i < col.size() && col[i].first < p[j].first)) {
                    next.push_back(col[i++]);
                } else if (i == col.size() || p[j].first < col[i].first) {
                    next.emplace_back(p[j].first, Rational(0) - factor * p[j].second);
                    ++j;
                } else {
                    Rational v = col[i].second - factor * p[j].second;
                    if (!v.is_zero())
                        next.emplace_back(col[i].first, v);
                    ++i;
                    ++j;
                }
            }
            col = std::move(next);
        }
        if (!col.empty()) {
            const auto row = static_cast<std::size_t>(col.back().first);
            has_pivot[row] = 1;
            pivots[row] = std::move(col);
            ++r;
        }
    }
    return r;
}

int RankOracle::persistence(int k, int i, int j, int q) const
{
    if (k < 0 || k > max_dim_)
        return 0;
    int n_k = 0;
    for (int t = q; t < i; ++t)
        if (fc_.at_order(t).dim == k)
            ++n_k;
    const int z = n_k - (k > 0 ? rank(k, q, i, q, i) : 0);
    int zb = 0;
    if (k < max_dim_)
        zb = rank(k + 1, q, j, q, j) - rank(k + 1, q, j, i, j);
    return z - zb;
}

int RankOracle::cut(double level) const
{
    int lo = 0, hi = n_;
    while (lo < hi) {
        const int mid = (lo + hi) / 2;
        if (fc_.at_order(mid).filtration_value <= level)
            lo = mid + 1;
        else
            hi = mid;
    }
    return lo;
}

std::vector<OracleEvent> lower_star_events(const RankOracle& oracle, const FilteredComplex& fc)
{
    std::vector<OracleEvent> events;
    const int n = oracle.cells();
    int s = 0;
    while (s < n) {
        int e = s + 1;
        const int v = fc.at_order(s).max_vertex;
        while (e < n && fc.at_order(e).max_vertex == v)
            ++e;
        int total = 0, degree = -1;
        for (int k = 0; k <= oracle.max_dim(); ++k) {
            const int b = oracle.betti(k, e, s);
            total += b;
            if (b > 0)
                degree = k;
        }
        const double value = fc.at_order(s).filtration_value;
        if (total == 1) {
            events.push_back({s, e, degree, value, PointClass::Unclassified, std::nullopt});
        } else if (total > 1) {
            for (int t = s; t < e; ++t)
                events.push_back({t, t + 1, fc.at_order(t).dim, value, PointClass::Unclassified, std::nullopt});
        }
        s = e;
    }
    return events;
}

void classify_events(const RankOracle& oracle, std::vector<OracleEvent>& events)
{
    const int n = oracle.cells();
    const int top = oracle.max_dim();
    auto upper_vanishes = [&](int s, int e, int q) {
        for (int k = 0; k <= top; ++k)
            if (oracle.persistence(k, s, e, q) != oracle.betti(k, e, q))
                return false;
        return true;
    };
    std::vector<int> hits(events.size(), 0);
    for (std::size_t idx = 0; idx < events.size(); ++idx) {
        auto& ev = events[idx];
        const bool upper = upper_vanishes(ev.begin, ev.end, 0);
        bool lower = true;
        for (int k = 0; k <= top && lower; ++k)
            lower = oracle.persistence(k, ev.end, n, ev.begin) == 0;
        if (upper && lower)
            throw Error(ErrorCode::OracleMismatch, "event at value " + std::to_string(ev.value) + " is both upper and lower");
        if (lower) {
            ev.cls = PointClass::Lower;
            continue;
        }
        if (!upper) {
            ev.cls = PointClass::Homological;
            continue;
        }
        ev.cls = PointClass::Upper;
        // last earlier event whose start level still kills the class
        int lo = 0, hi = static_cast<int>(idx);
        while (lo < hi) {
            const int mid = (lo + hi) / 2;
            if (upper_vanishes(ev.begin, ev.end, events[static_cast<std::size_t>(mid)].begin))
                lo = mid + 1;
            else
                hi = mid;
        }
        const int partner = lo - 1;
        if (partner < 0 || upper_vanishes(ev.begin, ev.end, events[static_cast<std::size_t>(partner)].end))
            throw Error(ErrorCode::OracleMismatch,
                        "supremum level for the upper event at " + std::to_string(ev.value) + " falls between events");
        const auto& pe = events[static_cast<std::size_t>(partner)];
        if (pe.cls != PointClass::Lower || pe.degree != ev.degree - 1)
            throw Error(ErrorCode::OracleMismatch,
                        "partner of the upper event at " + std::to_string(ev.value) + " is not a lower event one degree down");
        ev.partner = partner;
        ++hits[static_cast<std::size_t>(partner)];
    }
    for (std::size_t idx = 0; idx < events.size(); ++idx) {
        if (events[idx].cls == PointClass::Lower && hits[idx] != 1)
            throw Error(ErrorCode::OracleMismatch,
                        "lower event at " + std::to_string(events[idx].value) + " is hit " + std::to_string(hits[idx]) + " times");
        if (events[idx].cls == PointClass::Upper)
            events[static_cast<std::size_t>(*events[idx].partner)].partner = static_cast<int>(idx);
    }
}

BarannikovComplex classify_by_rank_oracle(const FilteredComplex& fc, std::vector<CriticalPoint> pts)
{
    RankOracle oracle(fc);
    std::stable_sort(pts.begin(), pts.end(), [](const CriticalPoint& a, const CriticalPoint& b) { return a.value < b.value; });
    std::vector<OracleEvent> events;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double lo = i == 0 ? -INFINITY : 0.5 * (pts[i - 1].value + pts[i].value);
        const double hi = i + 1 == pts.size() ? INFINITY : 0.5 * (pts[i].value + pts[i + 1].value);
        OracleEvent ev;
        ev.begin = oracle.cut(lo);
        ev.end = oracle.cut(hi);
        ev.degree = pts[i].morse_index;
        ev.value = pts[i].value;
        int total = 0;
        for (int k = 0; k <= oracle.max_dim(); ++k)
            total += oracle.betti(k, ev.end, ev.begin);
        if (total != 1 || oracle.betti(ev.degree, ev.end, ev.begin) != 1)
            throw Error(ErrorCode::OracleMismatch, "value window around " + std::to_string(pts[i].value) +
                                                       " does not carry one index-" + std::to_string(ev.degree) +
                                                       " homology change");
        events.push_back(ev);
    }
    classify_events(oracle, events);

    BarannikovComplex bc;
    bc.points = std::move(pts);
    for (std::size_t i = 0; i < bc.points.size(); ++i) {
        auto& p = bc.points[i];
        p.id = static_cast<int>(i);
        p.cls = events[i].cls;
        p.partner = events[i].partner;
        if (p.cls == PointClass::Upper)
            bc.pairing[p.id] = *p.partner;
    }
    fill_degrees(bc, fc.max_dim);
    return bc;
}

BarannikovComplex classify_by_rank_oracle(const FilteredComplex& fc)
{
    RankOracle oracle(fc);
    auto events = lower_star_events(oracle, fc);
    classify_events(oracle, events);

    auto star = [&](const OracleEvent& ev) { return fc.at_order(ev.begin).max_vertex; };
    std::vector<char> keep(events.size(), 1);
    for (std::size_t i = 0; i < events.size(); ++i)
        if (events[i].cls == PointClass::Upper && star(events[i]) == star(events[static_cast<std::size_t>(*events[i].partner)])) {
            keep[i] = 0;
            keep[static_cast<std::size_t>(*events[i].partner)] = 0;
        }

    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < events.size(); ++i)
        if (keep[i])
            kept.push_back(i);
    std::stable_sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
        return events[a].value != events[b].value ? events[a].value < events[b].value : events[a].begin < events[b].begin;
    });
    std::map<std::size_t, int> id_of;
    BarannikovComplex bc;
    for (std::size_t ev_idx : kept) {
        const auto& ev = events[ev_idx];
        CriticalPoint p;
        p.id = static_cast<int>(bc.points.size());
        p.position = ev.end - ev.begin == 1 ? fc.at_order(ev.begin).barycenter
                                            : fc.cells[static_cast<std::size_t>(star(ev))].barycenter;
        p.value = ev.value;
        p.morse_index = ev.degree;
        p.hessian_eigs = unit_hessian(ev.degree, fc.max_dim);
        p.cls = ev.cls;
        id_of[ev_idx] = p.id;
        bc.points.push_back(std::move(p));
    }
    for (std::size_t ev_idx : kept) {
        const auto& ev = events[ev_idx];
        if (ev.partner) {
            auto& p = bc.points[static_cast<std::size_t>(id_of.at(ev_idx))];
            p.partner = id_of.at(static_cast<std::size_t>(*ev.partner));
            if (ev.cls == PointClass::Upper)
                bc.pairing[p.id] = *p.partner;
        }
    }
    fill_degrees(bc, fc.max_dim);
    return bc;
}

std::vector<int> relative_betti(const RankOracle& oracle, const WindowSpec& w)
{
    const int q = std::isfinite(w.a) ? oracle.cut(w.a) : 0;
    const int e = std::isfinite(w.b) ? oracle.cut(w.b) : oracle.cells();
    std::vector<int> out;
    for (int k = 0; k <= oracle.max_dim(); ++k)
        out.push_back(oracle.betti(k, e, q));
    return out;
}

}  // namespace mbw
