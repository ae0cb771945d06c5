#pragma once

// Reference computations that share no code with the library.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>
#include <vector>

namespace oracle {

struct Trig1D {
    // amplitude * cos|sin(k x)
    struct Term {
        bool is_cos;
        int k;
        double amp;
    };
    std::vector<Term> terms;

    double f(double x) const
    {
        double s = 0;
        for (const auto& t : terms)
            s += t.amp * (t.is_cos ? std::cos(t.k * x) : std::sin(t.k * x));
        return s;
    }
    double df(double x) const
    {
        double s = 0;
        for (const auto& t : terms)
            s += t.amp * t.k * (t.is_cos ? -std::sin(t.k * x) : std::cos(t.k * x));
        return s;
    }
    double d2f(double x) const
    {
        double s = 0;
        for (const auto& t : terms)
            s += -t.amp * t.k * t.k * (t.is_cos ? std::cos(t.k * x) : std::sin(t.k * x));
        return s;
    }
};

inline Trig1D double_well()
{
    return Trig1D{{{true, 2, 0.5}, {false, 1, 0.225}, {true, 1, 0.25}}};
}

struct Crit1D {
    double x, value, second;
};

/// Sign changes of f' on a uniform grid of [0, 2pi), refined by bisection.
inline std::vector<Crit1D> critical_points(const Trig1D& t, int grid = 10000)
{
    std::vector<Crit1D> out;
    const double L = 2 * std::numbers::pi;
    for (int i = 0; i < grid; ++i) {
        double a = L * i / grid, b = L * (i + 1) / grid;
        double fa = t.df(a), fb = t.df(b);
        if (fa == 0.0) {
            out.push_back({a, t.f(a), t.d2f(a)});
            continue;
        }
        if ((fa < 0) == (fb < 0) || fb == 0.0)
            continue;
        for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
            const double m = 0.5 * (a + b);
            if ((t.df(m) < 0) == (fa < 0))
                a = m;
            else
                b = m;
        }
        const double x = 0.5 * (a + b);
        out.push_back({x, t.f(x), t.d2f(x)});
    }
    std::sort(out.begin(), out.end(), [](const Crit1D& p, const Crit1D& q) { return p.value < q.value; });
    return out;
}

/// Dense conjugated coboundary on the N-cycle of length 2pi: vertex i at i*dx,
/// edge i from vertex i to i+1; entries (h/dx) exp((f(vertex) - f(edge mid))/h).
inline Eigen::MatrixXd dense_coboundary_1d(const std::function<double(double)>& f, int n, double h)
{
    const double dx = 2 * std::numbers::pi / n;
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (int e = 0; e < n; ++e) {
        const double mid = f((e + 0.5) * dx);
        const int v0 = e, v1 = (e + 1) % n;
        d(e, v0) -= h / dx * std::exp((f(v0 * dx) - mid) / h);
        d(e, v1) += h / dx * std::exp((f(v1 * dx) - mid) / h);
    }
    return d;
}

/// Ascending eigenvalues of D^T D (p = 0) or D D^T (p = 1).
inline std::vector<double> dense_spectrum_1d(const std::function<double(double)>& f, int n, double h, int p)
{
    const Eigen::MatrixXd d = dense_coboundary_1d(f, n, h);
    const Eigen::MatrixXd a = p == 0 ? Eigen::MatrixXd(d.transpose() * d) : Eigen::MatrixXd(d * d.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = es.eigenvalues()[i];
    return out;
}

/// Rank of an integer matrix modulo a large prime (dense Gaussian elimination).
inline int rank_mod_p(std::vector<std::vector<std::int64_t>> m, std::int64_t prime = 1000003)
{
    auto mod = [&](std::int64_t x) { return ((x % prime) + prime) % prime; };
    auto inv = [&](std::int64_t a) {
        std::int64_t r = 1, e = prime - 2;
        a = mod(a);
        while (e) {
            if (e & 1)
                r = r * a % prime;
            a = a * a % prime;
            e >>= 1;
        }
        return r;
    };
    const std::size_t rows = m.size(), cols = rows ? m[0].size() : 0;
    for (auto& r : m)
        for (auto& x : r)
            x = mod(x);
    int rank = 0;
    std::size_t pr = 0;
    for (std::size_t c = 0; c < cols && pr < rows; ++c) {
        std::size_t piv = pr;
        while (piv < rows && m[piv][c] == 0)
            ++piv;
        if (piv == rows)
            continue;
        std::swap(m[piv], m[pr]);
        const std::int64_t iv = inv(m[pr][c]);
        for (std::size_t r = pr + 1; r < rows; ++r) {
            if (m[r][c] == 0)
                continue;
            const std::int64_t factor = m[r][c] * iv % prime;
            for (std::size_t k = c; k < cols; ++k)
                m[r][k] = mod(m[r][k] - factor * m[pr][k]);
        }
        ++pr;
        ++rank;
    }
    return rank;
}

/// Betti numbers from dimensions and signed incidences (cell -> list of (face, sign)).
inline std::vector<int> betti_mod_p(const std::vector<int>& dims,
                                    const std::vector<std::vector<std::pair<int, int>>>& boundary,
                                    const std::vector<bool>* active = nullptr)
{
    const int top = dims.empty() ? 0 : *std::max_element(dims.begin(), dims.end());
    std::vector<std::vector<int>> by_dim(static_cast<std::size_t>(top) + 1);
    std::vector<int> local(dims.size(), -1);
    for (std::size_t c = 0; c < dims.size(); ++c)
        if (!active || (*active)[c]) {
            auto& v = by_dim[static_cast<std::size_t>(dims[c])];
            local[c] = static_cast<int>(v.size());
            v.push_back(static_cast<int>(c));
        }
    std::vector<int> ranks(static_cast<std::size_t>(top) + 2, 0);
    for (int k = 1; k <= top; ++k) {
        const auto& cols = by_dim[static_cast<std::size_t>(k)];
        const auto& rows = by_dim[static_cast<std::size_t>(k - 1)];
        if (cols.empty() || rows.empty())
            continue;
        std::vector<std::vector<std::int64_t>> m(rows.size(), std::vector<std::int64_t>(cols.size(), 0));
        for (std::size_t j = 0; j < cols.size(); ++j)
            for (const auto& [face, sign] : boundary[static_cast<std::size_t>(cols[j])])
                if (local[static_cast<std::size_t>(face)] >= 0)
                    m[static_cast<std::size_t>(local[static_cast<std::size_t>(face)])][j] += sign;
        ranks[static_cast<std::size_t>(k)] = rank_mod_p(m);
    }
    std::vector<int> b;
    for (int k = 0; k <= top; ++k)
        b.push_back(static_cast<int>(by_dim[static_cast<std::size_t>(k)].size()) - ranks[static_cast<std::size_t>(k)] -
                    ranks[static_cast<std::size_t>(k) + 1]);
    return b;
}

/// 0-dimensional sublevel persistence of a PL function on the n-cycle by
/// union-find with the elder rule. Returns sorted (birth, death) of finite bars
/// with death > birth, plus the global minimum as the essential class.
struct Bars {
    std::vector<std::pair<double, double>> finite;
    double essential = 0;
};

inline Bars cycle_persistence(const std::vector<double>& v)
{
    const int n = static_cast<int>(v.size());
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    auto less = [&](int a, int b) { return v[static_cast<std::size_t>(a)] < v[static_cast<std::size_t>(b)] || (v[static_cast<std::size_t>(a)] == v[static_cast<std::size_t>(b)] && a < b); };
    std::sort(order.begin(), order.end(), less);
    std::vector<int> parent(static_cast<std::size_t>(n), -1), root_min(static_cast<std::size_t>(n), -1);
    std::function<int(int)> find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x)
            x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
        return x;
    };
    Bars bars;
    // edges enter at the max of their endpoints; process vertex by vertex
    for (int u : order) {
        parent[static_cast<std::size_t>(u)] = u;
        root_min[static_cast<std::size_t>(u)] = u;
        for (int w : {(u + n - 1) % n, (u + 1) % n}) {
            if (parent[static_cast<std::size_t>(w)] < 0)
                continue;
            int a = find(u), b = find(w);
            if (a == b)
                continue;
            int ma = root_min[static_cast<std::size_t>(a)], mb = root_min[static_cast<std::size_t>(b)];
            // the younger component dies
            if (less(ma, mb)) {
                std::swap(a, b);
                std::swap(ma, mb);
            }
            const double birth = v[static_cast<std::size_t>(ma)], death = v[static_cast<std::size_t>(u)];
            if (death > birth)
                bars.finite.emplace_back(birth, death);
            parent[static_cast<std::size_t>(a)] = b;
        }
    }
    bars.essential = v[static_cast<std::size_t>(order.front())];
    std::sort(bars.finite.begin(), bars.finite.end());
    return bars;
}

}  // namespace oracle
