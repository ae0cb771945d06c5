#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "mbw/barannikov.hpp"
#include "mbw/error.hpp"
#include "mbw/filtration.hpp"
#include "oracles.hpp"

using namespace mbw;
constexpr double kPi = std::numbers::pi;

namespace {

std::string asset(const char* name) { return std::string(MBW_SOURCE_DIR) + "/assets/" + name; }

std::vector<int> oracle_betti(const FilteredComplex& fc, bool active_only = false)
{
    std::vector<int> dims;
    std::vector<std::vector<std::pair<int, int>>> bd;
    std::vector<bool> active;
    for (const auto& c : fc.cells) {
        dims.push_back(c.dim);
        std::vector<std::pair<int, int>> b;
        for (const auto& f : c.boundary)
            b.emplace_back(f.cell, f.sign);
        bd.push_back(b);
        active.push_back(fc.marks[static_cast<std::size_t>(c.id)] != CellMark::Dropped);
    }
    return oracle::betti_mod_p(dims, bd, active_only ? &active : nullptr);
}

ErrorCode code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::UsageError;
}

std::string write_temp(const std::string& name, const std::string& text)
{
    const auto dir = std::filesystem::temp_directory_path() / "mbw_filtration_tests";
    std::filesystem::create_directories(dir);
    const auto path = dir / name;
    std::ofstream(path) << text;
    return path.string();
}

}  // namespace

TEST_CASE("cubical counts and Euler characteristics")
{
    CubicalGrid circle;
    circle.nx = 8;
    circle.ny = 1;
    circle.periodic_y = false;
    const auto c = build_cubical(circle, std::vector<double>(8, 0.0));
    CHECK(c.count(0) == 8);
    CHECK(c.count(1) == 8);
    CHECK(c.euler_characteristic() == 0);
    CHECK(c.boundary_squared_zero());

    CubicalGrid torus;
    torus.nx = torus.ny = 4;
    const auto t = build_cubical(torus, std::vector<double>(16, 0.0));
    CHECK(t.count(0) == 16);
    CHECK(t.count(1) == 32);
    CHECK(t.count(2) == 16);
    CHECK(t.euler_characteristic() == 0);
    CHECK(oracle_betti(t) == std::vector<int>{1, 2, 1});

    CubicalGrid disk;
    disk.nx = disk.ny = 3;
    disk.periodic_x = disk.periodic_y = false;
    const auto d = build_cubical(disk, std::vector<double>(9, 0.0));
    CHECK(d.count(0) == 9);
    CHECK(d.count(1) == 12);
    CHECK(d.count(2) == 4);
    CHECK(d.euler_characteristic() == 1);
    CHECK(oracle_betti(d) == std::vector<int>{1, 0, 0});
}

TEST_CASE("lower-star values and order")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    CubicalGrid g;
    g.nx = 5;
    g.ny = 6;
    std::vector<double> v(30);
    for (auto& x : v)
        x = u(rng);
    const auto fc = build_cubical(g, v);
    CHECK(fc.lower_star_monotone());
    CHECK(fc.boundary_squared_zero());
    for (const auto& c : fc.cells) {
        double mx = -1;
        if (c.dim == 0)
            mx = v[static_cast<std::size_t>(c.id)];
        for (const auto& f : c.boundary)
            mx = std::max(mx, fc.cells[static_cast<std::size_t>(f.cell)].filtration_value);
        CHECK(c.filtration_value == mx);
        CHECK(fc.order[static_cast<std::size_t>(c.order_index)] == c.id);
    }
    for (std::size_t k = 1; k < fc.order.size(); ++k)
        CHECK(fc.at_order(static_cast<int>(k - 1)).filtration_value <= fc.at_order(static_cast<int>(k)).filtration_value);
}

TEST_CASE("ties are broken by vertex id")
{
    CubicalGrid g;
    g.nx = 4;
    g.ny = 1;
    g.periodic_y = false;
    const auto fc = build_cubical(g, {1.0, 1.0, 1.0, 1.0});
    for (int k = 0; k < 4; ++k)
        CHECK(fc.vertex_rank[static_cast<std::size_t>(k)] == k);
    CHECK(fc.at_order(0).id == 0);
}

TEST_CASE("simplicial assets")
{
    const auto oct = load_simplicial(asset("octahedron.txt"));
    CHECK(oct.euler_characteristic() == 2);
    CHECK(oct.boundary_squared_zero());
    CHECK(oracle_betti(oct) == std::vector<int>{1, 0, 1});

    const auto t7 = load_simplicial(asset("torus7.txt"));
    CHECK(t7.count(0) == 7);
    CHECK(t7.count(1) == 21);
    CHECK(t7.count(2) == 14);
    CHECK(t7.euler_characteristic() == 0);
    CHECK(oracle_betti(t7) == std::vector<int>{1, 2, 1});

    const auto g2 = load_simplicial(asset("genus2.txt"));
    CHECK(g2.euler_characteristic() == -2);
    CHECK(g2.boundary_squared_zero());
    CHECK(g2.lower_star_monotone());
    CHECK(g2.warnings.empty());
}

TEST_CASE("boundary matrices")
{
    CubicalGrid g;
    g.nx = 3;
    g.ny = 1;
    g.periodic_y = false;
    const auto circle = build_cubical(g, {0.0, 1.0, 2.0});
    const IntMatrix m = boundary_matrix(circle, 1);
    CHECK(m.rows == 3);
    CHECK(m.cols == 3);
    for (const auto& col : m.columns) {
        int sum = 0;
        for (const auto& [r, v] : col)
            sum += v;
        CHECK(sum == 0);
        CHECK(col.size() == 2);
    }

    g.periodic_x = false;
    const auto interval = build_cubical(g, {0.0, 1.0, 2.0});
    const IntMatrix im = boundary_matrix(interval, 1);
    CHECK(im.rows == 3);
    CHECK(im.cols == 2);
    for (const auto& col : im.columns) {
        REQUIRE(col.size() == 2);
        CHECK(col[0].second * col[1].second == -1);
    }

    // d1 d2 = 0 as integer matrices in filtration order
    CubicalGrid t;
    t.nx = 4;
    t.ny = 3;
    std::vector<double> v(12);
    for (int i = 0; i < 12; ++i)
        v[static_cast<std::size_t>(i)] = std::sin(1.7 * i);
    const auto fc = build_cubical(t, v);
    const IntMatrix d1 = boundary_matrix(fc, 1), d2 = boundary_matrix(fc, 2);
    CHECK(d1.cols == d2.rows);
    for (const auto& col : d2.columns) {
        std::vector<int> acc(static_cast<std::size_t>(d1.rows), 0);
        for (const auto& [r, s] : col)
            for (const auto& [rr, ss] : d1.columns[static_cast<std::size_t>(r)])
                acc[static_cast<std::size_t>(rr)] += s * ss;
        for (int x : acc)
            CHECK(x == 0);
    }
}

TEST_CASE("windows")
{
    CubicalGrid g;
    g.nx = 256;
    g.ny = 1;
    g.periodic_y = false;
    g.dx = 2 * kPi / 256;
    std::vector<double> v(256);
    const auto dw = oracle::double_well();
    for (int i = 0; i < 256; ++i)
        v[static_cast<std::size_t>(i)] = dw.f(i * g.dx);
    const auto fc = build_cubical(g, v);

    const auto same = restrict_window(fc, WindowSpec{});
    for (auto m : same.marks)
        CHECK(m == CellMark::Active);

    // a between the two minima: the deeper well is quotiented
    const auto crit = oracle::critical_points(dw);
    const double a = 0.5 * (crit[0].value + crit[1].value);
    const auto w = restrict_window(fc, {a, INFINITY});
    int quotiented = 0;
    for (std::size_t i = 0; i < w.cells.size(); ++i) {
        const bool below = w.cells[i].filtration_value <= a;
        CHECK((w.marks[i] == CellMark::Quotiented) == below);
        quotiented += below && w.cells[i].dim == 0;
    }
    CHECK(quotiented > 0);
    const RankOracle ro(fc);
    const auto rel = relative_betti(ro, {a, INFINITY});
    // (circle, interval): H0 vanishes, H1 is one-dimensional
    CHECK(rel == std::vector<int>{0, 1});
    const auto abs = relative_betti(ro, WindowSpec{});
    CHECK(abs == std::vector<int>{1, 1});

    CHECK(code_of([&] { restrict_window(fc, {1.0, 0.0}); }) == ErrorCode::BoundaryMismatch);
    CHECK(code_of([&] { restrict_window(fc, {v[10], INFINITY}); }) == ErrorCode::WindowOnCriticalValue);
}

TEST_CASE("torus window below the minimum keeps the pairing")
{
    CubicalGrid g;
    g.nx = g.ny = 12;
    std::vector<double> v(144);
    for (int j = 0; j < 12; ++j)
        for (int i = 0; i < 12; ++i)
            v[static_cast<std::size_t>(j * 12 + i)] = std::cos(2 * kPi * i / 12) + std::cos(2 * kPi * j / 12) + 0.01 * i;
    const auto fc = build_cubical(g, v);
    const auto w = restrict_window(fc, {-5.0, INFINITY});
    const auto a = reduce(fc), b = reduce(w);
    REQUIRE(a.pairs.size() == b.pairs.size());
    for (std::size_t i = 0; i < a.pairs.size(); ++i) {
        CHECK(a.pairs[i].birth_cell == b.pairs[i].birth_cell);
        CHECK(a.pairs[i].death_cell == b.pairs[i].death_cell);
    }
}

TEST_CASE("errors")
{
    CubicalGrid big;
    big.nx = 5000;
    big.ny = 5000;
    CHECK(code_of([&] { build_cubical(big, {}); }) == ErrorCode::SizeExceeded);
    CubicalGrid g;
    g.nx = 4;
    g.ny = 1;
    g.periodic_y = false;
    CHECK(code_of([&] { build_cubical(g, {0, 1, NAN, 2}); }) == ErrorCode::NonFiniteValue);
    CHECK(code_of([&] { build_cubical(g, {0, 1}); }) == ErrorCode::ConfigError);

    CHECK(code_of([&] { load_simplicial(write_temp("bad.txt", "2 3\n")); }) == ErrorCode::ParseError);
    CHECK(code_of([&] {
              load_simplicial(write_temp("dup.txt", "2 3 2\n0 0 0 0\n1 0 0 1\n0 1 0 2\n0 1 2\n0 1 2\n"));
          }) == ErrorCode::ParseError);
    CHECK(code_of([&] {
              load_simplicial(write_temp("range.txt", "2 3 1\n0 0 0 0\n1 0 0 1\n0 1 0 2\n0 1 7\n"));
          }) == ErrorCode::ParseError);
    // two triangles traversing edge 0-1 in the same direction
    CHECK(code_of([&] {
              load_simplicial(write_temp("orient.txt", "2 4 2\n0 0 0 0\n1 0 0 1\n0 1 0 2\n0 -1 0 3\n0 1 2\n0 1 3\n"));
          }) == ErrorCode::OrientationError);
    const auto nm = load_simplicial(
        write_temp("nonmanifold.txt", "2 5 3\n0 0 0 0\n1 0 0 1\n0 1 0 2\n0 -1 0 3\n0 0 1 4\n0 1 2\n1 0 3\n0 1 4\n"));
    CHECK_FALSE(nm.warnings.empty());
}

TEST_CASE("sampled cubical complexes")
{
    const MorseFunction f = make_trig_polynomial("c", Domain::torus(2 * kPi, 2 * kPi), {{TrigTerm::Kind::Cos, 1, 1, 1.0}});
    const auto fc = build_cubical_sampled(f, 16);
    REQUIRE(fc.grid.has_value());
    CHECK(fc.grid->nx == 16);
    CHECK(fc.grid->dx == doctest::Approx(2 * kPi / 16));
    CHECK(fc.vertex_values[17] == doctest::Approx(std::cos(2 * 2 * kPi / 16)));
    CHECK(complex_value_tolerance(fc) == doctest::Approx(2e-9).epsilon(1e-6));
}
