#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mbw/landscape.hpp"

namespace mbw {

struct Face {
    int cell = 0;
    int sign = 1;
};

/// Position of a cubical cell: lower-left vertex plus which directions it spans.
struct GridSlot {
    int i = 0;
    int j = 0;
    bool spans_x = false;
    bool spans_y = false;
};

struct Cell {
    int id = 0;
    int dim = 0;
    std::vector<Face> boundary;
    double filtration_value = 0.0;
    int order_index = 0;
    int max_vertex = 0;  // vertex realizing the lower-star value
    std::array<double, 2> barycenter{};
    GridSlot slot;  // meaningful for cubical complexes only
};

struct CubicalGrid {
    int nx = 0;
    int ny = 1;
    bool periodic_x = true;
    bool periodic_y = true;
    double dx = 1.0;
    double dy = 1.0;
    int dim() const { return ny > 1 ? 2 : 1; }
};

enum class CellMark { Active, Quotiented, Dropped };

struct WindowSpec {
    double a = -std::numeric_limits<double>::infinity();
    double b = std::numeric_limits<double>::infinity();
    bool is_full() const { return !std::isfinite(a) && !std::isfinite(b); }
};

class FilteredComplex {
public:
    std::vector<Cell> cells;        // ids grouped by dim: vertices, then edges, then 2-cells
    std::vector<int> order;         // cell ids in filtration order
    std::vector<double> vertex_values;
    std::vector<int> vertex_rank;   // simulation-of-simplicity rank, (value, id) lexicographic
    std::vector<CellMark> marks;    // all Active unless restricted
    WindowSpec window;
    int max_dim = 0;
    Domain domain_tag = Domain::abstract_complex();
    std::optional<CubicalGrid> grid;
    std::vector<std::string> warnings;

    int count(int dim) const;
    int euler_characteristic() const;
    const Cell& at_order(int k) const { return cells[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])]; }
    std::size_t size() const { return cells.size(); }

    /// Exact integer check of boundary(boundary(c)) == 0 for every cell.
    bool boundary_squared_zero() const;
    /// Every cell is at least as late (in value and order) as each of its faces.
    bool lower_star_monotone() const;
};

/// Vertex ids row-major (x fastest), then x-edges, then y-edges, then squares.
/// With ny == 1 and periodic_y false the complex is one-dimensional.
FilteredComplex build_cubical(const CubicalGrid& grid, const std::vector<double>& vertex_values);

/// Samples f at grid nodes of its (periodic) domain and builds the cubical complex.
FilteredComplex build_cubical_sampled(const MorseFunction& f, int resolution);

/// Oriented top simplices given as vertex lists; the face closure is generated
/// with edges oriented from the lower to the higher vertex id.
FilteredComplex build_simplicial(int dim, const std::vector<std::array<double, 3>>& positions,
                                 const std::vector<double>& values, const std::vector<std::vector<int>>& simplices);

/// Text format: header `dim nv ns`, nv lines `x y z value`, ns lines of vertex ids.
FilteredComplex load_simplicial(const std::string& path);

struct IntMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<int> row_cells;  // cell id of each row (filtration order)
    std::vector<int> col_cells;  // cell id of each column (filtration order)
    std::vector<std::vector<std::pair<int, int>>> columns;  // (row, value), rows ascending
};

/// Signed incidence from p-cells to (p-1)-cells, both in filtration order.
IntMatrix boundary_matrix(const FilteredComplex& fc, int p);

/// 1e-9 times the spread of vertex values.
double complex_value_tolerance(const FilteredComplex& fc);

/// Marks cells with value <= a as quotiented and cells with value > b as dropped.
FilteredComplex restrict_window(const FilteredComplex& fc, const WindowSpec& w);

}  // namespace mbw
