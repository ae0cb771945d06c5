#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mbw/filtration.hpp"
#include "mbw/landscape.hpp"

namespace mbw {

struct PersistencePair {
    int birth_cell = 0;
    int death_cell = 0;
    double birth_value = 0.0;
    double death_value = 0.0;
    int degree = 0;
};

struct Essential {
    int cell = 0;
    double value = 0.0;
    int degree = 0;
};

struct PersistencePairing {
    std::vector<PersistencePair> pairs;
    std::vector<Essential> essentials;
};

/// Twist reduction of the boundary matrix over the active cells (quotiented
/// faces are zero, dropped cells absent). Integer fraction-free elimination.
PersistencePairing reduce(const FilteredComplex& fc);

struct BarannikovComplex {
    std::vector<CriticalPoint> points;  // ids index this vector
    std::map<int, int> pairing;         // upper id -> lower id
    std::vector<int> betti;             // per degree
    std::vector<std::vector<int>> degree_lists;  // ids per degree, ascending value

    const CriticalPoint& point(int id) const { return points[static_cast<std::size_t>(id)]; }
    int max_degree() const { return static_cast<int>(betti.size()) - 1; }
};

struct MatchOptions {
    double noise_floor = 0.0;
    double match_tol = 0.0;
};

/// Grid defaults: noise floor is twice the largest value jump across one cell,
/// match tolerance is 10 * max|Hess| * spacing^2.
MatchOptions grid_match_options(const FilteredComplex& fc, std::span<const CriticalPoint> pts);

/// Significant persistence events mapped onto known critical points.
BarannikovComplex match_cells_to_points(const FilteredComplex& fc, const PersistencePairing& pp,
                                        std::vector<CriticalPoint> pts, const MatchOptions& opt);

/// Points synthesized from significant events of an abstract complex, with unit
/// Hessians (p eigenvalues -1, the rest +1). Ids follow (value, order index).
BarannikovComplex points_from_pairing(const FilteredComplex& fc, const PersistencePairing& pp, double noise_floor = 0.0);

std::vector<int> betti(const BarannikovComplex& bc);

/// Checks the partition, the pairing structure and the Betti counts. Returns
/// an empty string when everything holds, otherwise the first failure.
std::string check_structure(const BarannikovComplex& bc);

/// Barrier gaps f(upper) - f(lower), ascending, with the pairwise-distinct verdict.
struct GapReport {
    bool distinct = true;
    std::vector<std::pair<double, int>> gaps;  // (gap, upper id)
};
GapReport check_gap_hypothesis(const BarannikovComplex& bc);

enum class GeneratorReason { HomologicalInM, UpperWithPartnerBelowA, LowerWithPartnerAboveB };
std::string_view to_string(GeneratorReason r);

struct Generator {
    int point_id = 0;
    GeneratorReason reason = GeneratorReason::HomologicalInM;
    int degree = 0;
};

struct RelativeBasis {
    WindowSpec window;
    std::vector<Generator> generators;
    std::vector<int> ranks;  // generator count per degree
};

RelativeBasis relative_basis(const BarannikovComplex& bc, const WindowSpec& w);

/// One record per point: id, degree, value, class, partner, gap.
std::string format_classification(const BarannikovComplex& bc);

// ---- rank oracle -------------------------------------------------------

/// Exact rational with 64-bit numerator and denominator; overflow throws.
class Rational {
public:
    Rational(std::int64_t n = 0, std::int64_t d = 1);
    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    bool is_zero() const { return num_ == 0; }
    Rational operator+(const Rational& o) const;
    Rational operator-(const Rational& o) const;
    Rational operator*(const Rational& o) const;
    Rational operator/(const Rational& o) const;
    bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }

private:
    std::int64_t num_;
    std::int64_t den_;
};

/// Homology ranks of sub-quotients K_j / K_q of the filtration by order index,
/// by Gaussian elimination over the rationals.
class RankOracle {
public:
    explicit RankOracle(const FilteredComplex& fc, std::size_t max_cells = 5000);

    int cells() const { return n_; }
    int max_dim() const { return max_dim_; }
    /// rank of the image H_k(K_i/K_q) -> H_k(K_j/K_q), q <= i <= j.
    int persistence(int k, int i, int j, int q) const;
    int betti(int k, int j, int q) const { return persistence(k, j, j, q); }
    /// Number of cells with value <= level.
    int cut(double level) const;

private:
    int rank(int col_dim, int col_lo, int col_hi, int row_lo, int row_hi) const;

    const FilteredComplex& fc_;
    int n_ = 0;
    int max_dim_ = 0;
};

/// A filtration interval [begin, end) holding one critical event.
struct OracleEvent {
    int begin = 0;
    int end = 0;
    int degree = 0;
    double value = 0.0;
    PointClass cls = PointClass::Unclassified;
    std::optional<int> partner;  // index into the event list
};

/// Events from lower stars: a star with one-dimensional local homology is one
/// event; a star with larger local homology is split into single-cell events.
std::vector<OracleEvent> lower_star_events(const RankOracle& oracle, const FilteredComplex& fc);

/// Classifies events by the sublevel definitions and finds partners by the
/// supremum-level characterization. Throws OracleMismatch on contradictions.
void classify_events(const RankOracle& oracle, std::vector<OracleEvent>& events);

/// Oracle classification of known critical points, one value window per point.
BarannikovComplex classify_by_rank_oracle(const FilteredComplex& fc, std::vector<CriticalPoint> pts);

/// Oracle classification of an abstract complex through its lower-star events;
/// events paired inside one star are discarded, mirroring points_from_pairing.
BarannikovComplex classify_by_rank_oracle(const FilteredComplex& fc);

/// Ranks of H_k(f^b, f^a) for each degree.
std::vector<int> relative_betti(const RankOracle& oracle, const WindowSpec& w);

}  // namespace mbw
