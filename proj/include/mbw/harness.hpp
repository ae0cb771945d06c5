#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mbw/asymptotics.hpp"
#include "mbw/barannikov.hpp"
#include "mbw/filtration.hpp"
#include "mbw/landscape.hpp"
#include "mbw/witten.hpp"

namespace mbw {

inline constexpr const char* kVersion = "1.0.0";

struct ExperimentConfig {
    std::string name = "experiment";
    std::string base_dir = ".";
    std::string domain = "circle";  // circle | torus | complex
    double length_x = 6.283185307179586;
    double length_y = 6.283185307179586;
    std::vector<TrigTerm> terms;
    std::string samples;
    int samples_nx = 0;
    int samples_ny = 0;
    std::string complex_file;
    int resolution = 1024;
    int seed_resolution = 64;
    std::vector<double> hs;
    std::vector<int> degrees{0};
    std::optional<WindowSpec> window;
    std::map<int, double> kappa;
    Scheme scheme = Scheme::ConjugatedDEC;
    int k = 4;
    std::string output = "out";
    std::optional<double> noise_floor;
    std::optional<double> match_tol;
    bool perturb_on_violation = true;
    bool oracle = true;
    double band_c = 1.5;
    double slope_tol = 0.02;
    double prefactor_tol = 0.10;
    std::uint64_t seed = 1;
};

/// `key = value` lines; `#` starts a comment; `term` may repeat.
ExperimentConfig parse_config(const std::string& text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);
void validate_config(const ExperimentConfig& cfg);
std::string canonical_config(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

/// The Morse function described by the config (circle or torus domains).
MorseFunction make_function(const ExperimentConfig& cfg);

struct Analysis {
    std::optional<MorseFunction> function;
    std::vector<std::string> warnings;
    HypothesisReport hypotheses;
    FilteredComplex complex;
    PersistencePairing pairing;
    BarannikovComplex barannikov;
    GapReport gaps;
    std::optional<bool> oracle_agrees;
    std::string oracle_note;
    PredictionSet predictions;
    std::optional<PredictionSet> relative;
    std::optional<RelativeBasis> basis;
    int perturbations = 0;
};

/// landscape -> filtration -> barannikov -> asymptotics.
Analysis run_analysis(const ExperimentConfig& cfg);

struct CommandResult {
    int status = 0;  // 0 pass, 1 verification failure
    std::string summary;
};

CommandResult cmd_analyze(const ExperimentConfig& cfg, const std::string& out_dir);
CommandResult cmd_verify(const ExperimentConfig& cfg, const std::string& out_dir);
CommandResult cmd_persistence(const ExperimentConfig& cfg, const std::string& out_dir);
CommandResult cmd_persistence_file(const std::string& complex_path, const std::string& out_dir);
/// Built-in suites; inject_fault corrupts one incidence sign per complex.
CommandResult cmd_selftest(std::uint64_t seed, const std::string& out_dir, bool inject_fault = false);
/// Recomputes every verdict from comparison.csv and fits.csv in dir.
CommandResult cmd_report(const std::string& dir);

/// Same points, indices, classes and partners.
bool same_classification(const BarannikovComplex& a, const BarannikovComplex& b, std::string* why = nullptr);

enum class Topology { Circle, Disk, Torus, Sphere };
std::string_view to_string(Topology t);

/// Lower-star complex with uniform random vertex values, at most 500 cells.
FilteredComplex random_complex(Topology t, std::mt19937_64& rng);

/// Octahedron, optionally subdivided `levels` times (4 triangles per step).
FilteredComplex octahedron_sphere(int levels, const std::vector<double>* values = nullptr);

/// SVG plot of log(lambda/h) against 1/h with predicted lines.
struct PlotSeries {
    std::string label;
    std::vector<std::pair<double, double>> measured;  // (h, lambda)
    double coefficient = 0.0;                         // kappa^2 * coefficient
    double activation = 0.0;
};
std::string arrhenius_svg(const std::vector<PlotSeries>& series);

}  // namespace mbw
