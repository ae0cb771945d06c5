#include "mbw/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <numbers>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "mbw/error.hpp"

namespace mbw {

namespace fs = std::filesystem;

// ---- small text helpers ------------------------------------------------

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty())
                out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty())
        out.push_back(cur);
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_short(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// Accepts plain numbers, inf/-inf and an optional `pi` suffix ("2pi").
double parse_number(const std::string& raw, const std::string& key)
{
    std::string s = trim(raw);
    if (s == "inf" || s == "+inf")
        return INFINITY;
    if (s == "-inf")
        return -INFINITY;
    double scale = 1.0;
    if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
        scale = std::numbers::pi;
        s = s.substr(0, s.size() - 2);
        if (s.empty() || s == "+")
            s = "1";
        else if (s == "-")
            s = "-1";
        else if (s.back() == '*')
            s.pop_back();
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size())
            throw std::invalid_argument(s);
        return v * scale;
    } catch (const std::exception&) {
        throw Error(ErrorCode::ConfigError, "bad number '" + raw + "' for " + key);
    }
}

int parse_int(const std::string& raw, const std::string& key)
{
    const double v = parse_number(raw, key);
    if (v != std::floor(v) || std::fabs(v) > 1e9)
        throw Error(ErrorCode::ConfigError, "expected an integer for " + key + ", got '" + raw + "'");
    return static_cast<int>(v);
}

bool parse_bool(const std::string& raw, const std::string& key)
{
    const std::string s = trim(raw);
    if (s == "true" || s == "yes" || s == "1" || s == "on")
        return true;
    if (s == "false" || s == "no" || s == "0" || s == "off")
        return false;
    throw Error(ErrorCode::ConfigError, "expected a boolean for " + key + ", got '" + raw + "'");
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
    if (!out)
        throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path prepare_dir(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw Error(ErrorCode::IoError, "cannot create " + dir + ": " + ec.message());
    return fs::path(dir);
}

std::string resolve(const ExperimentConfig& cfg, const std::string& path)
{
    if (path.empty() || fs::path(path).is_absolute())
        return path;
    return (fs::path(cfg.base_dir) / path).string();
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

// ---- configuration -----------------------------------------------------

void apply_setting(ExperimentConfig& cfg, const std::string& key_raw, const std::string& value_raw)
{
    const std::string key = trim(key_raw);
    const std::string value = trim(value_raw);
    if (key == "name") {
        cfg.name = value;
    } else if (key == "domain") {
        if (value != "circle" && value != "torus" && value != "complex")
            throw Error(ErrorCode::ConfigError, "domain must be circle, torus or complex");
        cfg.domain = value;
    } else if (key == "length") {
        cfg.length_x = cfg.length_y = parse_number(value, key);
    } else if (key == "length_x") {
        cfg.length_x = parse_number(value, key);
    } else if (key == "length_y") {
        cfg.length_y = parse_number(value, key);
    } else if (key == "term") {
        const auto tok = split_list(value);
        if (tok.size() != 3 && tok.size() != 4)
            throw Error(ErrorCode::ConfigError, "term needs `cos|sin kx [ky] amplitude`");
        TrigTerm t;
        if (tok[0] == "cos")
            t.kind = TrigTerm::Kind::Cos;
        else if (tok[0] == "sin")
            t.kind = TrigTerm::Kind::Sin;
        else
            throw Error(ErrorCode::ConfigError, "term kind must be cos or sin");
        t.kx = parse_int(tok[1], key);
        t.ky = tok.size() == 4 ? parse_int(tok[2], key) : 0;
        t.amplitude = parse_number(tok.back(), key);
        cfg.terms.push_back(t);
    } else if (key == "samples") {
        cfg.samples = value;
    } else if (key == "samples_nx") {
        cfg.samples_nx = parse_int(value, key);
    } else if (key == "samples_ny") {
        cfg.samples_ny = parse_int(value, key);
    } else if (key == "complex") {
        cfg.complex_file = value;
    } else if (key == "resolution") {
        cfg.resolution = parse_int(value, key);
    } else if (key == "seed_resolution") {
        cfg.seed_resolution = parse_int(value, key);
    } else if (key == "h") {
        cfg.hs.clear();
        for (const auto& t : split_list(value))
            cfg.hs.push_back(parse_number(t, key));
    } else if (key == "degrees") {
        cfg.degrees.clear();
        for (const auto& t : split_list(value))
            cfg.degrees.push_back(parse_int(t, key));
    } else if (key == "window") {
        const auto tok = split_list(value);
        if (tok.empty() || tok[0] == "none") {
            cfg.window.reset();
            return;
        }
        if (tok.size() != 2)
            throw Error(ErrorCode::ConfigError, "window needs `a, b`");
        cfg.window = WindowSpec{parse_number(tok[0], key), parse_number(tok[1], key)};
    } else if (key == "kappa") {
        for (const auto& t : split_list(value)) {
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw Error(ErrorCode::ConfigError, "kappa needs UPPER_ID=VALUE");
            cfg.kappa[parse_int(t.substr(0, eq), key)] = parse_number(t.substr(eq + 1), key);
        }
    } else if (key == "scheme") {
        if (value == "dec")
            cfg.scheme = Scheme::ConjugatedDEC;
        else if (value == "stencil")
            cfg.scheme = Scheme::DirectStencil;
        else
            throw Error(ErrorCode::ConfigError, "scheme must be dec or stencil");
    } else if (key == "k") {
        cfg.k = parse_int(value, key);
    } else if (key == "output") {
        cfg.output = value;
    } else if (key == "noise_floor") {
        cfg.noise_floor = parse_number(value, key);
    } else if (key == "match_tol") {
        cfg.match_tol = parse_number(value, key);
    } else if (key == "perturb_on_violation") {
        cfg.perturb_on_violation = parse_bool(value, key);
    } else if (key == "oracle") {
        cfg.oracle = parse_bool(value, key);
    } else if (key == "band_c") {
        cfg.band_c = parse_number(value, key);
    } else if (key == "slope_tol") {
        cfg.slope_tol = parse_number(value, key);
    } else if (key == "prefactor_tol") {
        cfg.prefactor_tol = parse_number(value, key);
    } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(parse_int(value, key));
    } else {
        throw Error(ErrorCode::ConfigError, "unknown key '" + key + "'");
    }
}

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir)
{
    ExperimentConfig cfg;
    cfg.base_dir = base_dir;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.resize(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
        try {
            apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
        } catch (const Error& e) {
            throw Error(e.code(), "line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path)
{
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, e.what());
    }
    const fs::path parent = fs::path(path).parent_path();
    return parse_config(text, parent.empty() ? "." : parent.string());
}

void validate_config(const ExperimentConfig& cfg)
{
    auto fail = [](const std::string& what) { throw Error(ErrorCode::ConfigError, what); };
    if (cfg.domain == "complex") {
        if (cfg.complex_file.empty())
            fail("domain complex needs `complex = PATH`");
    } else {
        if (cfg.terms.empty() && cfg.samples.empty())
            fail("a circle or torus domain needs `term` lines or a samples file");
        if (!cfg.terms.empty() && !cfg.samples.empty())
            fail("give either terms or samples, not both");
        if (!(cfg.length_x > 0.0) || !(cfg.length_y > 0.0))
            fail("domain lengths must be positive");
        if (!cfg.samples.empty() && (cfg.samples_nx < 4 || (cfg.domain == "torus" && cfg.samples_ny < 4)))
            fail("samples need samples_nx (and samples_ny on a torus) of at least 4");
        if (!is_power_of_two(cfg.resolution) || cfg.resolution < 32 || cfg.resolution > 8192)
            fail("resolution must be a power of two between 32 and 8192");
        if (cfg.seed_resolution < 4)
            fail("seed_resolution must be at least 4");
    }
    for (std::size_t i = 0; i < cfg.hs.size(); ++i) {
        if (!(cfg.hs[i] > 0.0) || !std::isfinite(cfg.hs[i]))
            fail("h values must be positive and finite");
        if (i > 0 && !(cfg.hs[i] < cfg.hs[i - 1]))
            fail("h list must be sorted strictly descending");
    }
    const int dim = cfg.domain == "torus" ? 2 : cfg.domain == "circle" ? 1 : 3;
    for (int p : cfg.degrees)
        if (p < 0 || p > dim)
            fail("degree " + std::to_string(p) + " is out of range");
    if (cfg.window && !(cfg.window->a < cfg.window->b))
        throw Error(ErrorCode::BoundaryMismatch, "window needs a < b");
    if (cfg.k < 1)
        fail("k must be at least 1");
    if (!(cfg.band_c > 0.0) || !(cfg.slope_tol > 0.0) || !(cfg.prefactor_tol > 0.0))
        fail("tolerances must be positive");
    if (cfg.scheme == Scheme::DirectStencil)
        for (int p : cfg.degrees)
            if (p != 0)
                fail("the stencil scheme handles degree 0 only");
}

std::string canonical_config(const ExperimentConfig& cfg)
{
    std::ostringstream out;
    out << "name=" << cfg.name << "\ndomain=" << cfg.domain << "\nlength_x=" << fmt(cfg.length_x)
        << "\nlength_y=" << fmt(cfg.length_y) << '\n';
    for (const auto& t : cfg.terms)
        out << "term=" << (t.kind == TrigTerm::Kind::Cos ? "cos" : "sin") << ' ' << t.kx << ' ' << t.ky << ' '
            << fmt(t.amplitude) << '\n';
    out << "samples=" << cfg.samples << ' ' << cfg.samples_nx << ' ' << cfg.samples_ny << "\ncomplex=" << cfg.complex_file
        << "\nresolution=" << cfg.resolution << "\nseed_resolution=" << cfg.seed_resolution << "\nh=";
    for (double h : cfg.hs)
        out << fmt(h) << ' ';
    out << "\ndegrees=";
    for (int p : cfg.degrees)
        out << p << ' ';
    out << "\nwindow=";
    if (cfg.window)
        out << fmt(cfg.window->a) << ' ' << fmt(cfg.window->b);
    out << "\nkappa=";
    for (const auto& [id, v] : cfg.kappa)
        out << id << '=' << fmt(v) << ' ';
    out << "\nscheme=" << to_string(cfg.scheme) << "\nk=" << cfg.k << "\nnoise_floor="
        << (cfg.noise_floor ? fmt(*cfg.noise_floor) : "default") << "\nmatch_tol="
        << (cfg.match_tol ? fmt(*cfg.match_tol) : "default") << "\nperturb=" << cfg.perturb_on_violation
        << "\noracle=" << cfg.oracle << "\nband_c=" << fmt(cfg.band_c) << "\nslope_tol=" << fmt(cfg.slope_tol)
        << "\nprefactor_tol=" << fmt(cfg.prefactor_tol) << '\n';
    return out.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : canonical_config(cfg)) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

MorseFunction make_function(const ExperimentConfig& cfg)
{
    const Domain dom = cfg.domain == "torus" ? Domain::torus(cfg.length_x, cfg.length_y) : Domain::circle(cfg.length_x);
    if (cfg.domain != "circle" && cfg.domain != "torus")
        throw Error(ErrorCode::UsageError, "domain '" + cfg.domain + "' has no smooth function");
    if (!cfg.terms.empty())
        return make_trig_polynomial(cfg.name, dom, cfg.terms);
    const int ny = cfg.domain == "torus" ? cfg.samples_ny : 1;
    auto values = read_samples_file(resolve(cfg, cfg.samples), static_cast<std::size_t>(cfg.samples_nx) * ny);
    return make_sampled(cfg.name, dom, cfg.samples_nx, ny, std::move(values));
}

// ---- analysis ----------------------------------------------------------

bool same_classification(const BarannikovComplex& a, const BarannikovComplex& b, std::string* why)
{
    auto say = [&](const std::string& s) {
        if (why)
            *why = s;
        return false;
    };
    if (a.points.size() != b.points.size())
        return say("point counts differ: " + std::to_string(a.points.size()) + " vs " + std::to_string(b.points.size()));
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        const auto& p = a.points[i];
        const auto& q = b.points[i];
        if (p.morse_index != q.morse_index || p.cls != q.cls || p.partner != q.partner)
            return say("point " + std::to_string(i) + ": " + std::string(to_string(p.cls)) + " vs " +
                       std::string(to_string(q.cls)));
    }
    return true;
}

namespace {

int oracle_resolution(int dim, int resolution)
{
    int r = resolution;
    while (r > 4 && (dim == 1 ? 2 * r : 4 * r * r) > 5000)
        r /= 2;
    return r;
}

int match_resolution(int dim, int resolution) { return dim == 1 ? resolution : std::min(resolution, 128); }

void analyze_function(const ExperimentConfig& cfg, const MorseFunction& f, Analysis& an)
{
    CriticalSearch cs = find_critical_points(f, cfg.seed_resolution);
    an.warnings.insert(an.warnings.end(), cs.warnings.begin(), cs.warnings.end());
    an.hypotheses = check_hypotheses(cs.points);
    const int dim = f.domain().dim();
    an.complex = build_cubical_sampled(f, match_resolution(dim, cfg.resolution));
    an.pairing = reduce(an.complex);
    MatchOptions mo = grid_match_options(an.complex, cs.points);
    if (cfg.noise_floor)
        mo.noise_floor = *cfg.noise_floor;
    if (cfg.match_tol)
        mo.match_tol = *cfg.match_tol;
    an.barannikov = match_cells_to_points(an.complex, an.pairing, cs.points, mo);
    if (cfg.oracle) {
        const int r = oracle_resolution(dim, cfg.resolution);
        const FilteredComplex small = build_cubical_sampled(f, r);
        const BarannikovComplex oc = classify_by_rank_oracle(small, cs.points);
        std::string why;
        an.oracle_agrees = same_classification(an.barannikov, oc, &why);
        an.oracle_note = "rank oracle on a " + std::to_string(r) + (dim == 2 ? "^2" : "") + " grid: " +
                         (*an.oracle_agrees ? "agrees" : "disagrees (" + why + ")");
    }
}

void analyze_complex(const ExperimentConfig& cfg, Analysis& an)
{
    an.complex = load_simplicial(resolve(cfg, cfg.complex_file));
    an.warnings.insert(an.warnings.end(), an.complex.warnings.begin(), an.complex.warnings.end());
    an.pairing = reduce(an.complex);
    an.barannikov = points_from_pairing(an.complex, an.pairing, cfg.noise_floor.value_or(0.0));
    an.hypotheses = check_hypotheses(an.barannikov.points);
    if (cfg.oracle) {
        if (an.complex.size() > 5000) {
            an.oracle_note = "rank oracle skipped: " + std::to_string(an.complex.size()) + " cells exceed 5000";
        } else {
            const BarannikovComplex oc = classify_by_rank_oracle(an.complex);
            std::string why;
            an.oracle_agrees = same_classification(an.barannikov, oc, &why);
            an.oracle_note = std::string("rank oracle on lower stars: ") +
                             (*an.oracle_agrees ? "agrees" : "disagrees (" + why + ")");
        }
    }
}

bool hypotheses_hold(const Analysis& an) { return an.hypotheses.excellent && an.gaps.distinct; }

}  // namespace

Analysis run_analysis(const ExperimentConfig& cfg_in)
{
    validate_config(cfg_in);
    ExperimentConfig cfg = cfg_in;
    Analysis an;
    constexpr int kMaxPerturbations = 8;
    for (int attempt = 0;; ++attempt) {
        an = Analysis{};
        an.perturbations = attempt;
        if (cfg.domain == "complex") {
            analyze_complex(cfg, an);
        } else {
            an.function.emplace(make_function(cfg));
            analyze_function(cfg, *an.function, an);
        }
        an.gaps = check_gap_hypothesis(an.barannikov);
        if (an.gaps.distinct)
            an.hypotheses = check_hypotheses(an.barannikov.points, &an.barannikov.pairing);
        else
            an.hypotheses.distinct_gaps = false;
        if (hypotheses_hold(an) || !cfg.perturb_on_violation || cfg.terms.empty() || attempt == kMaxPerturbations)
            break;
        // perturb the last coefficient and try again
        auto& amp = cfg.terms.back().amplitude;
        amp *= 1.0 + 1e-3;
    }
    if (an.perturbations > 0)
        an.warnings.push_back("hypotheses failed; last term amplitude perturbed " + std::to_string(an.perturbations) +
                              " time(s) to " + fmt(cfg.terms.back().amplitude));

    if (const std::string s = check_structure(an.barannikov); !s.empty())
        throw Error(ErrorCode::OracleMismatch, "boundary structure check failed: " + s);

    PredictOptions po;
    po.kappa = cfg.kappa;
    po.eig_floor = 0.0;
    an.predictions = predict_spectrum(an.barannikov, po);
    if (cfg.window) {
        an.basis = relative_basis(an.barannikov, *cfg.window);
        an.relative = predict_relative(an.barannikov, *cfg.window, po);
    }
    return an;
}

namespace {

std::string format_hypotheses(const Analysis& an)
{
    std::ostringstream out;
    out << "excellent " << (an.hypotheses.excellent ? "yes" : "no") << '\n';
    out << "distinct_values " << (an.hypotheses.distinct_values ? "yes" : "no") << '\n';
    out << "distinct_gaps " << (an.gaps.distinct ? "yes" : "no") << '\n';
    out << "perturbations " << an.perturbations << '\n';
    for (const auto& v : an.hypotheses.violations)
        out << "violation " << v.description << '\n';
    out << "# gap upper_id\n";
    for (const auto& [g, id] : an.gaps.gaps)
        out << "gap " << fmt(g) << ' ' << id << '\n';
    out << "betti";
    for (int b : an.barannikov.betti)
        out << ' ' << b;
    out << '\n';
    if (!an.oracle_note.empty())
        out << "oracle " << an.oracle_note << '\n';
    for (const auto& w : an.warnings)
        out << "warning " << w << '\n';
    return out.str();
}

std::string format_basis(const RelativeBasis& rb)
{
    std::ostringstream out;
    out << "# window " << fmt(rb.window.a) << ' ' << fmt(rb.window.b) << "\n# point degree reason\n";
    for (const auto& g : rb.generators)
        out << g.point_id << ' ' << g.degree << ' ' << to_string(g.reason) << '\n';
    out << "ranks";
    for (int r : rb.ranks)
        out << ' ' << r;
    out << '\n';
    return out.str();
}

std::string hex64(std::uint64_t v)
{
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

CommandResult cmd_analyze(const ExperimentConfig& cfg, const std::string& out_dir)
{
    const Analysis an = run_analysis(cfg);
    const fs::path dir = prepare_dir(out_dir);
    write_file(dir / "classification.txt", format_classification(an.barannikov));
    write_file(dir / "predictions.txt", format_predictions(an.predictions, cfg.hs));
    write_file(dir / "hypotheses.txt", format_hypotheses(an));
    if (an.relative) {
        write_file(dir / "relative_predictions.txt", format_predictions(*an.relative, cfg.hs));
        write_file(dir / "relative_basis.txt", format_basis(*an.basis));
    }
    CommandResult res;
    std::ostringstream s;
    s << cfg.name << ": " << an.barannikov.points.size() << " critical points, betti";
    for (int b : an.barannikov.betti)
        s << ' ' << b;
    s << ", " << an.barannikov.pairing.size() << " pairs";
    if (!an.oracle_note.empty())
        s << "; " << an.oracle_note;
    if (an.oracle_agrees && !*an.oracle_agrees)
        res.status = 1;
    res.summary = s.str();
    return res;
}

// ---- verification ------------------------------------------------------

namespace {

struct Comparison {
    double h = 0.0;
    int p = 0;
    int index = 0;
    std::string kind;  // count | pair | zero | susy
    int point = -1;
    int partner = -1;
    double predicted = 0.0;
    double measured = 0.0;
    double rel_error = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct FitRow {
    int p = 0;
    int point = 0;
    int partner = 0;
    double activation = 0.0;
    double slope = 0.0;
    double slope_rel = 0.0;
    double slope_tol = 0.0;
    double target_lp = 0.0;
    double lp = 0.0;
    double lp_rel = 0.0;
    double lp_tol = 0.0;
    double r2 = 0.0;
    int n = 0;
    bool pass = false;
};

const char* kComparisonHeader = "h,p,index,kind,point,partner,predicted,measured,rel_error,tolerance,pass";
const char* kFitHeader =
    "p,point,partner,activation,slope,slope_rel_error,slope_tol,target_log_prefactor,log_prefactor,"
    "log_prefactor_rel_error,prefactor_tol,r2,n,pass";

std::string comparison_csv(const std::vector<Comparison>& rows)
{
    std::ostringstream out;
    out << kComparisonHeader << '\n';
    for (const auto& c : rows)
        out << fmt(c.h) << ',' << c.p << ',' << c.index << ',' << c.kind << ',' << c.point << ',' << c.partner << ','
            << fmt(c.predicted) << ',' << fmt(c.measured) << ',' << fmt(c.rel_error) << ',' << fmt(c.tolerance) << ','
            << (c.pass ? "PASS" : "FAIL") << '\n';
    return out.str();
}

std::string fits_csv(const std::vector<FitRow>& rows)
{
    std::ostringstream out;
    out << kFitHeader << '\n';
    for (const auto& f : rows)
        out << f.p << ',' << f.point << ',' << f.partner << ',' << fmt(f.activation) << ',' << fmt(f.slope) << ','
            << fmt(f.slope_rel) << ',' << fmt(f.slope_tol) << ',' << fmt(f.target_lp) << ',' << fmt(f.lp) << ','
            << fmt(f.lp_rel) << ',' << fmt(f.lp_tol) << ',' << fmt(f.r2) << ',' << f.n << ','
            << (f.pass ? "PASS" : "FAIL") << '\n';
    return out.str();
}

FitRow make_fit_row(int p, int point, int partner, double activation, double target_lp,
                    const std::vector<std::pair<double, double>>& pts, double floor, double slope_tol, double lp_tol)
{
    const FitResult fr = fit_arrhenius(pts, floor);
    FitRow r;
    r.p = p;
    r.point = point;
    r.partner = partner;
    r.activation = activation;
    r.slope = fr.slope;
    r.slope_rel = (-fr.slope - activation) / activation;
    r.slope_tol = slope_tol;
    r.target_lp = target_lp;
    r.lp = fr.log_prefactor;
    r.lp_rel = (fr.log_prefactor - target_lp) / std::fabs(target_lp);
    r.lp_tol = lp_tol;
    r.r2 = fr.r2;
    r.n = static_cast<int>(pts.size());
    r.pass = std::fabs(r.slope_rel) <= slope_tol && std::fabs(r.lp_rel) <= lp_tol;
    return r;
}

// Predictions of degree p at h with their entries, ascending by value.
std::vector<std::pair<double, const SpectralPrediction*>> sorted_predictions(const PredictionSet& ps, int p, double h)
{
    std::vector<std::pair<double, const SpectralPrediction*>> out;
    if (p < 0 || static_cast<std::size_t>(p) >= ps.per_degree.size())
        return out;
    for (const auto& s : ps.per_degree[static_cast<std::size_t>(p)])
        out.emplace_back(s.eval(h), &s);
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < out.size(); ++i) {
        const double a = out[i - 1].first, b = out[i].first;
        if (a > 0.0 && std::fabs(b - a) <= 1e-9 * b)
            throw Error(ErrorCode::HypothesisViolated,
                        "tied predictions in degree " + std::to_string(p) + " at h=" + fmt(h));
    }
    return out;
}

int index_of(const std::vector<std::pair<double, const SpectralPrediction*>>& list, int point)
{
    for (std::size_t i = 0; i < list.size(); ++i)
        if (list[i].second->point_id == point)
            return static_cast<int>(i);
    return -1;
}

}  // namespace

std::string arrhenius_svg(const std::vector<PlotSeries>& series)
{
    const double W = 640, H = 420, L = 70, R = 20, T = 30, B = 50;
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    auto y_of = [](double h, double lambda) { return std::log(lambda / h); };
    auto line_y = [](const PlotSeries& s, double x) {
        return std::log(s.coefficient / std::numbers::pi) - s.activation * x;
    };
    for (const auto& s : series)
        for (const auto& [h, l] : s.measured) {
            if (!(l > 0.0))
                continue;
            xmin = std::min(xmin, 1.0 / h);
            xmax = std::max(xmax, 1.0 / h);
            ymin = std::min(ymin, y_of(h, l));
            ymax = std::max(ymax, y_of(h, l));
        }
    for (const auto& s : series)
        if (s.coefficient > 0.0 && std::isfinite(xmin))
            for (double x : {xmin, xmax}) {
                ymin = std::min(ymin, line_y(s, x));
                ymax = std::max(ymax, line_y(s, x));
            }
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!std::isfinite(xmin)) {
        out << "<text x=\"" << W / 2 << "\" y=\"" << H / 2 << "\" text-anchor=\"middle\">no positive eigenvalues to plot</text>\n</svg>\n";
        return out.str();
    }
    if (xmax - xmin < 1e-12) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax - ymin < 1e-12) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    auto X = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
    auto Y = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };
    out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double x = xmin + (xmax - xmin) * t / 4.0, y = ymin + (ymax - ymin) * t / 4.0;
        out << "<text x=\"" << X(x) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << fmt_short(x) << "</text>\n";
        out << "<text x=\"" << L - 6 << "\" y=\"" << Y(y) + 4 << "\" text-anchor=\"end\">" << fmt_short(y) << "</text>\n";
    }
    out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">1/h</text>\n";
    out << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 " << (T + H - B) / 2
        << ")\" text-anchor=\"middle\">log(lambda/h)</text>\n";
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const char* c = colors[i % 6];
        if (s.coefficient > 0.0)
            out << "<line x1=\"" << X(xmin) << "\" y1=\"" << Y(line_y(s, xmin)) << "\" x2=\"" << X(xmax) << "\" y2=\""
                << Y(line_y(s, xmax)) << "\" stroke=\"" << c << "\" stroke-dasharray=\"6 4\"/>\n";
        for (const auto& [h, l] : s.measured)
            if (l > 0.0)
                out << "<circle cx=\"" << X(1.0 / h) << "\" cy=\"" << Y(y_of(h, l)) << "\" r=\"4\" fill=\"" << c << "\"/>\n";
        out << "<text x=\"" << L + 10 << "\" y=\"" << T + 14 * (i + 1) << "\" fill=\"" << c << "\">" << s.label << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

CommandResult cmd_verify(const ExperimentConfig& cfg, const std::string& out_dir)
{
    if (cfg.domain == "complex")
        throw Error(ErrorCode::UsageError, "verify needs a circle or torus function");
    if (cfg.hs.empty())
        throw Error(ErrorCode::ConfigError, "verify needs an h list");
    const Analysis an = run_analysis(cfg);
    const PredictionSet& preds = an.relative ? *an.relative : an.predictions;
    const fs::path dir = prepare_dir(out_dir);
    write_file(dir / "classification.txt", format_classification(an.barannikov));
    write_file(dir / "predictions.txt", format_predictions(preds, cfg.hs));
    write_file(dir / "hypotheses.txt", format_hypotheses(an));

    int max_count = 0;
    for (int p : cfg.degrees)
        max_count = std::max(max_count, std::max(preds.count(p), an.predictions.count(p)));
    SweepSpec spec;
    spec.function = &*an.function;
    spec.resolution = cfg.resolution;
    spec.scheme = cfg.scheme;
    spec.window = cfg.window.value_or(WindowSpec{});
    spec.k = std::max(cfg.k, max_count + 1);

    std::map<int, std::vector<SweepRow>> rows, reference;
    for (int p : cfg.degrees) {
        rows[p] = sweep_h(spec, cfg.hs, p);
        write_file(dir / ("sweep_p" + std::to_string(p) + ".csv"), format_sweep_csv(rows[p]));
        if (cfg.window) {
            SweepSpec full = spec;
            full.window = WindowSpec{};
            reference[p] = sweep_h(full, cfg.hs, p);
            write_file(dir / ("sweep_full_p" + std::to_string(p) + ".csv"), format_sweep_csv(reference[p]));
        }
    }

    std::vector<Comparison> comps;
    // measured[(p, point)] = (h, lambda) series for pair predictions
    std::map<std::pair<int, int>, std::vector<std::pair<double, double>>> measured;
    std::map<std::pair<int, int>, double> max_floor;
    for (int p : cfg.degrees)
        for (std::size_t hi = 0; hi < cfg.hs.size(); ++hi) {
            const double h = cfg.hs[hi];
            const SweepRow& row = rows[p][hi];
            const double floor = eig_floor(row.norm);
            Comparison cc;
            cc.h = h;
            cc.p = p;
            cc.kind = "count";
            cc.predicted = preds.count(p);
            cc.measured = row.count_below_h32;
            cc.rel_error = cc.measured - cc.predicted;
            cc.pass = cc.measured == cc.predicted;
            comps.push_back(cc);

            const auto list = sorted_predictions(preds, p, h);
            for (std::size_t i = 0; i < list.size(); ++i) {
                const SpectralPrediction& s = *list[i].second;
                Comparison c;
                c.h = h;
                c.p = p;
                c.index = static_cast<int>(i);
                c.point = s.point_id;
                c.partner = s.partner_id;
                c.predicted = list[i].first;
                c.measured = i < row.eigenvalues.size() ? row.eigenvalues[i] : NAN;
                if (s.kind == PredictionKind::Pair) {
                    c.kind = "pair";
                    c.rel_error = c.measured / c.predicted - 1.0;
                    c.tolerance = cfg.band_c * h;
                    c.pass = std::fabs(c.rel_error) <= c.tolerance;
                    measured[{p, s.point_id}].emplace_back(h, c.measured);
                    max_floor[{p, s.point_id}] = std::max(max_floor[{p, s.point_id}], floor);
                } else {
                    c.kind = "zero";
                    c.tolerance = floor;
                    // a pair cut by the window: compare with the unwindowed measurement
                    if (cfg.window && s.partner_id >= 0) {
                        const auto full = sorted_predictions(an.predictions, p, h);
                        const int j = index_of(full, s.point_id);
                        const auto& ref = reference[p][hi].eigenvalues;
                        if (j >= 0 && static_cast<std::size_t>(j) < ref.size())
                            c.tolerance = 1e-3 * ref[static_cast<std::size_t>(j)];
                    }
                    c.rel_error = c.measured / c.tolerance;
                    c.pass = std::fabs(c.measured) <= c.tolerance;
                }
                comps.push_back(c);
            }
        }

    // adjacent degrees share each pair's eigenvalue
    if (cfg.scheme == Scheme::ConjugatedDEC)
        for (int p : cfg.degrees) {
            if (std::find(cfg.degrees.begin(), cfg.degrees.end(), p + 1) == cfg.degrees.end())
                continue;
            for (const auto& s : preds.nonzero(p)) {
                if (s.degree != p || s.partner_id < 0)
                    continue;
                const auto lo = measured.find({p, s.point_id});
                const auto up = measured.find({p + 1, s.partner_id});
                if (lo == measured.end() || up == measured.end())
                    continue;
                for (std::size_t i = 0; i < lo->second.size() && i < up->second.size(); ++i) {
                    Comparison c;
                    c.h = lo->second[i].first;
                    c.p = p;
                    c.kind = "susy";
                    c.point = s.point_id;
                    c.partner = s.partner_id;
                    c.predicted = lo->second[i].second;
                    c.measured = up->second[i].second;
                    c.rel_error = c.measured / c.predicted - 1.0;
                    c.tolerance = 1e-8;
                    c.pass = std::fabs(c.rel_error) <= c.tolerance;
                    comps.push_back(c);
                }
            }
        }

    std::vector<FitRow> fits;
    std::vector<PlotSeries> plot;
    std::string fit_note;
    for (const auto& [key, pts] : measured) {
        const auto [p, point] = key;
        const SpectralPrediction* sp = nullptr;
        for (const auto& s : preds.per_degree[static_cast<std::size_t>(p)])
            if (s.point_id == point)
                sp = &s;
        PlotSeries ps;
        ps.label = "p=" + std::to_string(p) + " point " + std::to_string(point);
        ps.measured = pts;
        ps.coefficient = sp->kappa * sp->kappa * sp->coefficient;
        ps.activation = sp->activation;
        plot.push_back(ps);
        if (pts.size() < 4) {
            fit_note = "Arrhenius fit skipped: fewer than 4 h values";
            continue;
        }
        fits.push_back(make_fit_row(p, point, sp->partner_id, sp->activation,
                                    std::log(ps.coefficient / std::numbers::pi), pts, max_floor[key], cfg.slope_tol,
                                    cfg.prefactor_tol));
    }
    if (measured.empty())
        fit_note = "no pair predictions in the tested degrees; Arrhenius fit not applicable";

    write_file(dir / "comparison.csv", comparison_csv(comps));
    write_file(dir / "fits.csv", fits_csv(fits));
    write_file(dir / "arrhenius.svg", arrhenius_svg(plot));

    int failures = 0;
    for (const auto& c : comps)
        failures += !c.pass;
    for (const auto& f : fits)
        failures += !f.pass;

    std::ostringstream rep;
    rep << "experiment " << cfg.name << "\nconfig_hash " << hex64(config_hash(cfg)) << "\nversion " << kVersion
        << "\nscheme " << to_string(cfg.scheme) << "\nresolution " << cfg.resolution << '\n';
    if (cfg.window)
        rep << "window " << fmt(cfg.window->a) << ' ' << fmt(cfg.window->b) << '\n';
    rep << "\n[hypotheses]\n" << format_hypotheses(an) << "\n[classification]\n"
        << format_classification(an.barannikov) << "\n[predictions]\n" << format_predictions(preds, cfg.hs)
        << "\n[spectra]\n";
    for (const auto& [p, r] : rows)
        rep << format_sweep_csv(r);
    rep << "\n[comparisons]\n" << comparison_csv(comps) << "\n[fits]\n" << fits_csv(fits);
    if (!fit_note.empty())
        rep << fit_note << '\n';
    rep << "\nverdict " << (failures == 0 ? "PASS" : "FAIL") << " (" << failures << " failed checks)\n";
    write_file(dir / "report.txt", rep.str());

    CommandResult res;
    res.status = failures == 0 ? 0 : 1;
    res.summary = cfg.name + ": " + std::to_string(comps.size()) + " comparisons, " + std::to_string(fits.size()) +
                  " fits, " + std::to_string(failures) + " failed" + (fit_note.empty() ? "" : "; " + fit_note);
    return res;
}

// ---- persistence -------------------------------------------------------

namespace {

std::string format_pairing(const PersistencePairing& pp)
{
    std::ostringstream out;
    out << "# degree birth_cell death_cell birth_value death_value\n";
    for (const auto& p : pp.pairs)
        out << p.degree << ' ' << p.birth_cell << ' ' << p.death_cell << ' ' << fmt(p.birth_value) << ' '
            << fmt(p.death_value) << '\n';
    out << "# essential: degree cell value\n";
    for (const auto& e : pp.essentials)
        out << e.degree << ' ' << e.cell << ' ' << fmt(e.value) << " inf\n";
    return out.str();
}

CommandResult persistence_common(const FilteredComplex& fc, const PersistencePairing& pp, const BarannikovComplex& bc,
                                 const std::string& out_dir)
{
    const fs::path dir = prepare_dir(out_dir);
    write_file(dir / "pairing.txt", format_pairing(pp));
    write_file(dir / "classification.txt", format_classification(bc));
    CommandResult res;
    std::ostringstream s;
    s << fc.size() << " cells, " << pp.pairs.size() << " pairs, " << pp.essentials.size() << " essential, betti";
    for (int b : bc.betti)
        s << ' ' << b;
    res.summary = s.str();
    return res;
}

}  // namespace

CommandResult cmd_persistence(const ExperimentConfig& cfg, const std::string& out_dir)
{
    validate_config(cfg);
    if (cfg.domain == "complex") {
        const FilteredComplex fc = load_simplicial(resolve(cfg, cfg.complex_file));
        const PersistencePairing pp = reduce(fc);
        return persistence_common(fc, pp, points_from_pairing(fc, pp, cfg.noise_floor.value_or(0.0)), out_dir);
    }
    const Analysis an = run_analysis(cfg);
    return persistence_common(an.complex, an.pairing, an.barannikov, out_dir);
}

CommandResult cmd_persistence_file(const std::string& complex_path, const std::string& out_dir)
{
    const FilteredComplex fc = load_simplicial(complex_path);
    const PersistencePairing pp = reduce(fc);
    return persistence_common(fc, pp, points_from_pairing(fc, pp), out_dir);
}

// ---- built-in complexes ------------------------------------------------

std::string_view to_string(Topology t)
{
    switch (t) {
    case Topology::Circle: return "circle";
    case Topology::Disk: return "disk";
    case Topology::Torus: return "torus";
    case Topology::Sphere: return "sphere";
    }
    return "?";
}

FilteredComplex octahedron_sphere(int levels, const std::vector<double>* values)
{
    std::vector<std::array<double, 3>> pos = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    std::vector<std::vector<int>> tris;
    for (int sx : {1, -1})
        for (int sy : {1, -1})
            for (int sz : {1, -1}) {
                const int a = sx > 0 ? 0 : 1, b = sy > 0 ? 2 : 3, c = sz > 0 ? 4 : 5;
                if (sx * sy * sz > 0)
                    tris.push_back({a, b, c});
                else
                    tris.push_back({a, c, b});
            }
    for (int l = 0; l < levels; ++l) {
        std::map<std::pair<int, int>, int> mid;
        auto midpoint = [&](int u, int v) {
            const auto key = std::minmax(u, v);
            if (auto it = mid.find(key); it != mid.end())
                return it->second;
            std::array<double, 3> m{};
            double n = 0.0;
            for (int k = 0; k < 3; ++k) {
                m[static_cast<std::size_t>(k)] = pos[static_cast<std::size_t>(u)][static_cast<std::size_t>(k)] +
                                                 pos[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)];
                n += m[static_cast<std::size_t>(k)] * m[static_cast<std::size_t>(k)];
            }
            for (auto& x : m)
                x /= std::sqrt(n);
            pos.push_back(m);
            return mid[key] = static_cast<int>(pos.size()) - 1;
        };
        std::vector<std::vector<int>> next;
        for (const auto& t : tris) {
            const int ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
            next.push_back({t[0], ab, ca});
            next.push_back({ab, t[1], bc});
            next.push_back({ca, bc, t[2]});
            next.push_back({ab, bc, ca});
        }
        tris = std::move(next);
    }
    std::vector<double> v;
    if (values) {
        if (values->size() != pos.size())
            throw Error(ErrorCode::UsageError, "octahedron_sphere: wrong number of values");
        v = *values;
    } else {
        for (const auto& p : pos)
            v.push_back(p[2] + 0.1 * p[0] + 0.01 * p[1]);
    }
    return build_simplicial(2, pos, v, tris);
}

FilteredComplex random_complex(Topology t, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> value(0.0, 1.0);
    auto draw = [&](std::size_t n) {
        std::vector<double> v(n);
        for (auto& x : v)
            x = value(rng);
        return v;
    };
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    CubicalGrid g;
    switch (t) {
    case Topology::Circle:
        g.nx = pick(4, 200);
        g.ny = 1;
        g.periodic_y = false;
        return build_cubical(g, draw(static_cast<std::size_t>(g.nx)));
    case Topology::Disk:
        g.nx = pick(2, 10);
        g.ny = pick(2, 10);
        g.periodic_x = g.periodic_y = false;
        return build_cubical(g, draw(static_cast<std::size_t>(g.nx * g.ny)));
    case Topology::Torus:
        g.nx = pick(3, 10);
        g.ny = pick(3, 10);
        return build_cubical(g, draw(static_cast<std::size_t>(g.nx * g.ny)));
    case Topology::Sphere: {
        const int levels = pick(0, 2);
        const std::size_t nv = levels == 0 ? 6 : levels == 1 ? 18 : 66;
        const auto v = draw(nv);
        return octahedron_sphere(levels, &v);
    }
    }
    throw Error(ErrorCode::UsageError, "unknown topology");
}

// ---- selftest ----------------------------------------------------------

namespace {

struct SuiteLine {
    std::string name;
    bool pass = false;
    std::string detail;
};

MorseFunction builtin_double_well()
{
    return make_trig_polynomial("double_well", Domain::circle(2.0 * std::numbers::pi),
                                {{TrigTerm::Kind::Cos, 2, 0, 0.5},
                                 {TrigTerm::Kind::Sin, 1, 0, 0.225},
                                 {TrigTerm::Kind::Cos, 1, 0, 0.25}});
}

MorseFunction builtin_torus()
{
    return make_trig_polynomial("torus", Domain::torus(2.0 * std::numbers::pi, 2.0 * std::numbers::pi),
                                {{TrigTerm::Kind::Cos, 1, 0, 1.0},
                                 {TrigTerm::Kind::Cos, 0, 1, 1.0},
                                 {TrigTerm::Kind::Sin, 1, 2, 0.3}});
}

// nonzero singular values squared of d, from both Gram products
double susy_mismatch(const SparseMatrix& d)
{
    const Eigen::MatrixXd m(d);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> a(m.transpose() * m, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> b(m * m.transpose(), Eigen::EigenvaluesOnly);
    auto nonzero = [](const Eigen::VectorXd& ev) {
        const double top = ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0;
        std::vector<double> out;
        for (Eigen::Index i = 0; i < ev.size(); ++i)
            if (ev[i] > 1e-10 * top)
                out.push_back(ev[i]);
        return out;
    };
    const auto x = nonzero(a.eigenvalues()), y = nonzero(b.eigenvalues());
    if (x.size() != y.size())
        return INFINITY;
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        worst = std::max(worst, std::fabs(x[i] - y[i]) / y[i]);
    return worst;
}

using Signature = std::vector<std::vector<std::pair<double, double>>>;

// (activation, coefficient) of every pair touching each degree
Signature pair_signature(const BarannikovComplex& bc, int dim)
{
    Signature out(static_cast<std::size_t>(dim) + 1);
    for (const auto& [upper, lower] : bc.pairing) {
        const auto& u = bc.point(upper);
        const auto& l = bc.point(lower);
        const std::pair<double, double> sig{2.0 * (u.value - l.value), prefactor_coefficient(l, u)};
        out[static_cast<std::size_t>(l.morse_index)].push_back(sig);
        out[static_cast<std::size_t>(u.morse_index)].push_back(sig);
    }
    for (auto& v : out)
        std::sort(v.begin(), v.end());
    return out;
}

bool dual_signatures_match(const BarannikovComplex& a, const BarannikovComplex& b, int dim)
{
    const Signature x = pair_signature(a, dim), y = pair_signature(b, dim);
    for (int p = 0; p <= dim; ++p)
        if (x[static_cast<std::size_t>(p)] != y[static_cast<std::size_t>(dim - p)])
            return false;
    return true;
}

bool dual_predictions_match(const PredictionSet& a, const PredictionSet& b, int dim)
{
    auto sig = [](const PredictionSet& ps, int p) {
        std::vector<std::pair<double, double>> out;
        for (const auto& s : ps.nonzero(p))
            out.emplace_back(s.activation, s.coefficient);
        std::sort(out.begin(), out.end());
        return out;
    };
    for (int p = 0; p <= dim; ++p)
        if (sig(a, p) != sig(b, dim - p))
            return false;
    return true;
}

FilteredComplex with_negated_values(const FilteredComplex& fc)
{
    if (fc.grid) {
        std::vector<double> v = fc.vertex_values;
        for (auto& x : v)
            x = -x;
        return build_cubical(*fc.grid, v);
    }
    throw Error(ErrorCode::UsageError, "negation needs a cubical complex");
}

std::string betti_string(const std::vector<int>& b)
{
    std::string s = "(";
    for (std::size_t i = 0; i < b.size(); ++i)
        s += (i ? "," : "") + std::to_string(b[i]);
    return s + ")";
}

}  // namespace

CommandResult cmd_selftest(std::uint64_t seed, const std::string& out_dir, bool inject_fault)
{
    std::vector<SuiteLine> lines;
    std::mt19937_64 rng(seed);

    // boundary of boundary
    {
        std::vector<FilteredComplex> cases;
        CubicalGrid g;
        g.nx = 4;
        g.ny = 4;
        cases.push_back(build_cubical(g, std::vector<double>(16, 0.0)));
        g.periodic_x = g.periodic_y = false;
        cases.push_back(build_cubical(g, std::vector<double>(16, 0.0)));
        cases.push_back(octahedron_sphere(1));
        for (auto t : {Topology::Circle, Topology::Disk, Topology::Torus, Topology::Sphere})
            cases.push_back(random_complex(t, rng));
        if (inject_fault)
            for (auto& fc : cases)
                for (auto& c : fc.cells)
                    if (c.dim == 2) {
                        c.boundary.front().sign = -c.boundary.front().sign;
                        break;
                    }
        int bad = 0;
        for (const auto& fc : cases)
            bad += !fc.boundary_squared_zero() || !fc.lower_star_monotone();
        lines.push_back({"boundary_squared_zero", bad == 0,
                         std::to_string(cases.size() - static_cast<std::size_t>(bad)) + "/" + std::to_string(cases.size()) +
                             " complexes" + (inject_fault ? " (fault injected)" : "")});
    }

    // Betti numbers of the standard topologies, by reduction and by the oracle
    {
        struct Case {
            std::string name;
            FilteredComplex fc;
            std::vector<int> expect;
        };
        std::vector<Case> cases;
        CubicalGrid g;
        g.nx = 9;
        g.ny = 1;
        g.periodic_y = false;
        std::vector<double> v(9);
        for (int i = 0; i < 9; ++i)
            v[static_cast<std::size_t>(i)] = std::cos(2.0 * std::numbers::pi * i / 9.0);
        cases.push_back({"circle", build_cubical(g, v), {1, 1}});
        g = CubicalGrid{};
        g.nx = g.ny = 6;
        std::vector<double> w(36);
        for (int j = 0; j < 6; ++j)
            for (int i = 0; i < 6; ++i)
                w[static_cast<std::size_t>(j * 6 + i)] = std::cos(2.0 * std::numbers::pi * i / 6.0) +
                                                         std::cos(2.0 * std::numbers::pi * j / 6.0) + 0.01 * i + 0.001 * j;
        cases.push_back({"torus", build_cubical(g, w), {1, 2, 1}});
        g.periodic_x = g.periodic_y = false;
        cases.push_back({"disk", build_cubical(g, w), {1, 0, 0}});
        cases.push_back({"sphere", octahedron_sphere(1), {1, 0, 1}});
        for (const auto& c : cases) {
            const BarannikovComplex bc = points_from_pairing(c.fc, reduce(c.fc));
            const RankOracle oracle(c.fc);
            const auto rb = relative_betti(oracle, WindowSpec{});
            std::vector<int> expect = c.expect;
            expect.resize(bc.betti.size(), 0);
            std::vector<int> ob = rb;
            ob.resize(expect.size(), 0);
            const bool ok = bc.betti == expect && ob == expect;
            lines.push_back({"betti_" + c.name, ok, "reduction " + betti_string(bc.betti) + " oracle " + betti_string(rb)});
        }
        const MorseFunction tf = builtin_torus();
        const FilteredComplex tc = build_cubical_sampled(tf, 128);
        const auto tpts = find_critical_points(tf, 32).points;
        const BarannikovComplex tb = match_cells_to_points(tc, reduce(tc), tpts, grid_match_options(tc, tpts));
        lines.push_back({"betti_torus_function", tb.betti == std::vector<int>{1, 2, 1}, betti_string(tb.betti)});
    }

    // reduction against the rank oracle on random lower-star filtrations
    {
        int agree = 0, total = 0, structure = 0;
        std::string first;
        const Topology tops[] = {Topology::Circle, Topology::Disk, Topology::Torus, Topology::Sphere};
        for (int i = 0; i < 52; ++i) {
            const Topology t = tops[i % 4];
            const FilteredComplex fc = random_complex(t, rng);
            const BarannikovComplex a = points_from_pairing(fc, reduce(fc));
            const BarannikovComplex b = classify_by_rank_oracle(fc);
            std::string why;
            ++total;
            if (same_classification(a, b, &why))
                ++agree;
            else if (first.empty())
                first = std::string(to_string(t)) + " case " + std::to_string(i) + ": " + why;
            structure += check_structure(a).empty();
        }
        lines.push_back({"oracle_equivalence", agree == total,
                         std::to_string(agree) + "/" + std::to_string(total) + (first.empty() ? "" : "; " + first)});
        lines.push_back({"boundary_structure", structure == total, std::to_string(structure) + "/" + std::to_string(total)});
    }

    // supersymmetry of the conjugated coboundaries
    {
        const MorseFunction dw = builtin_double_well();
        const FilteredComplex c1 = build_cubical_sampled(dw, 64);
        double worst = susy_mismatch(assemble_conjugated(c1, dw, 0, 0.3).d_upper);
        const MorseFunction tf = builtin_torus();
        const FilteredComplex c2 = build_cubical_sampled(tf, 12);
        for (int p : {0, 1})
            worst = std::max(worst, susy_mismatch(assemble_conjugated(c2, tf, p, 0.5).d_upper));
        lines.push_back({"supersymmetry", worst <= 1e-10, "max relative mismatch " + fmt_short(worst)});
    }

    // duality f <-> -f
    {
        const MorseFunction dw = builtin_double_well();
        const auto pts = find_critical_points(dw, 64).points;
        const auto npts = find_critical_points(dw.negated(), 64).points;
        const FilteredComplex fc = build_cubical_sampled(dw, 512), nfc = build_cubical_sampled(dw.negated(), 512);
        const BarannikovComplex a = match_cells_to_points(fc, reduce(fc), pts, grid_match_options(fc, pts));
        const BarannikovComplex b = match_cells_to_points(nfc, reduce(nfc), npts, grid_match_options(nfc, npts));
        bool ok = dual_predictions_match(predict_spectrum(a), predict_spectrum(b), 1);
        int random_ok = 0;
        // triangulated manifolds only: cubical lower stars of -f are not dual to those of f
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 8; ++i) {
            FilteredComplex r, nr;
            if (i % 2 == 0) {
                r = random_complex(Topology::Circle, rng);
                nr = with_negated_values(r);
            } else {
                const int levels = 1 + (i / 2) % 2;
                std::vector<double> v(levels == 1 ? 18 : 66), nv;
                for (auto& x : v)
                    x = u(rng);
                for (double x : v)
                    nv.push_back(-x);
                r = octahedron_sphere(levels, &v);
                nr = octahedron_sphere(levels, &nv);
            }
            const BarannikovComplex x = points_from_pairing(r, reduce(r));
            const BarannikovComplex y = points_from_pairing(nr, reduce(nr));
            random_ok += dual_signatures_match(x, y, r.max_dim);
        }
        lines.push_back({"duality", ok && random_ok == 8,
                         std::string("double well ") + (ok ? "mirrored" : "differs") + ", random " +
                             std::to_string(random_ok) + "/8"});
    }

    int failures = 0;
    std::ostringstream out;
    for (const auto& l : lines) {
        failures += !l.pass;
        out << (l.pass ? "PASS " : "FAIL ") << l.name << ": " << l.detail << '\n';
    }
    out << "selftest seed " << seed << ": " << (lines.size() - static_cast<std::size_t>(failures)) << "/" << lines.size()
        << " suites passed\n";
    if (!out_dir.empty())
        write_file(prepare_dir(out_dir) / "selftest.txt", out.str());
    CommandResult res;
    res.status = failures == 0 ? 0 : 1;
    res.summary = out.str();
    return res;
}

// ---- report ------------------------------------------------------------

namespace {

std::vector<std::map<std::string, std::string>> read_csv(const fs::path& path)
{
    std::istringstream in(read_file(path));
    std::string line;
    std::vector<std::map<std::string, std::string>> rows;
    if (!std::getline(in, line))
        throw Error(ErrorCode::ParseError, path.string() + " is empty");
    const auto header = split_csv_line(line);
    while (std::getline(in, line)) {
        if (trim(line).empty())
            continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw Error(ErrorCode::ParseError, path.string() + ": ragged row");
        std::map<std::string, std::string> row;
        for (std::size_t i = 0; i < header.size(); ++i)
            row[header[i]] = cells[i];
        rows.push_back(std::move(row));
    }
    return rows;
}

double num(const std::map<std::string, std::string>& row, const std::string& key)
{
    const auto it = row.find(key);
    if (it == row.end())
        throw Error(ErrorCode::ParseError, "missing column " + key);
    const std::string& s = it->second;
    if (s == "nan" || s == "-nan")
        return NAN;
    return parse_number(s, key);
}

}  // namespace

CommandResult cmd_report(const std::string& dir_str)
{
    const fs::path dir(dir_str);
    const auto comps = read_csv(dir / "comparison.csv");
    const auto fits = fs::exists(dir / "fits.csv") ? read_csv(dir / "fits.csv") : decltype(comps){};

    int failures = 0, inconsistent = 0;
    std::map<std::string, std::pair<int, int>> by_kind;  // kind -> (pass, total)
    std::map<std::pair<int, int>, std::vector<std::pair<double, double>>> series;
    for (const auto& r : comps) {
        const std::string kind = r.at("kind");
        const double pred = num(r, "predicted"), meas = num(r, "measured"), tol = num(r, "tolerance");
        bool pass = false;
        if (kind == "count")
            pass = pred == meas;
        else if (kind == "pair" || kind == "susy")
            pass = std::fabs(meas / pred - 1.0) <= tol;
        else if (kind == "zero")
            pass = std::fabs(meas) <= tol;
        else
            throw Error(ErrorCode::ParseError, "unknown comparison kind " + kind);
        if (kind == "pair")
            series[{static_cast<int>(num(r, "p")), static_cast<int>(num(r, "point"))}].emplace_back(num(r, "h"), meas);
        inconsistent += pass != (r.at("pass") == "PASS");
        failures += !pass;
        auto& k = by_kind[kind];
        k.first += pass;
        ++k.second;
    }
    int fit_pass = 0;
    for (const auto& r : fits) {
        const int p = static_cast<int>(num(r, "p")), point = static_cast<int>(num(r, "point"));
        const auto it = series.find({p, point});
        if (it == series.end())
            throw Error(ErrorCode::ParseError, "fit without comparison rows");
        const FitRow f = make_fit_row(p, point, static_cast<int>(num(r, "partner")), num(r, "activation"),
                                      num(r, "target_log_prefactor"), it->second, 0.0, num(r, "slope_tol"),
                                      num(r, "prefactor_tol"));
        const bool same_fit = std::fabs(f.slope - num(r, "slope")) <= 1e-9 * std::fabs(f.slope) &&
                              std::fabs(f.lp - num(r, "log_prefactor")) <= 1e-9 * std::max(1.0, std::fabs(f.lp));
        inconsistent += !same_fit || f.pass != (r.at("pass") == "PASS");
        failures += !f.pass;
        fit_pass += f.pass;
    }
    std::ostringstream out;
    for (const auto& [kind, pt] : by_kind)
        out << kind << ' ' << pt.first << '/' << pt.second << " pass\n";
    out << "fits " << fit_pass << '/' << fits.size() << " pass\n";
    out << "recomputed verdicts " << (inconsistent == 0 ? "match" : "DIFFER from") << " the stored ones\n";
    out << "verdict " << (failures == 0 && inconsistent == 0 ? "PASS" : "FAIL") << '\n';
    CommandResult res;
    res.status = failures == 0 && inconsistent == 0 ? 0 : 1;
    res.summary = out.str();
    return res;
}

}  // namespace mbw
