#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "mbw/error.hpp"
#include "mbw/harness.hpp"
#include "oracles.hpp"

using namespace mbw;
namespace fs = std::filesystem;

namespace {

const std::string kConfigs = std::string(MBW_SOURCE_DIR) + "/configs/";

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / "mbw_harness_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> records(const fs::path& p)
{
    std::vector<std::vector<std::string>> out;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream ls(line);
        std::vector<std::string> fields;
        std::string f;
        while (ls >> f)
            fields.push_back(f);
        out.push_back(fields);
    }
    return out;
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

ErrorCode config_error(const std::string& text)
{
    return code_of([&] { validate_config(parse_config(text)); });
}

const char* kSmallWell = R"(
name = small_well   # trailing comment
domain = circle
length = 2pi
term = cos 2 0.5
term = sin 1 0.225
term = cos 1 0.25
resolution = 512
h = 0.3, 0.25 0.2,0.15
degrees = 0,1
)";

}  // namespace

TEST_CASE("config parsing")
{
    const auto cfg = parse_config(kSmallWell, "/base");
    CHECK(cfg.name == "small_well");
    CHECK(cfg.base_dir == "/base");
    CHECK(cfg.length_x == doctest::Approx(2 * std::numbers::pi));
    REQUIRE(cfg.terms.size() == 3);
    CHECK(cfg.terms[1].kind == TrigTerm::Kind::Sin);
    CHECK(cfg.terms[1].kx == 1);
    CHECK(cfg.terms[1].amplitude == 0.225);
    CHECK(cfg.hs == std::vector<double>{0.3, 0.25, 0.2, 0.15});
    CHECK(cfg.degrees == std::vector<int>{0, 1});
    CHECK_FALSE(cfg.window.has_value());
    CHECK_NOTHROW(validate_config(cfg));

    auto w = parse_config("window = 0, inf\nkappa = 2=1.5\nscheme = stencil\nk = 6\noracle = false\n");
    REQUIRE(w.window.has_value());
    CHECK(w.window->a == 0.0);
    CHECK(std::isinf(w.window->b));
    CHECK(w.kappa.at(2) == 1.5);
    CHECK(w.scheme == Scheme::DirectStencil);
    CHECK(w.k == 6);
    CHECK_FALSE(w.oracle);
    apply_setting(w, "window", "none");
    CHECK_FALSE(w.window.has_value());
    apply_setting(w, "window", "-inf, 0.5");
    CHECK(std::isinf(w.window->a));
    CHECK(w.window->a < 0);

    const auto t = parse_config("domain = torus\nterm = cos 1 2 0.3\n");
    CHECK(t.terms[0].kx == 1);
    CHECK(t.terms[0].ky == 2);
    CHECK(t.terms[0].amplitude == 0.3);

    const auto file = load_config(kConfigs + "genus2.cfg");
    CHECK(file.domain == "complex");
    CHECK(fs::path(file.base_dir) == fs::path(kConfigs).parent_path());
}

TEST_CASE("config errors")
{
    CHECK(code_of([] { parse_config("bogus = 1\n"); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { parse_config("just words\n"); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { parse_config("resolution = many\n"); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { parse_config("term = tan 1 1\n"); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { parse_config("scheme = fem\n"); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { parse_config("domain = sphere\n"); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { load_config("/nonexistent/x.cfg"); }) == ErrorCode::ConfigError);

    const std::string base = "term = cos 1 1\n";
    CHECK(config_error(base + "resolution = 1000\n") == ErrorCode::ConfigError);
    CHECK(config_error(base + "resolution = 16\n") == ErrorCode::ConfigError);
    CHECK(config_error(base + "resolution = 16384\n") == ErrorCode::ConfigError);
    CHECK(config_error(base + "h = 0.1, 0.2\n") == ErrorCode::ConfigError);
    CHECK(config_error(base + "h = 0.2, -0.1\n") == ErrorCode::ConfigError);
    CHECK(config_error(base + "degrees = 2\n") == ErrorCode::ConfigError);
    CHECK(config_error(base + "window = 1, 0\n") == ErrorCode::BoundaryMismatch);
    CHECK(config_error(base + "scheme = stencil\ndegrees = 0, 1\n") == ErrorCode::ConfigError);
    CHECK(config_error("domain = circle\n") == ErrorCode::ConfigError);
    CHECK(config_error("domain = complex\n") == ErrorCode::ConfigError);
}

TEST_CASE("config hash")
{
    const auto a = parse_config(kSmallWell);
    const auto b = parse_config(std::string("# leading comment\n") + kSmallWell + "\n\n");
    CHECK(config_hash(a) == config_hash(b));
    CHECK(canonical_config(a) == canonical_config(b));
    auto c = a;
    apply_setting(c, "h", "0.3, 0.2");
    CHECK(config_hash(c) != config_hash(a));
    auto d = a;
    apply_setting(d, "term", "cos 3 0.01");
    CHECK(config_hash(d) != config_hash(a));
}

TEST_CASE("analyze outputs")
{
    SUBCASE("double well")
    {
        const auto dir = scratch("analyze_dw");
        const auto r = cmd_analyze(load_config(kConfigs + "double_well.cfg"), dir.string());
        CHECK(r.status == 0);
        const auto cls = records(dir / "classification.txt");
        CHECK(cls.size() == 4);
        const auto pred = records(dir / "predictions.txt");
        REQUIRE(pred.size() == 4);
        int zeros = 0;
        std::vector<std::vector<std::string>> pairs;
        for (const auto& row : pred) {
            if (row[2] == "zero")
                ++zeros;
            else
                pairs.push_back(row);
        }
        CHECK(zeros == 2);
        REQUIRE(pairs.size() == 2);
        CHECK(std::vector(pairs[0].begin() + 3, pairs[0].end()) == std::vector(pairs[1].begin() + 3, pairs[1].end()));
        CHECK(fs::exists(dir / "hypotheses.txt"));
        CHECK_FALSE(fs::exists(dir / "relative_predictions.txt"));
    }
    SUBCASE("genus two")
    {
        const auto dir = scratch("analyze_g2");
        const auto r = cmd_analyze(load_config(kConfigs + "genus2.cfg"), dir.string());
        CHECK(r.status == 0);
        CHECK(records(dir / "classification.txt").size() == 12);
        CHECK(r.summary.find("agrees") != std::string::npos);
    }
    SUBCASE("cos")
    {
        const auto dir = scratch("analyze_cos");
        cmd_analyze(load_config(kConfigs + "cos_circle.cfg"), dir.string());
        CHECK(records(dir / "classification.txt").size() == 2);
        for (const auto& row : records(dir / "predictions.txt"))
            CHECK(row[2] == "zero");
    }
    SUBCASE("window")
    {
        const auto dir = scratch("analyze_window");
        const auto r = cmd_analyze(load_config(kConfigs + "tn_pair.cfg"), dir.string());
        CHECK(r.status == 0);
        CHECK(fs::exists(dir / "relative_predictions.txt"));
        CHECK(fs::exists(dir / "relative_basis.txt"));
    }
}

TEST_CASE("run_analysis")
{
    const auto an = run_analysis(parse_config(kSmallWell));
    REQUIRE(an.function.has_value());
    CHECK(an.barannikov.points.size() == 4);
    CHECK(an.oracle_agrees.value_or(false));
    CHECK(an.perturbations == 0);
    CHECK(an.predictions.nonzero(0).size() == 1);
    CHECK(an.gaps.distinct);
}

TEST_CASE("verify is reproducible and report recomputes")
{
    auto cfg = parse_config(kSmallWell);
    const auto d1 = scratch("verify_a"), d2 = scratch("verify_b");
    const auto r1 = cmd_verify(cfg, d1.string());
    const auto r2 = cmd_verify(cfg, d2.string());
    CHECK(r1.status == 0);
    CHECK(r1.summary == r2.summary);
    for (const char* f : {"comparison.csv", "fits.csv", "report.txt", "arrhenius.svg", "sweep_p0.csv", "sweep_p1.csv"}) {
        INFO(f);
        REQUIRE(fs::exists(d1 / f));
        CHECK(slurp(d1 / f) == slurp(d2 / f));
    }
    const std::string report = slurp(d1 / "report.txt");
    CHECK(report.find(kVersion) != std::string::npos);
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
    CHECK(report.find(hash) != std::string::npos);

    // comparison rows carry predicted, measured, error and tolerance
    const std::string csv = slurp(d1 / "comparison.csv");
    CHECK(csv.rfind("h,p,index,kind,point,partner,predicted,measured,rel_error,tolerance,pass\n", 0) == 0);
    CHECK(csv.find(",pair,") != std::string::npos);
    CHECK(csv.find(",susy,") != std::string::npos);

    const auto rep = cmd_report(d1.string());
    CHECK(rep.status == 0);

    // corrupt one measured pair eigenvalue: the stored verdict no longer matches
    std::istringstream in(csv);
    std::ostringstream out;
    std::string line;
    bool tampered = false;
    while (std::getline(in, line)) {
        if (!tampered && line.find(",pair,") != std::string::npos) {
            std::vector<std::string> f;
            std::stringstream ls(line);
            std::string x;
            while (std::getline(ls, x, ','))
                f.push_back(x);
            f[7] = std::to_string(std::stod(f[6]) * 3.0);
            line.clear();
            for (std::size_t i = 0; i < f.size(); ++i)
                line += (i ? "," : "") + f[i];
            tampered = true;
        }
        out << line << '\n';
    }
    REQUIRE(tampered);
    std::ofstream(d1 / "comparison.csv") << out.str();
    CHECK(cmd_report(d1.string()).status != 0);

    CHECK(code_of([] { cmd_report("/nonexistent/dir"); }) != ErrorCode::UsageError);
}

TEST_CASE("verify refuses unusable configs")
{
    CHECK(code_of([] { cmd_verify(load_config(kConfigs + "genus2.cfg"), scratch("v_g2").string()); }) ==
          ErrorCode::UsageError);
    auto cfg = parse_config(kSmallWell);
    cfg.hs.clear();
    CHECK(code_of([&] { cmd_verify(cfg, scratch("v_noh").string()); }) == ErrorCode::ConfigError);
}

TEST_CASE("selftest")
{
    const auto dir = scratch("selftest");
    const auto ok = cmd_selftest(3, dir.string());
    CHECK(ok.status == 0);
    CHECK(fs::exists(dir / "selftest.txt"));
    const auto bad = cmd_selftest(3, "", true);
    CHECK(bad.status == 1);
    CHECK(bad.summary.find("FAIL") != std::string::npos);
}

TEST_CASE("persistence commands")
{
    const auto dir = scratch("persistence");
    const auto r = cmd_persistence_file(std::string(MBW_SOURCE_DIR) + "/assets/torus7.txt", dir.string());
    CHECK(r.status == 0);
    CHECK(r.summary.find("betti 1 2 1") != std::string::npos);
    // every pairing row has birth <= death
    int finite = 0;
    for (const auto& row : records(dir / "pairing.txt"))
        if (row.size() == 5) {
            CHECK(std::stod(row[3]) <= std::stod(row[4]));
            ++finite;
        }
    CHECK(finite == 19);

    const auto d2 = scratch("persistence_cfg");
    CHECK(cmd_persistence(load_config(kConfigs + "octahedron.cfg"), d2.string()).status == 0);
    CHECK(records(d2 / "classification.txt").size() >= 2);
}

TEST_CASE("random complexes and spheres")
{
    std::mt19937_64 rng(8);
    const std::pair<Topology, int> cases[] = {
        {Topology::Circle, 0}, {Topology::Disk, 1}, {Topology::Torus, 0}, {Topology::Sphere, 2}};
    for (const auto& [t, chi] : cases)
        for (int i = 0; i < 5; ++i) {
            const auto fc = random_complex(t, rng);
            CHECK(fc.size() <= 500);
            CHECK(fc.euler_characteristic() == chi);
            CHECK(fc.boundary_squared_zero());
        }
    CHECK(to_string(Topology::Torus) == "torus");

    const auto s0 = octahedron_sphere(0);
    CHECK(s0.count(0) == 6);
    CHECK(s0.count(1) == 12);
    CHECK(s0.count(2) == 8);
    const auto s1 = octahedron_sphere(1);
    CHECK(s1.count(0) == 18);
    CHECK(s1.count(1) == 48);
    CHECK(s1.count(2) == 32);
    const std::vector<double> bad(3, 0.0);
    CHECK(code_of([&] { octahedron_sphere(0, &bad); }) == ErrorCode::UsageError);
}

TEST_CASE("Arrhenius plot")
{
    PlotSeries s;
    s.label = "p=0 pair";
    s.coefficient = 1.0;
    s.activation = 1.0;
    for (double h : {0.3, 0.2, 0.1})
        s.measured.emplace_back(h, h / std::numbers::pi * std::exp(-1.0 / h));
    const std::string svg = arrhenius_svg({s});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("p=0 pair") != std::string::npos);
    CHECK(arrhenius_svg({}).find("</svg>") != std::string::npos);
}
