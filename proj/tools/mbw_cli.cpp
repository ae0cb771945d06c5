#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <future>
#include <string>
#include <vector>

#include "mbw/mbw.h"

namespace {

struct Overrides {
    std::string out;
    std::string degrees;
    std::string h;
    std::string window;
    std::vector<std::string> kappa;
    std::string scheme;
};

struct Outcome {
    mbw_status status = MBW_OK;
    std::string text;
};

Outcome finish(mbw_status s, const std::string& label)
{
    Outcome o;
    o.status = s;
    if (s == MBW_OK || s == MBW_VERIFICATION_FAILED)
        o.text = std::string(mbw_last_output()) + "\n";
    else
        o.text = label + "error: " + mbw_last_error() + "\n";
    return o;
}

using Command = mbw_status (*)(mbw_experiment*, const char*);

Outcome run_config(const std::string& path, const Overrides& ov, Command cmd, bool many)
{
    mbw_experiment* e = nullptr;
    const std::string label = many ? path + ": " : "";
    mbw_status s = mbw_experiment_load(path.c_str(), &e);
    if (s != MBW_OK)
        return finish(s, label);
    auto set = [&](const char* key, const std::string& value) {
        if (s == MBW_OK && !value.empty())
            s = mbw_experiment_set(e, key, value.c_str());
    };
    set("degrees", ov.degrees);
    set("h", ov.h);
    set("window", ov.window);
    set("scheme", ov.scheme);
    for (const auto& k : ov.kappa)
        set("kappa", k);
    if (s != MBW_OK) {
        Outcome o = finish(s, label);
        mbw_experiment_free(e);
        return o;
    }
    std::string out = mbw_experiment_output(e);
    if (!ov.out.empty())
        out = many ? ov.out + "/" + path.substr(path.find_last_of('/') + 1) : ov.out;
    if (many && !ov.out.empty()) {
        const auto dot = out.find_last_of('.');
        if (dot != std::string::npos && dot > out.find_last_of('/'))
            out.resize(dot);
    }
    s = cmd(e, out.c_str());
    Outcome o = finish(s, label);
    mbw_experiment_free(e);
    return o;
}

int run_configs(const std::vector<std::string>& configs, const Overrides& ov, Command cmd)
{
    const bool many = configs.size() > 1;
    std::vector<std::future<Outcome>> jobs;
    for (const auto& c : configs)
        jobs.push_back(std::async(std::launch::async, run_config, c, ov, cmd, many));
    int worst = 0;
    for (auto& j : jobs) {
        const Outcome o = j.get();
        std::fputs(o.text.c_str(), o.status >= MBW_USAGE_ERROR ? stderr : stdout);
        worst = std::max(worst, static_cast<int>(o.status));
    }
    return worst;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Morse-Barannikov-Witten experiments"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "Print this help message and exit");
    app.set_version_flag("--version", mbw_version());

    std::vector<std::string> configs;
    Overrides ov;
    std::string complex_path;
    std::uint64_t seed = 1;
    bool inject = false;

    auto add_overrides = [&](CLI::App* sub) {
        sub->add_option("--config", configs, "Experiment config file (repeatable; runs in parallel)")->required();
        sub->add_option("--out", ov.out, "Output directory");
        sub->add_option("--degrees", ov.degrees, "Degrees to test, e.g. 0,1");
        sub->add_option("--h", ov.h, "Descending h list, e.g. 0.3,0.2,0.1");
        sub->add_option("--window", ov.window, "Level window a,b (inf allowed)");
        sub->add_option("--kappa", ov.kappa, "Prefactor override UPPER_ID=VALUE (repeatable)");
        sub->add_option("--scheme", ov.scheme, "Discretization")->check(CLI::IsMember({"dec", "stencil"}));
    };

    auto* analyze = app.add_subcommand("analyze", "Classify critical points and predict small eigenvalues");
    add_overrides(analyze);
    auto* verify = app.add_subcommand("verify", "Sweep h, compare spectra with predictions, fit Arrhenius laws");
    add_overrides(verify);

    auto* persistence = app.add_subcommand("persistence", "Persistence pairing of a complex or grid config");
    persistence->add_option("--config", configs, "Experiment config file");
    persistence->add_option("--complex", complex_path, "Simplicial complex file");
    persistence->add_option("--out", ov.out, "Output directory");

    auto* selftest = app.add_subcommand("selftest", "Built-in oracle, Betti, supersymmetry and duality suites");
    selftest->add_option("--seed", seed, "Seed for randomized suites");
    selftest->add_option("--out", ov.out, "Directory for selftest.txt");
    selftest->add_flag("--inject-fault", inject, "Corrupt one incidence sign per complex");

    auto* report = app.add_subcommand("report", "Recompute verdicts from emitted tables");
    report->add_option("--out", ov.out, "Directory holding comparison.csv and fits.csv")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : MBW_USAGE_ERROR;
    }

    if (*analyze)
        return run_configs(configs, ov, mbw_analyze);
    if (*verify)
        return run_configs(configs, ov, mbw_verify);
    if (*persistence) {
        if (complex_path.empty() == configs.empty()) {
            std::fputs("error: persistence needs exactly one of --config or --complex\n", stderr);
            return MBW_USAGE_ERROR;
        }
        if (!complex_path.empty()) {
            const Outcome o = finish(mbw_persistence_file(complex_path.c_str(), ov.out.empty() ? "out" : ov.out.c_str()), "");
            std::fputs(o.text.c_str(), o.status >= MBW_USAGE_ERROR ? stderr : stdout);
            return o.status;
        }
        return run_configs(configs, ov, mbw_persistence);
    }
    if (*selftest) {
        const Outcome o = finish(mbw_selftest(seed, ov.out.c_str(), inject ? 1 : 0), "");
        std::fputs(o.text.c_str(), o.status >= MBW_USAGE_ERROR ? stderr : stdout);
        return o.status;
    }
    const Outcome o = finish(mbw_report(ov.out.c_str()), "");
    std::fputs(o.text.c_str(), o.status >= MBW_USAGE_ERROR ? stderr : stdout);
    return o.status;
}
