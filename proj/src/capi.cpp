#include "mbw/mbw.h"

#include <memory>
#include <optional>
#include <string>

#include "mbw/error.hpp"
#include "mbw/harness.hpp"

struct mbw_experiment {
    mbw::ExperimentConfig cfg;
    std::optional<mbw::Analysis> analysis;
};

struct mbw_complex {
    mbw::FilteredComplex fc;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_code;
thread_local std::string g_output;

mbw_status fail(mbw_status s, const std::string& code, const std::string& what)
{
    g_code = code;
    g_error = what;
    return s;
}

template <class F>
mbw_status guarded(F&& body)
{
    g_error.clear();
    g_code.clear();
    try {
        return body();
    } catch (const mbw::Error& e) {
        const auto s = mbw::classify(e.code()) == mbw::ErrorClass::Usage ? MBW_USAGE_ERROR : MBW_NUMERICAL_ERROR;
        return fail(s, std::string(mbw::to_string(e.code())), e.what());
    } catch (const std::bad_alloc&) {
        return fail(MBW_NUMERICAL_ERROR, "SizeExceeded", "out of memory");
    } catch (const std::exception& e) {
        return fail(MBW_NUMERICAL_ERROR, "Internal", e.what());
    }
}

mbw_status from_result(const mbw::CommandResult& r)
{
    g_output = r.summary;
    return r.status == 0 ? MBW_OK : MBW_VERIFICATION_FAILED;
}

mbw_status null_arg(const char* what) { return fail(MBW_USAGE_ERROR, "UsageError", std::string("null argument: ") + what); }

std::string dir_or(const mbw_experiment* e, const char* out_dir)
{
    return out_dir && *out_dir ? std::string(out_dir) : e->cfg.output;
}

const mbw::Analysis& analysis(mbw_experiment* e)
{
    if (!e->analysis)
        e->analysis = mbw::run_analysis(e->cfg);
    return *e->analysis;
}

}  // namespace

extern "C" {

const char* mbw_version(void) { return mbw::kVersion; }
const char* mbw_last_error(void) { return g_error.c_str(); }
const char* mbw_last_error_code(void) { return g_code.c_str(); }
const char* mbw_last_output(void) { return g_output.c_str(); }

mbw_status mbw_experiment_load(const char* path, mbw_experiment** out)
{
    if (!path || !out)
        return null_arg("path/out");
    return guarded([&] {
        auto e = std::make_unique<mbw_experiment>();
        e->cfg = mbw::load_config(path);
        *out = e.release();
        return MBW_OK;
    });
}

mbw_status mbw_experiment_parse(const char* text, const char* base_dir, mbw_experiment** out)
{
    if (!text || !out)
        return null_arg("text/out");
    return guarded([&] {
        auto e = std::make_unique<mbw_experiment>();
        e->cfg = mbw::parse_config(text, base_dir ? base_dir : ".");
        *out = e.release();
        return MBW_OK;
    });
}

mbw_status mbw_experiment_set(mbw_experiment* e, const char* key, const char* value)
{
    if (!e || !key || !value)
        return null_arg("experiment/key/value");
    return guarded([&] {
        mbw::apply_setting(e->cfg, key, value);
        e->analysis.reset();
        return MBW_OK;
    });
}

void mbw_experiment_free(mbw_experiment* e) { delete e; }

const char* mbw_experiment_output(const mbw_experiment* e) { return e ? e->cfg.output.c_str() : ""; }

mbw_status mbw_analyze(mbw_experiment* e, const char* out_dir)
{
    if (!e)
        return null_arg("experiment");
    return guarded([&] { return from_result(mbw::cmd_analyze(e->cfg, dir_or(e, out_dir))); });
}

mbw_status mbw_verify(mbw_experiment* e, const char* out_dir)
{
    if (!e)
        return null_arg("experiment");
    return guarded([&] { return from_result(mbw::cmd_verify(e->cfg, dir_or(e, out_dir))); });
}

mbw_status mbw_persistence(mbw_experiment* e, const char* out_dir)
{
    if (!e)
        return null_arg("experiment");
    return guarded([&] { return from_result(mbw::cmd_persistence(e->cfg, dir_or(e, out_dir))); });
}

mbw_status mbw_persistence_file(const char* complex_path, const char* out_dir)
{
    if (!complex_path || !out_dir)
        return null_arg("complex_path/out_dir");
    return guarded([&] { return from_result(mbw::cmd_persistence_file(complex_path, out_dir)); });
}

mbw_status mbw_selftest(uint64_t seed, const char* out_dir, int inject_fault)
{
    return guarded([&] { return from_result(mbw::cmd_selftest(seed, out_dir ? out_dir : "", inject_fault != 0)); });
}

mbw_status mbw_report(const char* dir)
{
    if (!dir)
        return null_arg("dir");
    return guarded([&] { return from_result(mbw::cmd_report(dir)); });
}

mbw_status mbw_experiment_betti(mbw_experiment* e, int* betti, size_t capacity, size_t* count)
{
    if (!e || !count || (capacity && !betti))
        return null_arg("experiment/betti/count");
    return guarded([&] {
        const auto& b = analysis(e).barannikov.betti;
        *count = b.size();
        for (size_t i = 0; i < b.size() && i < capacity; ++i)
            betti[i] = b[i];
        return MBW_OK;
    });
}

mbw_status mbw_experiment_classes(mbw_experiment* e, int* homological, int* lower, int* upper)
{
    if (!e || !homological || !lower || !upper)
        return null_arg("experiment/outputs");
    return guarded([&] {
        *homological = *lower = *upper = 0;
        for (const auto& p : analysis(e).barannikov.points) {
            *homological += p.cls == mbw::PointClass::Homological;
            *lower += p.cls == mbw::PointClass::Lower;
            *upper += p.cls == mbw::PointClass::Upper;
        }
        return MBW_OK;
    });
}

mbw_status mbw_experiment_spectrum(mbw_experiment* e, int p, double h, int k, double* values, int* count_below_h32)
{
    if (!e || !values || k < 1)
        return null_arg("experiment/values");
    return guarded([&] {
        mbw::validate_config(e->cfg);
        const mbw::MorseFunction f = mbw::make_function(e->cfg);
        mbw::SweepSpec spec;
        spec.function = &f;
        spec.resolution = e->cfg.resolution;
        spec.scheme = e->cfg.scheme;
        spec.window = e->cfg.window.value_or(mbw::WindowSpec{});
        spec.k = k;
        const auto rows = mbw::sweep_h(spec, {h}, p);
        const auto& ev = rows.front().eigenvalues;
        for (int i = 0; i < k; ++i)
            values[i] = static_cast<size_t>(i) < ev.size() ? ev[static_cast<size_t>(i)] : 0.0;
        if (count_below_h32)
            *count_below_h32 = rows.front().count_below_h32;
        return MBW_OK;
    });
}

mbw_status mbw_complex_load(const char* path, mbw_complex** out)
{
    if (!path || !out)
        return null_arg("path/out");
    return guarded([&] {
        auto c = std::make_unique<mbw_complex>();
        c->fc = mbw::load_simplicial(path);
        *out = c.release();
        return MBW_OK;
    });
}

void mbw_complex_free(mbw_complex* c) { delete c; }

size_t mbw_complex_cells(const mbw_complex* c) { return c ? c->fc.size() : 0; }

int mbw_complex_euler(const mbw_complex* c) { return c ? c->fc.euler_characteristic() : 0; }

mbw_status mbw_complex_betti(const mbw_complex* c, int* betti, size_t capacity, size_t* count)
{
    if (!c || !count || (capacity && !betti))
        return null_arg("complex/betti/count");
    return guarded([&] {
        const auto bc = mbw::points_from_pairing(c->fc, mbw::reduce(c->fc));
        *count = bc.betti.size();
        for (size_t i = 0; i < bc.betti.size() && i < capacity; ++i)
            betti[i] = bc.betti[i];
        return MBW_OK;
    });
}

}  // extern "C"
