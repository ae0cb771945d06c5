#ifndef MBW_H
#define MBW_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MBW_API __declspec(dllexport)
#else
#define MBW_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
typedef enum mbw_status {
    MBW_OK = 0,
    MBW_VERIFICATION_FAILED = 1,
    MBW_USAGE_ERROR = 2,
    MBW_NUMERICAL_ERROR = 3
} mbw_status;

typedef struct mbw_experiment mbw_experiment;
typedef struct mbw_complex mbw_complex;

MBW_API const char* mbw_version(void);

/* Diagnostics of the last failing call on this thread ("" when none). */
MBW_API const char* mbw_last_error(void);
/* Error code name of the last failure, e.g. "ConfigError". */
MBW_API const char* mbw_last_error_code(void);
/* Human-readable summary of the last successful or verification-failed command. */
MBW_API const char* mbw_last_output(void);

MBW_API mbw_status mbw_experiment_load(const char* path, mbw_experiment** out);
MBW_API mbw_status mbw_experiment_parse(const char* text, const char* base_dir, mbw_experiment** out);
/* Overrides one config key with the same grammar as the config file. */
MBW_API mbw_status mbw_experiment_set(mbw_experiment* e, const char* key, const char* value);
MBW_API void mbw_experiment_free(mbw_experiment* e);
/* Directory named by the `output` key. */
MBW_API const char* mbw_experiment_output(const mbw_experiment* e);

MBW_API mbw_status mbw_analyze(mbw_experiment* e, const char* out_dir);
MBW_API mbw_status mbw_verify(mbw_experiment* e, const char* out_dir);
MBW_API mbw_status mbw_persistence(mbw_experiment* e, const char* out_dir);
MBW_API mbw_status mbw_persistence_file(const char* complex_path, const char* out_dir);
MBW_API mbw_status mbw_selftest(uint64_t seed, const char* out_dir, int inject_fault);
MBW_API mbw_status mbw_report(const char* dir);

/* Runs the classification pipeline (cached) and copies Betti numbers.
   *count receives the number of degrees; at most capacity are written. */
MBW_API mbw_status mbw_experiment_betti(mbw_experiment* e, int* betti, size_t capacity, size_t* count);
/* Number of critical points in each class: homological, lower, upper. */
MBW_API mbw_status mbw_experiment_classes(mbw_experiment* e, int* homological, int* lower, int* upper);
/* Lowest k eigenvalues of the degree-p operator at h (config scheme, window and resolution). */
MBW_API mbw_status mbw_experiment_spectrum(mbw_experiment* e, int p, double h, int k, double* values,
                                           int* count_below_h32);

MBW_API mbw_status mbw_complex_load(const char* path, mbw_complex** out);
MBW_API void mbw_complex_free(mbw_complex* c);
MBW_API size_t mbw_complex_cells(const mbw_complex* c);
MBW_API int mbw_complex_euler(const mbw_complex* c);
MBW_API mbw_status mbw_complex_betti(const mbw_complex* c, int* betti, size_t capacity, size_t* count);

#ifdef __cplusplus
}
#endif

#endif
