/* C interface to the pdl simulation library. */
#ifndef PDL_PDL_H
#define PDL_PDL_H

#include <stddef.h>
#include <stdint.h>

#if defined(PDL_BUILDING_LIBRARY)
#define PDL_API __attribute__((visibility("default")))
#else
#define PDL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pdl_status {
    PDL_OK = 0,
    PDL_ERR_PARAM = 1,       /* invalid argument or config */
    PDL_ERR_IO = 2,          /* output could not be written */
    PDL_ERR_CONVERGENCE = 3,
    PDL_ERR_INSUFFICIENT = 4,
    PDL_ERR_INVARIANT = 5,
    PDL_ERR_ABSORBED = 6,
    PDL_ERR_TRUNCATION = 7,
    PDL_ERR_UNDEFINED = 8,
    PDL_ERR_NOWALKER = 9,
    PDL_ERR_ILLEGAL = 10,
    PDL_PARTIAL = 11,        /* run finished but some rows carry an error status */
    PDL_ERR_INTERNAL = 12
} pdl_status;

typedef struct pdl_experiment pdl_experiment;

typedef struct pdl_run_summary {
    uint64_t rows;
    uint64_t failed_rows;
    uint64_t seed;
    uint64_t config_hash;
} pdl_run_summary;

PDL_API const char* pdl_version(void);
PDL_API const char* pdl_status_string(pdl_status status);
/* Message of the last failing call on this thread; "" if none. */
PDL_API const char* pdl_last_error(void);

PDL_API size_t pdl_experiment_count(void);
/* NULL when index is out of range. */
PDL_API const char* pdl_experiment_name(size_t index);
PDL_API const char* pdl_experiment_summary(size_t index);
/* One line per parameter: key, type, default and description. */
PDL_API const char* pdl_experiment_parameters(size_t index);

PDL_API pdl_status pdl_experiment_create(const char* name, pdl_experiment** out);
PDL_API void pdl_experiment_destroy(pdl_experiment* exp);

PDL_API pdl_status pdl_experiment_load_config(pdl_experiment* exp, const char* path);
PDL_API pdl_status pdl_experiment_set(pdl_experiment* exp, const char* key, const char* value);
PDL_API pdl_status pdl_experiment_set_seed(pdl_experiment* exp, uint64_t seed);
PDL_API pdl_status pdl_experiment_set_reps(pdl_experiment* exp, uint64_t reps);
PDL_API pdl_status pdl_experiment_set_threads(pdl_experiment* exp, size_t threads);
PDL_API pdl_status pdl_experiment_set_out(pdl_experiment* exp, const char* dir);

/* Returns PDL_PARTIAL when rows failed; summary is filled in either case.
   summary may be NULL. */
PDL_API pdl_status pdl_experiment_run(pdl_experiment* exp, pdl_run_summary* summary);

/* Quasi-stationary law of the subcritical branching process with offspring
   law spec (e.g. "0:2/3,2:1/3") truncated at n_max. nu[j-1] receives nu_j for
   j <= nu_len. */
PDL_API pdl_status pdl_qsd(const char* offspring, double rate, size_t n_max, double tol, double* alpha, double* nu,
                           size_t nu_len);

#ifdef __cplusplus
}
#endif

#endif
