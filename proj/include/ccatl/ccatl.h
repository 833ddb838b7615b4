/* C interface to the ccatl transfer-learning toolkit. */
#ifndef CCATL_H
#define CCATL_H

#include <stddef.h>

#if defined(CCATL_BUILDING_LIBRARY)
#define CCATL_API __attribute__((visibility("default")))
#else
#define CCATL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ccatl_status {
  CCATL_OK = 0,
  CCATL_PARTIAL = 1,         /* grid finished with failed cells */
  CCATL_INPUT_ERROR = 2,     /* bad configuration, file, or data */
  CCATL_NUMERICAL_ERROR = 3, /* a solver or training step failed */
  CCATL_INTERNAL_ERROR = 4
} ccatl_status;

typedef struct ccatl_config ccatl_config;
typedef struct ccatl_dataset ccatl_dataset;

CCATL_API const char* ccatl_version(void);

/* Message of the last failing call on this thread, "" if none. */
CCATL_API const char* ccatl_last_error(void);
/* JSON error record of the last failed run on this thread, "" if none. */
CCATL_API const char* ccatl_last_error_record(void);

/* Strings returned through char** out parameters are released with ccatl_free_string. */
CCATL_API void ccatl_free_string(char* s);

CCATL_API ccatl_status ccatl_config_create(ccatl_config** out);
CCATL_API void ccatl_config_destroy(ccatl_config* cfg);
CCATL_API size_t ccatl_config_key_count(void);
CCATL_API const char* ccatl_config_key(size_t i);
CCATL_API ccatl_status ccatl_config_set(ccatl_config* cfg, const char* key, const char* value);
CCATL_API ccatl_status ccatl_config_get(const ccatl_config* cfg, const char* key, char** out);
CCATL_API ccatl_status ccatl_config_load_file(ccatl_config* cfg, const char* path);
/* Applies CCATL_* environment variables. */
CCATL_API ccatl_status ccatl_config_apply_env(ccatl_config* cfg);
CCATL_API ccatl_status ccatl_config_manifest(const ccatl_config* cfg, char** out);

/* Runs the configured experiment and writes its reports to the configured out directory. */
CCATL_API ccatl_status ccatl_run(const ccatl_config* cfg);
/* One experiment per line of the pairs file, other settings from `base`. */
CCATL_API ccatl_status ccatl_run_grid(const ccatl_config* base, const char* pairs_path);
/* Writes source.csv and target.csv from the synth-* settings into the out directory. */
CCATL_API ccatl_status ccatl_synth(const ccatl_config* cfg);
CCATL_API ccatl_status ccatl_report(const char* dir, char** out);

CCATL_API ccatl_status ccatl_dataset_load(const char* path, const char* label_column, const char* na_token,
                                          ccatl_dataset** out);
CCATL_API ccatl_status ccatl_dataset_save(const ccatl_dataset* d, const char* path);
CCATL_API void ccatl_dataset_destroy(ccatl_dataset* d);
CCATL_API size_t ccatl_dataset_rows(const ccatl_dataset* d);
CCATL_API size_t ccatl_dataset_cols(const ccatl_dataset* d);
CCATL_API ccatl_status ccatl_dataset_cell(const ccatl_dataset* d, size_t row, size_t col, double* value, int* missing);
CCATL_API ccatl_status ccatl_dataset_label(const ccatl_dataset* d, size_t row, int* label);

/* Row-major n x d arrays. gamma <= 0 selects the linear kernel. */
CCATL_API ccatl_status ccatl_mmd(const double* x, size_t nx, const double* y, size_t ny, size_t d, double gamma,
                                 double* out);
CCATL_API ccatl_status ccatl_coral(const double* x, size_t nx, const double* y, size_t ny, size_t d, double* out);
/* Top r canonical correlations of paired n x p and n x q views. */
CCATL_API ccatl_status ccatl_cca_correlations(const double* x, const double* y, size_t n, size_t p, size_t q, size_t r,
                                              double rho, double* out);

#ifdef __cplusplus
}
#endif

#endif
