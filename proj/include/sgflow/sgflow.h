/* C interface to sgflow. Every object is an opaque handle released with its
 * own destroy function. Functions return SGFLOW_OK or an error status;
 * sgflow_last_error() then describes the failure (per thread). */
#ifndef SGFLOW_H
#define SGFLOW_H

#include <stddef.h>

#if defined(_WIN32)
#define SGFLOW_API __declspec(dllexport)
#else
#define SGFLOW_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sgflow_status {
  SGFLOW_OK = 0,
  SGFLOW_ERR_INVALID_ARGUMENT = 1,
  SGFLOW_ERR_SHAPE_MISMATCH = 2,
  SGFLOW_ERR_NUMERICAL_BREAKDOWN = 3,
  SGFLOW_ERR_NOT_CONVERGED = 4,
  SGFLOW_ERR_SINGULAR = 5,
  SGFLOW_ERR_DIVERGED = 6,
  SGFLOW_ERR_STAGNATION = 7,
  SGFLOW_ERR_IO = 8,
  SGFLOW_ERR_INTERNAL = 99
} sgflow_status;

typedef enum sgflow_direction_kind {
  SGFLOW_DIR_EUCLIDEAN = 0,
  SGFLOW_DIR_SOBOLEV = 1,
  SGFLOW_DIR_LM_PRIMAL = 2,
  SGFLOW_DIR_LM_DUAL = 3,
  SGFLOW_DIR_GAUSS_NEWTON = 4
} sgflow_direction_kind;

typedef struct sgflow_grid sgflow_grid;
typedef struct sgflow_problem sgflow_problem;
typedef struct sgflow_config sgflow_config;
typedef struct sgflow_run sgflow_run;
typedef struct sgflow_sweep sgflow_sweep;
typedef struct sgflow_checks sgflow_checks;

SGFLOW_API const char* sgflow_version(void);
SGFLOW_API const char* sgflow_last_error(void);
SGFLOW_API const char* sgflow_status_string(sgflow_status status);

/* Grids. ny == 1 makes a 1D grid. */
SGFLOW_API sgflow_status sgflow_grid_create(size_t nx, size_t ny, double lx, double ly,
                                            sgflow_grid** out);
SGFLOW_API void sgflow_grid_destroy(sgflow_grid* grid);
SGFLOW_API size_t sgflow_grid_node_count(const sgflow_grid* grid);

/* Residual systems bound to a grid. States are field-major arrays of
 * field_count * node_count doubles. */
SGFLOW_API sgflow_status sgflow_problem_create_gl(const sgflow_grid* grid, double kappa, double h0,
                                                  sgflow_problem** out);
SGFLOW_API sgflow_status sgflow_problem_create_exp1d(const sgflow_grid* grid, double penalty_weight,
                                                     sgflow_problem** out);
SGFLOW_API sgflow_status sgflow_problem_create_poisson2d(const sgflow_grid* grid, double f, double g,
                                                         double penalty_weight,
                                                         sgflow_problem** out);
SGFLOW_API void sgflow_problem_destroy(sgflow_problem* problem);
SGFLOW_API size_t sgflow_problem_dof_count(const sgflow_problem* problem);

SGFLOW_API sgflow_status sgflow_energy(const sgflow_problem* problem, const double* u, size_t n,
                                       double* energy);
SGFLOW_API sgflow_status sgflow_gradient(const sgflow_problem* problem, const double* u, size_t n,
                                         double* gradient);
/* Writes the descent direction (update is u - direction). lambda is used by
 * the LM kinds, regularization by Gauss-Newton. */
SGFLOW_API sgflow_status sgflow_direction(const sgflow_problem* problem, const double* u, size_t n,
                                          sgflow_direction_kind kind, double lambda,
                                          double regularization, double* direction);
SGFLOW_API sgflow_status sgflow_fd_jacobian_check(const sgflow_problem* problem, const double* u,
                                                  size_t n, size_t probes, double* max_error);

/* Run configuration: key = value settings, as in config files. */
SGFLOW_API sgflow_status sgflow_config_create(sgflow_config** out);
SGFLOW_API void sgflow_config_destroy(sgflow_config* config);
SGFLOW_API sgflow_status sgflow_config_set(sgflow_config* config, const char* key, const char* value);
/* Replaces all settings with those of a config file (unset keys take their
 * defaults). */
SGFLOW_API sgflow_status sgflow_config_load(sgflow_config* config, const char* path);
SGFLOW_API sgflow_status sgflow_config_validate(const sgflow_config* config);
/* Copies the serialized config into buf (NUL-terminated, truncated to
 * capacity). *needed receives the full length including the NUL. */
SGFLOW_API sgflow_status sgflow_config_serialize(const sgflow_config* config, char* buf,
                                                 size_t capacity, size_t* needed);

/* One flow plus artifacts. A numerical failure inside the flow is not an
 * error status: the run reports termination "error" and a message. */
SGFLOW_API sgflow_status sgflow_solve(const sgflow_config* config, sgflow_run** out);
SGFLOW_API void sgflow_run_destroy(sgflow_run* run);
SGFLOW_API const char* sgflow_run_termination(const sgflow_run* run);
SGFLOW_API const char* sgflow_run_message(const sgflow_run* run);
SGFLOW_API int sgflow_run_ok(const sgflow_run* run);
SGFLOW_API double sgflow_run_final_energy(const sgflow_run* run);
SGFLOW_API size_t sgflow_run_iterations(const sgflow_run* run);
SGFLOW_API size_t sgflow_run_accepted(const sgflow_run* run);
/* -1 when the problem has no vortex report. */
SGFLOW_API long sgflow_run_vortex_count(const sgflow_run* run);
SGFLOW_API long sgflow_run_total_winding(const sgflow_run* run);

/* threads == 0: SGFLOW_THREADS or the hardware concurrency. */
SGFLOW_API sgflow_status sgflow_sweep_run(const sgflow_config* config, size_t threads,
                                          sgflow_sweep** out);
SGFLOW_API void sgflow_sweep_destroy(sgflow_sweep* sweep);
SGFLOW_API size_t sgflow_sweep_count(const sgflow_sweep* sweep);
SGFLOW_API size_t sgflow_sweep_failed(const sgflow_sweep* sweep);
SGFLOW_API double sgflow_sweep_h0(const sgflow_sweep* sweep, size_t i);
/* Empty string for a successful sub-run. */
SGFLOW_API const char* sgflow_sweep_error(const sgflow_sweep* sweep, size_t i);
SGFLOW_API const sgflow_run* sgflow_sweep_result(const sgflow_sweep* sweep, size_t i);

/* Verification battery; filter selects checks by substring (NULL or "" for
 * all). */
SGFLOW_API sgflow_status sgflow_checks_run(const char* filter, int inject_fault, sgflow_checks** out);
SGFLOW_API void sgflow_checks_destroy(sgflow_checks* checks);
SGFLOW_API size_t sgflow_checks_count(const sgflow_checks* checks);
SGFLOW_API const char* sgflow_checks_name(const sgflow_checks* checks, size_t i);
SGFLOW_API int sgflow_checks_passed(const sgflow_checks* checks, size_t i);
SGFLOW_API double sgflow_checks_value(const sgflow_checks* checks, size_t i);
SGFLOW_API double sgflow_checks_limit(const sgflow_checks* checks, size_t i);
SGFLOW_API const char* sgflow_checks_detail(const sgflow_checks* checks, size_t i);

#ifdef __cplusplus
}
#endif

#endif
