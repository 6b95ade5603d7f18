/* C interface for the pgmclust clustering library. */

#ifndef PGMCLUST_H
#define PGMCLUST_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status codes returned by every fallible call.
 */
typedef enum PgmStatus {
  /*
   Success.
   */
  PGM_STATUS_OK = 0,
  /*
   A required pointer argument was null.
   */
  PGM_STATUS_NULL_POINTER = 1,
  /*
   An argument value was rejected before any computation.
   */
  PGM_STATUS_INVALID_ARGUMENT = 2,
  /*
   Matrix or view dimensions are inconsistent.
   */
  PGM_STATUS_DIMENSION = 3,
  /*
   Input data is numerically degenerate (e.g. rank-deficient frames).
   */
  PGM_STATUS_DEGENERATE_INPUT = 4,
  /*
   An iterative numerical routine failed.
   */
  PGM_STATUS_NUMERICAL = 5,
  /*
   File could not be read or written.
   */
  PGM_STATUS_IO = 6,
  /*
   File exists but its contents are not in the expected format.
   */
  PGM_STATUS_MALFORMED = 7,
  /*
   Unexpected internal failure (caught panic).
   */
  PGM_STATUS_INTERNAL = 8,
} PgmStatus;

/*
 Spectral-clustering labels derived from a coefficient matrix.
 */
typedef struct PgmClustering PgmClustering;

/*
 The solved N×N coefficient matrix plus solver diagnostics.
 */
typedef struct PgmCoefficient PgmCoefficient;

/*
 A loaded multi-view dataset: the Grassmann points of every sample plus
 optional ground-truth labels.
 */
typedef struct PgmDataset PgmDataset;

/*
 The N×N product-manifold kernel Δ (with per-view parts), plus any labels
 inherited from the dataset.
 */
typedef struct PgmGram PgmGram;

/*
 The geodesic-distance weight matrix W and graph Laplacian L = D − W.
 */
typedef struct PgmLaplacian PgmLaplacian;

/*
 Solver parameters; mirror of the library's SolverConfig. `lambda` weights
 the fidelity term, `beta` the Laplacian regularizer.
 */
typedef struct PgmSolverConfig {
  double lambda;
  double beta;
  double mu0;
  double mu_max;
  double rho;
  double epsilon;
  size_t max_iters;
} PgmSolverConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message text of the most recent failure on the calling thread. The pointer
 stays valid until the next failing call on the same thread; never free it.
 */
const char *pgm_last_error_message(void);

/*
 Loads a dataset from a TOML manifest (see the pgmclust data_io docs for
 the format). On success writes a new handle to `out`.

 # Safety
 `manifest_path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PgmStatus pgm_dataset_load(const char *manifest_path, struct PgmDataset **out);

/*
 Number of samples in the dataset.

 # Safety
 `dataset` must be a live handle from [`pgm_dataset_load`].
 */
size_t pgm_dataset_len(const struct PgmDataset *dataset);

/*
 Number of views per sample (0 for an empty or null dataset).

 # Safety
 `dataset` must be a live handle from [`pgm_dataset_load`].
 */
size_t pgm_dataset_n_views(const struct PgmDataset *dataset);

/*
 Copies the dataset's ground-truth labels into `buf` (capacity `len`,
 must equal the sample count). Fails with `PGM_STATUS_INVALID_ARGUMENT` if
 the dataset carries no labels.

 # Safety
 `buf` must point to at least `len` writable u64 slots.
 */
enum PgmStatus pgm_dataset_labels(const struct PgmDataset *dataset, uint64_t *buf, size_t len);

/*
 Frees a dataset handle; null is ignored.

 # Safety
 `dataset` must be a handle from [`pgm_dataset_load`], freed at most once.
 */
void pgm_dataset_free(struct PgmDataset *dataset);

/*
 Builds the kernel stack Δ from a dataset.

 # Safety
 `dataset` must be a live handle; `out` a valid pointer.
 */
enum PgmStatus pgm_gram_build(const struct PgmDataset *dataset, struct PgmGram **out);

/*
 Number of samples covered by the kernel.

 # Safety
 `gram` must be a live handle from [`pgm_gram_build`].
 */
size_t pgm_gram_len(const struct PgmGram *gram);

/*
 Copies the summed kernel Δ row-major into `buf` (capacity `len` = N·N).

 # Safety
 `buf` must point to at least `len` writable doubles.
 */
enum PgmStatus pgm_gram_total(const struct PgmGram *gram, double *buf, size_t len);

/*
 Copies the ground-truth labels inherited from the dataset into `buf`
 (capacity `len` = N). Fails with `PGM_STATUS_INVALID_ARGUMENT` when the
 originating dataset carried no labels.

 # Safety
 `buf` must point to at least `len` writable u64 slots.
 */
enum PgmStatus pgm_gram_labels(const struct PgmGram *gram, uint64_t *buf, size_t len);

/*
 Frees a gram handle; null is ignored.

 # Safety
 `gram` must be a handle from [`pgm_gram_build`], freed at most once.
 */
void pgm_gram_free(struct PgmGram *gram);

/*
 Builds the distance-weight Laplacian from a dataset.

 # Safety
 `dataset` must be a live handle; `out` a valid pointer.
 */
enum PgmStatus pgm_laplacian_build(const struct PgmDataset *dataset, struct PgmLaplacian **out);

/*
 Frees a laplacian handle; null is ignored.

 # Safety
 `laplacian` must be a handle from [`pgm_laplacian_build`], freed at most once.
 */
void pgm_laplacian_free(struct PgmLaplacian *laplacian);

/*
 Default solver parameters for the given λ and β.
 */
struct PgmSolverConfig pgm_solver_config_default(double lambda, double beta);

/*
 Solves the Laplacian-regularized model by ALM.

 # Safety
 `gram`, `laplacian`, `config`, and `out` must be valid pointers.
 */
enum PgmStatus pgm_solve_alm(const struct PgmGram *gram,
                             const struct PgmLaplacian *laplacian,
                             const struct PgmSolverConfig *config,
                             struct PgmCoefficient **out);

/*
 Solves the plain (β = 0) model through its spectral closed form.
 `lambda` is the fidelity weight, as in [`pgm_solver_config_default`].

 # Safety
 `gram` and `out` must be valid pointers.
 */
enum PgmStatus pgm_solve_closed_form(const struct PgmGram *gram,
                                     double lambda,
                                     struct PgmCoefficient **out);

/*
 Side length N of the coefficient matrix.

 # Safety
 `coeff` must be a live handle from one of the solve calls.
 */
size_t pgm_coefficient_len(const struct PgmCoefficient *coeff);

/*
 Copies the coefficient matrix Z row-major into `buf` (capacity `len` = N·N).

 # Safety
 `buf` must point to at least `len` writable doubles.
 */
enum PgmStatus pgm_coefficient_matrix(const struct PgmCoefficient *coeff, double *buf, size_t len);

/*
 Iterations taken by the solver (0 for the closed form).

 # Safety
 `coeff` must be a live handle from one of the solve calls.
 */
size_t pgm_coefficient_iterations(const struct PgmCoefficient *coeff);

/*
 1 if the solver met its stopping criterion, 0 otherwise.

 # Safety
 `coeff` must be a live handle from one of the solve calls.
 */
int32_t pgm_coefficient_converged(const struct PgmCoefficient *coeff);

/*
 Final ‖Z − J‖_∞ gap at solver exit (0 for the closed form).

 # Safety
 `coeff` must be a live handle from one of the solve calls.
 */
double pgm_coefficient_final_gap(const struct PgmCoefficient *coeff);

/*
 Objective value at solver exit.

 # Safety
 `coeff` must be a live handle from one of the solve calls.
 */
double pgm_coefficient_objective(const struct PgmCoefficient *coeff);

/*
 Frees a coefficient handle; null is ignored.

 # Safety
 `coeff` must be a handle from one of the solve calls, freed at most once.
 */
void pgm_coefficient_free(struct PgmCoefficient *coeff);

/*
 Clusters the coefficient matrix into `k` groups with normalized spectral
 clustering; `seed` fixes the k-means initialization.

 # Safety
 `coeff` and `out` must be valid pointers.
 */
enum PgmStatus pgm_cluster(const struct PgmCoefficient *coeff,
                           size_t k,
                           uint64_t seed,
                           struct PgmClustering **out);

/*
 Number of labeled samples.

 # Safety
 `clustering` must be a live handle from [`pgm_cluster`].
 */
size_t pgm_clustering_len(const struct PgmClustering *clustering);

/*
 Copies the cluster labels into `buf` (capacity `len` = sample count).

 # Safety
 `buf` must point to at least `len` writable u64 slots.
 */
enum PgmStatus pgm_clustering_labels(const struct PgmClustering *clustering,
                                     uint64_t *buf,
                                     size_t len);

/*
 Frees a clustering handle; null is ignored.

 # Safety
 `clustering` must be a handle from [`pgm_cluster`], freed at most once.
 */
void pgm_clustering_free(struct PgmClustering *clustering);

/*
 Best-assignment clustering accuracy between two label vectors of equal
 length; writes the value in [0, 1] to `out`.

 # Safety
 `pred` and `truth` must point to `len` readable u64 values each.
 */
enum PgmStatus pgm_accuracy(const uint64_t *pred, const uint64_t *truth, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PGMCLUST_H */
