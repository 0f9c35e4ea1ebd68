/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C API for the KFNO battery state estimator.
 *
 * The library trains and runs a joint battery model: a Koopman-style
 * autoencoder forecasts per-cycle maximum capacity (state of health), and a
 * Fourier neural operator reads the within-cycle state-of-charge trajectory
 * off the measured sensor curves conditioned on that forecast.
 *
 * Conventions:
 *   - Opaque handles own their memory; destroy them with the matching
 *     *_destroy function. Handles are not thread-safe; use one per thread.
 *   - Functions returning int return KFNO_OK (0) on success and a nonzero
 *     status on failure. Functions returning a pointer return NULL on
 *     failure. In both cases kfno_last_error() describes the failure; the
 *     message is thread-local and valid until the next failing call on the
 *     same thread.
 *   - Returned char* strings are heap-allocated; release them with
 *     kfno_string_free. They never alias internal state.
 */

#ifndef KFNO_KFNO_H
#define KFNO_KFNO_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define KFNO_EXPORT __declspec(dllexport)
#else
#define KFNO_EXPORT __attribute__((visibility("default")))
#endif

enum {
  KFNO_OK = 0,
  KFNO_ERR_INVALID_ARGUMENT = 1, /* bad handle, NULL pointer, bad value */
  KFNO_ERR_IO = 2,               /* file could not be read or written */
  KFNO_ERR_RUNTIME = 3           /* model/data error; see kfno_last_error() */
};

typedef struct kfno_config kfno_config_t;   /* resolved run configuration */
typedef struct kfno_dataset kfno_dataset_t; /* loaded battery cycle data */
typedef struct kfno_model kfno_model_t;     /* trained model + scaler */

/* Library version string, e.g. "1.0.0". Static storage; do not free. */
KFNO_EXPORT const char* kfno_version(void);

/* Message of the most recent failure on this thread ("" if none). Static
 * thread-local storage; do not free. */
KFNO_EXPORT const char* kfno_last_error(void);

/* Releases a string returned by this library. NULL is a no-op. */
KFNO_EXPORT void kfno_string_free(char* s);

/* --- configuration -------------------------------------------------------- */

/* A config with every field at its documented default. Never fails. */
KFNO_EXPORT kfno_config_t* kfno_config_create(void);

/* Config from a (possibly partial) JSON document applied over the defaults.
 * Unknown keys, wrong types, and out-of-range values are rejected. */
KFNO_EXPORT kfno_config_t* kfno_config_from_json(const char* json_text);
KFNO_EXPORT kfno_config_t* kfno_config_from_file(const char* path);

/* Applies another partial JSON document on top of an existing config. */
KFNO_EXPORT int kfno_config_set_json(kfno_config_t* cfg, const char* json_text);

/* Canonical JSON rendering (stable key order) of the resolved config. */
KFNO_EXPORT char* kfno_config_to_json(const kfno_config_t* cfg);

/* Fingerprint of the canonical JSON; checkpoints embed and verify it. */
KFNO_EXPORT char* kfno_config_hash(const kfno_config_t* cfg);

KFNO_EXPORT void kfno_config_destroy(kfno_config_t* cfg);

/* --- synthetic data --------------------------------------------------------- */

/* Generates one synthetic battery from cfg's "synth" section and writes
 * <id>_cycles.csv, <id>_meta.json, <id>_truth.csv into out_dir. */
KFNO_EXPORT int kfno_synth_battery(const kfno_config_t* cfg, const char* out_dir);

/* Generates the three-battery transfer fleet (two sources plus one battery
 * whose generating condition is shifted). `shift` is "temperature",
 * "charge-rate", or "chemistry". */
KFNO_EXPORT int kfno_synth_fleet(const kfno_config_t* cfg, const char* shift,
                                 const char* out_dir);

/* --- datasets --------------------------------------------------------------- */

/* Loads every <id>_cycles.csv / <id>_meta.json pair in a directory (or the
 * one battery whose cycle CSV path is given), resampling every cycle onto an
 * n_c-point grid. n_c must be at least 2. */
KFNO_EXPORT kfno_dataset_t* kfno_dataset_load(const char* data_path, int n_c);

KFNO_EXPORT size_t kfno_dataset_battery_count(const kfno_dataset_t* ds);

/* Battery id at `index` (load order is sorted by id). */
KFNO_EXPORT char* kfno_dataset_battery_id(const kfno_dataset_t* ds, size_t index);

KFNO_EXPORT void kfno_dataset_destroy(kfno_dataset_t* ds);

/* --- training --------------------------------------------------------------- */

/* Trains on the dataset under the contiguous protocol: the last
 * test_fraction of every battery's cycles is held out, evenly spaced interior
 * cycles of each training block serve as validation, and both model pathways
 * are optimised jointly with early stopping. Deterministic for a fixed
 * config. */
KFNO_EXPORT kfno_model_t* kfno_train(const kfno_config_t* cfg,
                                     const kfno_dataset_t* ds);

/* Versioned JSON checkpoint (config + fingerprint + scaler + parameters). */
KFNO_EXPORT int kfno_model_save(const kfno_model_t* m, const char* path);
KFNO_EXPORT kfno_model_t* kfno_model_load(const char* path);

/* Canonical JSON of the config the model was trained under. */
KFNO_EXPORT char* kfno_model_config_json(const kfno_model_t* m);

/* Per-epoch training log as CSV (empty for freshly loaded checkpoints). */
KFNO_EXPORT char* kfno_model_history_csv(const kfno_model_t* m);

/* Eigenvalues of the latent degradation operator as CSV with a
 * "# rho=<spectral radius>" header line. */
KFNO_EXPORT char* kfno_model_spectrum_csv(const kfno_model_t* m);

KFNO_EXPORT void kfno_model_destroy(kfno_model_t* m);

/* --- evaluation -------------------------------------------------------------- */

/* Scores the model on the dataset's held-out blocks (the same contiguous
 * split rule the model was trained under). Returns the metrics as JSON.
 * When predictions_csv_out is non-NULL it receives the per-sample
 * predictions as CSV (caller frees via kfno_string_free). rollout != 0
 * propagates the model's own latent trajectory instead of stepping from each
 * measured predecessor. */
KFNO_EXPORT char* kfno_evaluate(const kfno_model_t* m, const kfno_dataset_t* ds,
                                int rollout, char** predictions_csv_out);

/* One-step (or rollout) predictions over every battery's full cycle
 * sequence, first cycle as context. Returns CSV. */
KFNO_EXPORT char* kfno_predict(const kfno_model_t* m, const kfno_dataset_t* ds,
                               int rollout);

/* Full transfer protocol. Trains a pooled base model on the source
 * batteries named by cfg's "split" section (default: all but the last
 * battery), then for every fraction k in k_list adapts a copy on the
 * earliest ceil(k*N) cycles of the held-out battery and scores the rest
 * one-step. Writes into out_dir:
 *   base_checkpoint.json, base_history.csv,
 *   metrics_k<k>.json, predictions_k<k>.csv, spectrum_k<k>.csv
 * and returns the combined per-k metrics as a JSON array. */
KFNO_EXPORT char* kfno_run_ood(const kfno_config_t* cfg, const kfno_dataset_t* ds,
                               const double* k_list, size_t k_count,
                               const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* KFNO_KFNO_H */
