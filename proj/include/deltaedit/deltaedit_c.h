//  Copyright (c) 2026 The deltaedit Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#ifndef DELTAEDIT_C_H_
#define DELTAEDIT_C_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32) && defined(DELTAEDIT_BUILDING_LIBRARY)
#define DE_API __declspec(dllexport)
#elif defined(_WIN32)
#define DE_API __declspec(dllimport)
#else
#define DE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define DE_API_VERSION 1u

typedef enum de_status {
  DE_OK = 0,
  DE_ERR_INVALID_ARGUMENT = 1,
  DE_ERR_DIMENSION = 2,
  DE_ERR_NUMERICAL = 3,
  DE_ERR_IO = 4,
  DE_ERR_SCHEMA = 5,
  DE_ERR_OUT_OF_RANGE = 6,
  DE_ERR_INTERNAL = 99
} de_status;

typedef struct de_config de_config;
typedef struct de_report de_report;          /* one or more runs */
typedef struct de_comparison de_comparison;
typedef struct de_universe de_universe;
typedef struct de_ledger de_ledger;

typedef struct de_row {
  int32_t edit_index;
  double eff_top, gen_top, spe_top;
  double eff_larger, gen_larger, spe_larger;
  double noise_e;
  double k_beta;
  double overlap;
  int32_t activations;
  double mean_shift;
} de_row;

typedef struct de_noise_summary {
  size_t n_edits;
  double average_noise;
  double mean_cross_activation;  /* 0 below two edits */
  double overlap_mean;
  double overlap_max;
  int32_t overlap_zero_norm;
  int32_t constrained_edits;
  double max_identity_gap;       /* max relative gap between the two noise evaluations */
  int32_t bound_violations;      /* edits where lhs > rhs + 1e-9 */
  double last_split_residual;
} de_noise_summary;

DE_API uint32_t de_api_version(void);
/* Message of the last failing call on this thread; empty when none. */
DE_API const char* de_last_error(void);
DE_API const char* de_status_name(de_status status);

/* Run configuration. Keys mirror the C++ field names:
   int:    d_in d_out vocab_size n_facts n_pool n_rephrase n_edits eval_every
           train_steps warmup_edits max_unrelated shuffle stats_on_constrained
   double: rho cos_min rephrase_noise mean_strength key_noise target_zipf ridge
           logit_scale eta delta_coef learn_rate rank_cap_ratio eig_zero_rel
           outlier_kappa stop_margin
   string: method output_path */
DE_API de_status de_config_create(de_config** out);
DE_API void de_config_destroy(de_config* config);
DE_API de_status de_config_set_int(de_config* config, const char* key, int64_t value);
DE_API de_status de_config_get_int(const de_config* config, const char* key, int64_t* out);
DE_API de_status de_config_set_double(de_config* config, const char* key, double value);
DE_API de_status de_config_get_double(const de_config* config, const char* key, double* out);
DE_API de_status de_config_set_string(de_config* config, const char* key, const char* value);
DE_API de_status de_config_set_seeds(de_config* config, const uint64_t* seeds, size_t count);
DE_API size_t de_config_seed_count(const de_config* config);
DE_API uint64_t de_config_seed(const de_config* config, size_t index);
DE_API de_status de_config_validate(const de_config* config);

DE_API de_status de_run(const de_config* config, uint64_t seed, de_report** out);
/* Stops after `stop_after` edits; save its state and ledger to resume later. */
DE_API de_status de_run_partial(const de_config* config, uint64_t seed, int32_t stop_after,
                                de_report** out);
DE_API de_status de_resume(const de_config* config, uint64_t seed, const char* state_path,
                           const char* ledger_path, de_report** out);
DE_API de_status de_sweep_eta(const de_config* config, const double* etas, size_t count,
                              uint64_t seed, de_report** out);
/* methods: "memit", "alphaedit", "deltaedit" or "deltaedit:<eta>" */
DE_API de_status de_compare(const de_config* config, const char* const* methods, size_t count,
                            uint64_t seed, de_comparison** out);

DE_API size_t de_report_count(const de_report* report);
DE_API const char* de_report_label(const de_report* report, size_t run);
DE_API size_t de_report_row_count(const de_report* report, size_t run);
DE_API de_status de_report_row(const de_report* report, size_t run, size_t row, de_row* out);
DE_API double de_report_wall_time(const de_report* report, size_t run);
DE_API de_status de_report_export(const de_report* report, size_t run, const char* json_path,
                                  int include_timing);
/* All runs in one JSON document. */
DE_API de_status de_report_export_all(const de_report* report, const char* json_path,
                                      int include_timing);
DE_API de_status de_report_save_state(const de_report* report, size_t run, const char* path);
DE_API de_status de_report_save_ledger(const de_report* report, size_t run, const char* path);
/* Frobenius norm of the final W. */
DE_API double de_report_final_w_norm(const de_report* report, size_t run);
DE_API void de_report_destroy(de_report* report);

DE_API size_t de_comparison_count(const de_comparison* cmp);
DE_API const char* de_comparison_label(const de_comparison* cmp, size_t index);
DE_API de_status de_comparison_row(const de_comparison* cmp, size_t index, de_row* out);
DE_API de_status de_comparison_export(const de_comparison* cmp, const char* json_path);
DE_API void de_comparison_destroy(de_comparison* cmp);

DE_API de_status de_universe_generate(const de_config* config, uint64_t seed, de_universe** out);
DE_API de_status de_universe_load(const char* path, de_universe** out);
DE_API de_status de_universe_save(const de_universe* universe, const char* path);
DE_API de_status de_universe_dims(const de_universe* universe, int32_t* d_in, int32_t* d_out,
                                  int32_t* vocab_size, int32_t* n_facts);
DE_API void de_universe_destroy(de_universe* universe);

DE_API de_status de_ledger_load(const char* path, de_ledger** out);
DE_API size_t de_ledger_size(const de_ledger* ledger);
/* Noise of edit `index` (0-based) by the direct and the expanded formula. */
DE_API de_status de_ledger_noise(const de_ledger* ledger, size_t index, double* direct,
                                 double* expansion);
DE_API de_status de_ledger_deviation(const de_ledger* ledger, size_t index, double* lhs, double* rhs);
DE_API de_status de_ledger_summary(const de_ledger* ledger, de_noise_summary* out);
DE_API void de_ledger_destroy(de_ledger* ledger);

#ifdef __cplusplus
}
#endif

#endif  // DELTAEDIT_C_H_
