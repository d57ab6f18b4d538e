/* Copyright 2026 Trident Contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the license.
 */

/* C interface to the trident domain-adaptation pipeline. All functions are
 * synchronous; no exceptions cross this boundary. On failure the return code
 * classifies the error and trident_last_error() carries the message for the
 * calling thread. Every pipeline call writes run.txt (the fully resolved
 * configuration) into its output directory.
 */

#ifndef TRIDENT_CAPI_H
#define TRIDENT_CAPI_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum trident_status {
  TRIDENT_OK = 0,
  TRIDENT_ERR_USAGE = 1,   /* bad arguments / null pointers */
  TRIDENT_ERR_DATA = 2,    /* config, dataset, checkpoint or io problems */
  TRIDENT_ERR_NUMERIC = 3  /* non-finite loss abort */
} trident_status;

/* Opaque configuration handle. */
typedef struct trident_config trident_config;

const char* trident_version(void);

/* Message for the last failure on this thread; empty string if none. */
const char* trident_last_error(void);

trident_status trident_config_create(trident_config** out);
trident_status trident_config_load(const char* path, trident_config** out);
trident_status trident_config_set(trident_config* cfg, const char* key, const char* value);
trident_status trident_config_get(const trident_config* cfg, const char* key, char* buf,
                                  unsigned long bufsize);
trident_status trident_config_apply_preset(trident_config* cfg, const char* preset);
trident_status trident_config_write(const trident_config* cfg, const char* path);
void trident_config_free(trident_config* cfg);

/* Generate the synthetic two-domain dataset into out_dir. */
trident_status trident_gen_data(const trident_config* cfg, const char* out_dir);

/* Train per the config (stage, weights, schedule); checkpoints and
 * metrics.csv land in out_dir. The dataset root comes from the config's
 * data_dir; stage 2 reads pseudo labels from pseudo_dir. */
trident_status trident_train(const trident_config* cfg, const char* out_dir);

/* Offline pseudo-labelling of the target training split. */
trident_status trident_pseudo_label(const trident_config* cfg, const char* checkpoint,
                                    const char* out_dir);

/* Per-class IoU / mIoU of a checkpoint on the held-out target eval split. */
trident_status trident_evaluate(const trident_config* cfg, const char* checkpoint,
                                const char* out_dir);

/* Feature-space domain-gap analysis (CCD + 2-D projection). */
trident_status trident_analyze(const trident_config* cfg, const char* checkpoint,
                               const char* out_dir);

/* Translation-quality assay judged by a source-only segmenter. */
trident_status trident_translate(const trident_config* cfg, const char* adapted_checkpoint,
                                 const char* source_only_checkpoint, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* TRIDENT_CAPI_H */
