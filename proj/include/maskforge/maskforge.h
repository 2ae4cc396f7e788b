/* Copyright 2026 The maskforge Authors.
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
 * limitations under the License.
 */

/* C interface of libmaskforge.
 *
 * Functions return an mf_status.  On failure mf_last_error() and
 * mf_last_error_code() describe the error raised on the calling thread.
 * Strings returned through char** out-parameters are owned by the caller
 * and released with mf_string_free().  JSON documents use the same shapes
 * as the HTTP API.
 */

#ifndef MASKFORGE_MASKFORGE_H_
#define MASKFORGE_MASKFORGE_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MF_API __declspec(dllexport)
#else
#define MF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mf_status {
  MF_OK = 0,
  MF_ERR_ARGUMENT = 1,  /* null or malformed argument */
  MF_ERR_INVALID = 2,   /* rejected parameter or click */
  MF_ERR_NOT_FOUND = 3, /* unknown image, set or session */
  MF_ERR_CONFLICT = 4,  /* session exists, sealed, or stale revision */
  MF_ERR_DATA = 5,      /* unreadable or malformed input data */
  MF_ERR_IO = 6,        /* filesystem or socket failure */
  MF_ERR_INTERNAL = 7
} mf_status;

typedef struct mf_workspace mf_workspace;

typedef struct mf_mask_metrics {
  double precision;
  double recall;
  double f_measure;
  int64_t tp;
  int64_t fp;
  int64_t fn;
} mf_mask_metrics;

MF_API const char* mf_version(void);
MF_API const char* mf_last_error(void);
/* Error kind name, e.g. "InactiveRegion"; empty after success. */
MF_API const char* mf_last_error_code(void);
MF_API void mf_string_free(char* s);
MF_API void mf_set_warnings(int enabled);

MF_API mf_status mf_init_workspace(const char* manifest_path, const char* workspace_dir);
MF_API mf_status mf_workspace_open(const char* workspace_dir, mf_workspace** out);
MF_API void mf_workspace_close(mf_workspace* ws);

/* Session store.  `revision` < 0 skips the revision check. */
MF_API mf_status mf_session_create(mf_workspace* ws, const char* image_id, char** view_json);
MF_API mf_status mf_session_view(mf_workspace* ws, const char* session_id, char** view_json);
MF_API mf_status mf_session_click(mf_workspace* ws, const char* session_id, const char* kind,
                                  int region_id, int64_t revision, char** delta_json);
MF_API mf_status mf_session_commit(mf_workspace* ws, const char* session_id, int64_t revision,
                                   char** result_json);

/* Routes one HTTP-style request without a socket.  The body may contain
 * binary data (images); its length is stored in *response_len.  HTTP
 * errors still fill the body (the {error, message} document) and return the
 * matching status. */
MF_API mf_status mf_request(mf_workspace* ws, const char* method, const char* path,
                            const char* body, int* http_status, char** response_body,
                            size_t* response_len);

/* Experiments.  `output_dir` may be NULL (workspace default).  Evolvability
 * split sizes of 0 select the default thirds. */
MF_API mf_status mf_simulate(mf_workspace* ws, int flip_dict_enabled, const char* output_dir,
                             char** report_json);
MF_API mf_status mf_evaluate(mf_workspace* ws, const char* predictions_dir, char** report_json);
MF_API mf_status mf_evolvability(mf_workspace* ws, const char* set_id, int collect_a,
                                 int collect_b, int verify, char** report_json);

/* Blocks serving HTTP until the process ends. */
MF_API mf_status mf_serve(mf_workspace* ws, const char* host, int port);

/* Masks are width*height bytes, non-zero = set. */
MF_API mf_status mf_mask_metrics_compute(const uint8_t* predicted, const uint8_t* truth,
                                         int width, int height, mf_mask_metrics* out);

#ifdef __cplusplus
}
#endif

#endif /* MASKFORGE_MASKFORGE_H_ */
