// Copyright 2026 The maskforge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "maskforge/maskforge.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "evaluate.hpp"
#include "experiment.hpp"
#include "service.hpp"
#include "workspace.hpp"

struct mf_workspace {
  std::unique_ptr<maskforge::Workspace> ws;
};

namespace {

using maskforge::Error;
using maskforge::ErrorCode;

thread_local std::string g_last_error;
thread_local std::string g_last_code;

mf_status status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownImage:
    case ErrorCode::kUnknownSession:
      return MF_ERR_NOT_FOUND;
    case ErrorCode::kSessionExists:
    case ErrorCode::kAlreadySealed:
    case ErrorCode::kStaleRevision:
      return MF_ERR_CONFLICT;
    case ErrorCode::kInvalidParameter:
    case ErrorCode::kInactiveRegion:
    case ErrorCode::kAlreadyDivided:
    case ErrorCode::kInvalidRegion:
    case ErrorCode::kIndexOutOfRange:
    case ErrorCode::kTooFewImages:
      return MF_ERR_INVALID;
    case ErrorCode::kIoError:
      return MF_ERR_IO;
    case ErrorCode::kPipelineFailure:
      return MF_ERR_INTERNAL;
    default:
      return MF_ERR_DATA;
  }
}

mf_status fail(mf_status status, std::string code, std::string message) {
  g_last_code = std::move(code);
  g_last_error = std::move(message);
  return status;
}

// Runs `fn`, translating exceptions into status codes.
template <typename Fn>
mf_status guarded(Fn&& fn) {
  g_last_error.clear();
  g_last_code.clear();
  try {
    fn();
    return MF_OK;
  } catch (const Error& e) {
    return fail(status_for(e.code()), std::string(maskforge::to_string(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(MF_ERR_INTERNAL, "OutOfMemory", "out of memory");
  } catch (const std::exception& e) {
    return fail(MF_ERR_INTERNAL, "Internal", e.what());
  }
}

char* copy_out(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

mf_status null_argument() { return fail(MF_ERR_ARGUMENT, "InvalidArgument", "null argument"); }

}  // namespace

extern "C" {

const char* mf_version(void) { return "0.1.0"; }
const char* mf_last_error(void) { return g_last_error.c_str(); }
const char* mf_last_error_code(void) { return g_last_code.c_str(); }
void mf_string_free(char* s) { std::free(s); }
void mf_set_warnings(int enabled) { maskforge::set_warnings_enabled(enabled != 0); }

mf_status mf_init_workspace(const char* manifest_path, const char* workspace_dir) {
  if (!manifest_path || !workspace_dir) return null_argument();
  return guarded([&] { maskforge::init_workspace(manifest_path, workspace_dir); });
}

mf_status mf_workspace_open(const char* workspace_dir, mf_workspace** out) {
  if (!workspace_dir || !out) return null_argument();
  *out = nullptr;
  return guarded([&] {
    auto handle = std::make_unique<mf_workspace>();
    handle->ws = std::make_unique<maskforge::Workspace>(workspace_dir);
    *out = handle.release();
  });
}

void mf_workspace_close(mf_workspace* ws) { delete ws; }

mf_status mf_session_create(mf_workspace* ws, const char* image_id, char** view_json) {
  if (!ws || !image_id || !view_json) return null_argument();
  return guarded([&] {
    std::lock_guard lock(ws->ws->mutex());
    *view_json = copy_out(maskforge::session_view(ws->ws->create_session(image_id)).dump());
  });
}

mf_status mf_session_view(mf_workspace* ws, const char* session_id, char** view_json) {
  if (!ws || !session_id || !view_json) return null_argument();
  return guarded([&] {
    std::lock_guard lock(ws->ws->mutex());
    *view_json = copy_out(maskforge::session_view(ws->ws->session(session_id)).dump());
  });
}

mf_status mf_session_click(mf_workspace* ws, const char* session_id, const char* kind,
                           int region_id, int64_t revision, char** delta_json) {
  if (!ws || !session_id || !kind || !delta_json) return null_argument();
  nlohmann::json body = {{"kind", kind}, {"regionId", region_id}};
  if (revision >= 0) body["revision"] = revision;
  int status = 0;
  size_t len = 0;
  const std::string path = std::string("/api/sessions/") + session_id + "/clicks";
  const mf_status st =
      mf_request(ws, "POST", path.c_str(), body.dump().c_str(), &status, delta_json, &len);
  if (st != MF_OK) {
    mf_string_free(*delta_json);
    *delta_json = nullptr;
  }
  return st;
}

mf_status mf_session_commit(mf_workspace* ws, const char* session_id, int64_t revision,
                            char** result_json) {
  if (!ws || !session_id || !result_json) return null_argument();
  nlohmann::json body = nlohmann::json::object();
  if (revision >= 0) body["revision"] = revision;
  int status = 0;
  size_t len = 0;
  const std::string path = std::string("/api/sessions/") + session_id + "/commit";
  const mf_status st =
      mf_request(ws, "POST", path.c_str(), body.dump().c_str(), &status, result_json, &len);
  if (st != MF_OK) {
    mf_string_free(*result_json);
    *result_json = nullptr;
  }
  return st;
}

mf_status mf_request(mf_workspace* ws, const char* method, const char* path, const char* body,
                     int* http_status, char** response_body, size_t* response_len) {
  if (!ws || !method || !path || !http_status || !response_body || !response_len) {
    return null_argument();
  }
  *response_body = nullptr;
  maskforge::ApiResponse r;
  const mf_status st = guarded([&] {
    r = maskforge::handle_request(*ws->ws, method, path, body ? body : "");
    *http_status = r.status;
    *response_len = r.body.size();
    *response_body = copy_out(r.body);
  });
  if (st != MF_OK || r.status < 400) return st;
  const auto doc = nlohmann::json::parse(r.body, nullptr, false);
  const bool structured = doc.is_object();
  std::string code = structured ? doc.value("error", "") : "";
  std::string message = structured ? doc.value("message", "") : r.body;
  switch (r.status) {
    case 404: return fail(MF_ERR_NOT_FOUND, std::move(code), std::move(message));
    case 409: return fail(MF_ERR_CONFLICT, std::move(code), std::move(message));
    case 422: return fail(MF_ERR_INVALID, std::move(code), std::move(message));
    default: return fail(MF_ERR_INTERNAL, std::move(code), std::move(message));
  }
}

mf_status mf_simulate(mf_workspace* ws, int flip_dict_enabled, const char* output_dir,
                      char** report_json) {
  if (!ws || !report_json) return null_argument();
  return guarded([&] {
    std::lock_guard lock(ws->ws->mutex());
    maskforge::SimulateOptions opts;
    opts.flip_dict_enabled = flip_dict_enabled != 0;
    if (output_dir) opts.output_dir = output_dir;
    *report_json = copy_out(maskforge::simulate(*ws->ws, opts).to_json().dump(2));
  });
}

mf_status mf_evaluate(mf_workspace* ws, const char* predictions_dir, char** report_json) {
  if (!ws || !predictions_dir || !report_json) return null_argument();
  return guarded([&] {
    std::lock_guard lock(ws->ws->mutex());
    *report_json = copy_out(maskforge::evaluate_predictions(*ws->ws, predictions_dir).dump(2));
  });
}

mf_status mf_evolvability(mf_workspace* ws, const char* set_id, int collect_a, int collect_b,
                          int verify, char** report_json) {
  if (!ws || !set_id || !report_json) return null_argument();
  return guarded([&] {
    std::lock_guard lock(ws->ws->mutex());
    std::optional<maskforge::Splits> splits;
    if (collect_a > 0 || collect_b > 0 || verify > 0) {
      splits = maskforge::Splits{collect_a, collect_b, verify};
    }
    *report_json =
        copy_out(maskforge::run_evolvability(*ws->ws, set_id, splits).to_json().dump(2));
  });
}

mf_status mf_serve(mf_workspace* ws, const char* host, int port) {
  if (!ws || !host) return null_argument();
  return guarded([&] { maskforge::serve(*ws->ws, host, port); });
}

mf_status mf_mask_metrics_compute(const uint8_t* predicted, const uint8_t* truth, int width,
                                  int height, mf_mask_metrics* out) {
  if (!predicted || !truth || !out) return null_argument();
  return guarded([&] {
    if (width <= 0 || height <= 0) {
      throw Error(ErrorCode::kInvalidParameter, "mask dimensions must be positive");
    }
    const auto n = static_cast<std::size_t>(width) * height;
    std::vector<std::uint8_t> p(predicted, predicted + n);
    std::vector<std::uint8_t> t(truth, truth + n);
    for (auto& v : p) v = v ? 1 : 0;
    for (auto& v : t) v = v ? 1 : 0;
    const auto m = maskforge::mask_metrics(maskforge::BitMask(width, height, std::move(p)),
                                           maskforge::BitMask(width, height, std::move(t)));
    *out = {m.precision, m.recall, m.f_measure, m.tp, m.fp, m.fn};
  });
}

}  // extern "C"
