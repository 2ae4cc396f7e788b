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

// Exercises the shared library through its C header only.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

#include <maskforge/maskforge.h>

#include <json.hpp>

#include "synth.hpp"

namespace {

int failures = 0;

void expect(bool ok, const char* what) {
  if (!ok) {
    ++failures;
    std::fprintf(stderr, "FAILED: %s (%s)\n", what, mf_last_error());
  }
}

std::string take(char* s) {
  std::string out = s ? s : "";
  mf_string_free(s);
  return out;
}

}  // namespace

int main() {
  using maskforge::synth::fresh_dir;
  mf_set_warnings(0);
  expect(std::strlen(mf_version()) > 0, "version");

  auto spec = maskforge::synth::object_dataset_spec();
  spec.erase(spec.begin() + 1);
  for (auto& s : spec) s.images = 3;
  const auto manifest = maskforge::synth::write_dataset(fresh_dir("capi_data"), spec, 4);
  const auto root = fresh_dir("capi_ws");
  expect(mf_init_workspace(manifest.c_str(), root.c_str()) == MF_OK, "init");
  expect(mf_init_workspace("/nonexistent/manifest.json", root.c_str()) != MF_OK, "bad manifest");

  mf_workspace* ws = nullptr;
  expect(mf_workspace_open(root.c_str(), &ws) == MF_OK && ws, "open");

  char* out = nullptr;
  expect(mf_session_create(ws, "apples_0", &out) == MF_OK, "create");
  const auto view = nlohmann::json::parse(take(out));
  const int region = view["regions"][0]["id"];

  out = nullptr;
  expect(mf_session_create(ws, "apples_0", &out) == MF_ERR_CONFLICT, "duplicate create");
  expect(std::string(mf_last_error_code()) == "SessionExists", "duplicate code");
  expect(mf_session_create(ws, "ghost", &out) == MF_ERR_NOT_FOUND, "unknown image");

  expect(mf_session_click(ws, "apples_0", "leftFlip", region, 0, &out) == MF_OK, "click");
  const auto delta = nlohmann::json::parse(take(out));
  expect(delta["revision"] == 1, "click revision");
  expect(mf_session_click(ws, "apples_0", "leftFlip", region, 0, &out) == MF_ERR_CONFLICT,
         "stale revision");
  expect(mf_session_click(ws, "apples_0", "rightDivide", region, -1, &out) == MF_OK, "divide");
  take(out);
  expect(mf_session_click(ws, "apples_0", "leftFlip", region, -1, &out) == MF_ERR_INVALID,
         "inactive region");
  expect(std::string(mf_last_error_code()) == "InactiveRegion", "inactive code");

  int status = 0;
  size_t len = 0;
  expect(mf_request(ws, "GET", "/api/sessions/apples_0", "", &status, &out, &len) == MF_OK &&
             status == 200,
         "request view");
  expect(nlohmann::json::parse(take(out))["clickCount"] == 2, "click count");
  expect(mf_request(ws, "GET", "/api/images/apples_1", "", &status, &out, &len) == MF_OK &&
             len > 8 && std::memcmp(out, "\x89PNG", 4) == 0,
         "image bytes");
  take(out);
  mf_request(ws, "GET", "/api/sessions/none", "", &status, &out, &len);
  expect(status == 404, "request 404");
  expect(nlohmann::json::parse(take(out))["error"] == "UnknownSession", "404 body");

  expect(mf_session_commit(ws, "apples_0", -1, &out) == MF_OK, "commit");
  const auto commit = nlohmann::json::parse(take(out));
  expect(commit.contains("maskPath"), "commit mask path");

  expect(mf_simulate(ws, 1, nullptr, &out) == MF_OK, "simulate");
  expect(nlohmann::json::parse(take(out)).contains("perImage"), "simulate report");
  const auto preds = root / "simulate" / "masks";
  expect(mf_evaluate(ws, preds.c_str(), &out) == MF_OK, "evaluate");
  expect(nlohmann::json::parse(take(out))["missing"].empty(), "evaluate report");
  expect(mf_evolvability(ws, "apples", 0, 0, 0, &out) == MF_OK, "evolvability");
  take(out);

  const uint8_t a[4] = {1, 1, 0, 0}, b[4] = {1, 0, 1, 0};
  mf_mask_metrics m{};
  expect(mf_mask_metrics_compute(a, b, 2, 2, &m) == MF_OK && m.tp == 1 && m.precision == 0.5,
         "metrics");
  expect(mf_mask_metrics_compute(nullptr, b, 2, 2, &m) == MF_ERR_ARGUMENT, "null metrics");

  mf_workspace_close(ws);
  std::printf("%s\n", failures ? "capi: FAIL" : "capi: PASS");
  return failures ? EXIT_FAILURE : EXIT_SUCCESS;
}
