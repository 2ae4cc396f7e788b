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

// HTTP/JSON front end of a workspace.
//
//   POST /api/sessions                {imageId}
//   GET  /api/sessions/{id}
//   POST /api/sessions/{id}/clicks    {kind, regionId, revision?}
//   POST /api/sessions/{id}/commit    {revision?}
//   GET  /api/images/{id}             PNG bytes
//   GET  /api/sets
//
// Errors are {error, message} with 404 (unknown image/session), 409
// (existing session, sealed session, stale revision), 422 (invalid click or
// body) or 500 (anything else).

#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "annotate.hpp"
#include "error.hpp"
#include "workspace.hpp"

namespace maskforge {

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

int http_status(ErrorCode code);

// Full view: every active region with its RLE geometry.
nlohmann::json session_view(const AnnotationSession& s);

// Routes one request; takes the workspace mutex.
ApiResponse handle_request(Workspace& ws, std::string_view method, std::string_view path,
                           std::string_view body);

// Blocks serving on host:port until the process is stopped.  Throws IoError
// when the socket cannot be bound.
void serve(Workspace& ws, const std::string& host, int port);

}  // namespace maskforge
