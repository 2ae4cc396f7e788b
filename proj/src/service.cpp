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

#include "service.hpp"

#include <chrono>
#include <mutex>
#include <optional>
#include <vector>

#include <httplib.h>

#include "image_io.hpp"
#include "rle.hpp"

namespace maskforge {

using nlohmann::json;

namespace {

ApiResponse json_response(int status, const json& body) {
  return {status, "application/json", body.dump()};
}

ApiResponse error_response(int status, std::string_view code, const std::string& message) {
  return json_response(status, {{"error", code}, {"message", message}});
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    const auto j = path.find('/', i);
    const auto end = j == std::string_view::npos ? path.size() : j;
    if (end > i) parts.emplace_back(path.substr(i, end - i));
    i = end + 1;
  }
  return parts;
}

json region_json(const AnnotationSession& s, int id) {
  const int coarse_id = s.is_coarse(id) ? id : s.parent(id);
  json r = {{"id", id},
            {"scale", s.is_coarse(id) ? "coarse" : "fine"},
            {"label", s.label(id)},
            {"probability", s.probabilities()[coarse_id]},
            {"autoFlipped", s.auto_flipped().count(coarse_id) > 0},
            {"rle", encode_rle(s.region_mask(id))}};
  if (!s.is_coarse(id)) r["parent"] = coarse_id;
  return r;
}

long long now_millis() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

json parse_body(std::string_view body) {
  if (body.empty()) return json::object();
  try {
    json doc = json::parse(body);
    if (!doc.is_object()) throw Error(ErrorCode::kInvalidParameter, "body must be an object");
    return doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidParameter, std::string("bad JSON body: ") + e.what());
  }
}

std::optional<long long> revision_of(const json& body) {
  if (!body.contains("revision") || body["revision"].is_null()) return std::nullopt;
  if (!body["revision"].is_number_integer()) {
    throw Error(ErrorCode::kInvalidParameter, "revision must be an integer");
  }
  return body["revision"].get<long long>();
}

ApiResponse route(Workspace& ws, std::string_view method, const std::vector<std::string>& p,
                  std::string_view raw_body) {
  const bool get = method == "GET";
  const bool post = method == "POST";
  if (p.size() < 2 || p[0] != "api") return error_response(404, "NotFound", "no such route");

  if (p[1] == "sets" && p.size() == 2 && get) {
    json sets = json::array();
    for (const auto& s : ws.manifest().sets) {
      sets.push_back({{"setId", s.set_id},
                      {"tags", s.tags},
                      {"annotated", s.annotated},
                      {"images", s.image_ids}});
    }
    return json_response(200, {{"sets", sets}});
  }
  if (p[1] == "images" && p.size() == 3 && get) {
    const auto& entry = ws.image(p[2]);
    const auto bytes = encode_png(load_image(entry.path));
    return {200, "image/png", std::string(bytes.begin(), bytes.end())};
  }
  if (p[1] == "sessions") {
    if (p.size() == 2 && post) {
      const json body = parse_body(raw_body);
      if (!body.contains("imageId") || !body["imageId"].is_string()) {
        throw Error(ErrorCode::kInvalidParameter, "imageId is required");
      }
      const auto& s = ws.create_session(body["imageId"].get<std::string>());
      return json_response(200, session_view(s));
    }
    if (p.size() == 3 && get) return json_response(200, session_view(ws.session(p[2])));
    if (p.size() == 4 && post && p[3] == "clicks") {
      const json body = parse_body(raw_body);
      ClickEvent ev;
      try {
        ev.kind = click_kind_from_string(body.at("kind").get<std::string>());
        ev.target = body.at("regionId").get<int>();
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kInvalidParameter, std::string("click body: ") + e.what());
      }
      ev.timestamp = now_millis();
      const auto delta = ws.click(p[2], ev, revision_of(body));
      const auto& s = ws.session(p[2]);
      json changed = json::array();
      for (int id : delta.changed) changed.push_back({{"id", id}, {"label", s.label(id)}});
      json added = json::array();
      for (int id : delta.added) added.push_back(region_json(s, id));
      return json_response(200, {{"sessionId", s.image_id()},
                                 {"revision", s.revision()},
                                 {"clickCount", s.click_log().size()},
                                 {"changed", changed},
                                 {"removed", delta.removed},
                                 {"added", added}});
    }
    if (p.size() == 4 && post && p[3] == "commit") {
      const json body = parse_body(raw_body);
      const auto result = ws.commit(p[2], revision_of(body));
      return json_response(200, {{"sessionId", p[2]},
                                 {"revision", result.revision},
                                 {"maskPath", result.mask_path.string()},
                                 {"falsePositives", result.flips.false_positives},
                                 {"falseNegatives", result.flips.false_negatives}});
    }
  }
  return error_response(404, "NotFound", "no such route");
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownImage:
    case ErrorCode::kUnknownSession:
      return 404;
    case ErrorCode::kSessionExists:
    case ErrorCode::kAlreadySealed:
    case ErrorCode::kStaleRevision:
      return 409;
    case ErrorCode::kInactiveRegion:
    case ErrorCode::kAlreadyDivided:
    case ErrorCode::kInvalidParameter:
      return 422;
    default:
      return 500;
  }
}

json session_view(const AnnotationSession& s) {
  json regions = json::array();
  for (int id : s.active_regions()) regions.push_back(region_json(s, id));
  return {{"sessionId", s.image_id()},
          {"imageId", s.image_id()},
          {"width", s.coarse().width()},
          {"height", s.coarse().height()},
          {"revision", s.revision()},
          {"sealed", s.sealed()},
          {"clickCount", s.click_log().size()},
          {"regionCount", regions.size()},
          {"autoFlipped", s.auto_flipped()},
          {"regions", regions}};
}

ApiResponse handle_request(Workspace& ws, std::string_view method, std::string_view path,
                           std::string_view body) {
  std::lock_guard lock(ws.mutex());
  try {
    return route(ws, method, split_path(path), body);
  } catch (const Error& e) {
    const int status = http_status(e.code());
    const std::string_view code =
        status == 500 && e.code() != ErrorCode::kPipelineFailure ? "PipelineFailure"
                                                                  : to_string(e.code());
    return error_response(status, code, e.what());
  } catch (const std::exception& e) {
    return error_response(500, "PipelineFailure", e.what());
  }
}

void serve(Workspace& ws, const std::string& host, int port) {
  httplib::Server server;
  auto bridge = [&ws](const httplib::Request& req, httplib::Response& res) {
    const auto r = handle_request(ws, req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server.Get(R"(/api/.*)", bridge);
  server.Post(R"(/api/.*)", bridge);
  if (!server.bind_to_port(host, port)) {
    throw Error(ErrorCode::kIoError, "cannot bind " + host + ":" + std::to_string(port));
  }
  server.listen_after_bind();
}

}  // namespace maskforge
