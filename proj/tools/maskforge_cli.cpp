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

// maskforge command-line driver.  Exit codes: 0 success, 1 usage,
// 2 data error, 3 internal error.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "maskforge/maskforge.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

int report_failure(mf_status st) {
  std::cerr << "maskforge: " << mf_last_error() << "\n";
  if (st == MF_ERR_ARGUMENT) return kExitUsage;
  if (st == MF_ERR_INTERNAL) return kExitInternal;
  return kExitData;
}

// Prints and frees a JSON document produced by the library.
int emit(mf_status st, char*& text) {
  if (st != MF_OK) return report_failure(st);
  std::cout << text << "\n";
  mf_string_free(text);
  text = nullptr;
  return 0;
}

struct WorkspaceHandle {
  mf_workspace* ws = nullptr;
  ~WorkspaceHandle() { mf_workspace_close(ws); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"maskforge: superpixel mask annotation with sparse-coding priors"};
  app.require_subcommand(1);

  std::string manifest;
  std::string workspace;
  std::string host = "127.0.0.1";
  int port = 8080;
  bool no_flip = false;
  std::string out_dir;
  std::string predictions;
  std::string set_id;
  std::vector<int> splits;

  auto* init = app.add_subcommand("init", "build dictionaries for every unannotated set");
  init->add_option("manifest", manifest, "dataset manifest (JSON)")->required();
  init->add_option("workspace", workspace, "workspace directory")->required();

  auto* serve = app.add_subcommand("serve", "serve the HTTP annotation API");
  serve->add_option("workspace", workspace, "workspace directory")->required();
  serve->add_option("--port", port, "TCP port")->check(CLI::Range(1, 65535));
  serve->add_option("--host", host, "bind address");

  auto* simulate = app.add_subcommand("simulate", "run the oracle annotator over the dataset");
  simulate->add_option("workspace", workspace, "workspace directory")->required();
  simulate->add_flag("--no-flip-dict", no_flip, "disable flip dictionaries");
  simulate->add_option("--out", out_dir, "output directory (default <workspace>/simulate)");

  auto* eval = app.add_subcommand("eval", "score predicted masks against ground truth");
  eval->add_option("workspace", workspace, "workspace directory")->required();
  eval->add_option("predictions", predictions, "directory of <imageId>.png masks")->required();

  auto* evolve = app.add_subcommand("evolve", "flip-dictionary evolvability study on one set");
  evolve->add_option("workspace", workspace, "workspace directory")->required();
  evolve->add_option("set", set_id, "set id")->required();
  evolve->add_option("--splits", splits, "collectA collectB verify sizes")
      ->expected(3)
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  if (init->parsed()) {
    const mf_status st = mf_init_workspace(manifest.c_str(), workspace.c_str());
    if (st != MF_OK) return report_failure(st);
    std::cout << "initialized " << workspace << "\n";
    return 0;
  }

  WorkspaceHandle h;
  if (const mf_status st = mf_workspace_open(workspace.c_str(), &h.ws); st != MF_OK) {
    return report_failure(st);
  }
  char* text = nullptr;
  if (serve->parsed()) {
    std::cerr << "serving " << workspace << " on http://" << host << ":" << port << "\n";
    const mf_status st = mf_serve(h.ws, host.c_str(), port);
    return st == MF_OK ? 0 : report_failure(st);
  }
  if (simulate->parsed()) {
    const mf_status st = mf_simulate(h.ws, no_flip ? 0 : 1,
                                     out_dir.empty() ? nullptr : out_dir.c_str(), &text);
    return emit(st, text);
  }
  if (eval->parsed()) {
    const mf_status st = mf_evaluate(h.ws, predictions.c_str(), &text);
    return emit(st, text);
  }
  if (evolve->parsed()) {
    const int a = splits.size() == 3 ? splits[0] : 0;
    const int b = splits.size() == 3 ? splits[1] : 0;
    const int v = splits.size() == 3 ? splits[2] : 0;
    const mf_status st = mf_evolvability(h.ws, set_id.c_str(), a, b, v, &text);
    return emit(st, text);
  }
  return kExitUsage;
}
