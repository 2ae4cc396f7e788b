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

#include "error.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace maskforge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParameter: return "InvalidParameter";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kUnreadableFile: return "UnreadableFile";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kImageTooSmall: return "ImageTooSmall";
    case ErrorCode::kInvalidRegion: return "InvalidRegion";
    case ErrorCode::kEmptyMask: return "EmptyMask";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kInconsistentDims: return "InconsistentDims";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kEmptyTagList: return "EmptyTagList";
    case ErrorCode::kMissingFeatures: return "MissingFeatures";
    case ErrorCode::kEmptyDictionary: return "EmptyDictionary";
    case ErrorCode::kMissingMask: return "MissingMask";
    case ErrorCode::kNoCodesPresent: return "NoCodesPresent";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kMalformedFile: return "MalformedFile";
    case ErrorCode::kInactiveRegion: return "InactiveRegion";
    case ErrorCode::kAlreadyDivided: return "AlreadyDivided";
    case ErrorCode::kManifestInvalid: return "ManifestInvalid";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kUnknownImage: return "UnknownImage";
    case ErrorCode::kSessionExists: return "SessionExists";
    case ErrorCode::kUnknownSession: return "UnknownSession";
    case ErrorCode::kAlreadySealed: return "AlreadySealed";
    case ErrorCode::kStaleRevision: return "StaleRevision";
    case ErrorCode::kPipelineFailure: return "PipelineFailure";
    case ErrorCode::kTooFewImages: return "TooFewImages";
  }
  return "Unknown";
}

namespace {
std::atomic<bool> g_warnings_enabled{true};
std::mutex g_warn_mutex;
}  // namespace

void warn(std::string_view message) {
  if (!g_warnings_enabled.load(std::memory_order_relaxed)) return;
  std::lock_guard<std::mutex> lock(g_warn_mutex);
  std::cerr << "maskforge: warning: " << message << '\n';
}

void set_warnings_enabled(bool enabled) { g_warnings_enabled = enabled; }

}  // namespace maskforge
