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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace maskforge {

enum class ErrorCode {
  kInvalidParameter,
  kDimensionMismatch,
  kUnreadableFile,
  kUnsupportedFormat,
  kImageTooSmall,
  kInvalidRegion,
  kEmptyMask,
  kTooFewSamples,
  kMalformedLine,
  kInconsistentDims,
  kBadMagic,
  kTruncatedFile,
  kEmptyTagList,
  kMissingFeatures,
  kEmptyDictionary,
  kMissingMask,
  kNoCodesPresent,
  kIndexOutOfRange,
  kMalformedFile,
  kInactiveRegion,
  kAlreadyDivided,
  kManifestInvalid,
  kIoError,
  kUnknownImage,
  kSessionExists,
  kUnknownSession,
  kAlreadySealed,
  kStaleRevision,
  kPipelineFailure,
  kTooFewImages,
};

std::string_view to_string(ErrorCode code);

// Every recoverable failure in the core is reported through this type; the
// C API maps the code onto a status value.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Emits a single warning line on stderr.  Warnings never alter results.
void warn(std::string_view message);

// Suppresses warn() output (tests and batch runs that expect warnings).
void set_warnings_enabled(bool enabled);

}  // namespace maskforge
