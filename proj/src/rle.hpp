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

#include <cstdint>
#include <span>
#include <vector>

#include "imaging.hpp"

namespace maskforge {

// Row-major runs alternating background/foreground, starting with a
// (possibly zero-length) background run.
std::vector<std::uint32_t> encode_rle(const BitMask& mask);

// Throws MalformedFile when the runs do not sum to width*height.
BitMask decode_rle(std::span<const std::uint32_t> runs, int width, int height);

}  // namespace maskforge
