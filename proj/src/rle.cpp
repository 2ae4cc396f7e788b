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

#include "rle.hpp"

#include <algorithm>
#include <string>

#include "error.hpp"

namespace maskforge {

std::vector<std::uint32_t> encode_rle(const BitMask& mask) {
  std::vector<std::uint32_t> runs;
  bool current = false;
  std::uint32_t length = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] != current) {
      runs.push_back(length);
      current = !current;
      length = 0;
    }
    ++length;
  }
  runs.push_back(length);
  return runs;
}

BitMask decode_rle(std::span<const std::uint32_t> runs, int width, int height) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kMalformedFile, "RLE dimensions must be positive");
  }
  const std::uint64_t total = static_cast<std::uint64_t>(width) * height;
  std::uint64_t sum = 0;
  for (auto r : runs) sum += r;
  if (sum != total) {
    throw Error(ErrorCode::kMalformedFile, "RLE runs sum to " + std::to_string(sum) +
                                               ", expected " + std::to_string(total));
  }
  BitMask mask(width, height);
  auto bits = mask.mutable_bits();
  std::size_t pos = 0;
  bool fg = false;
  for (auto r : runs) {
    if (fg) std::fill(bits.begin() + pos, bits.begin() + pos + r, 1);
    pos += r;
    fg = !fg;
  }
  return mask;
}

}  // namespace maskforge
