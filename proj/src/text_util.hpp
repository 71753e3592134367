// Copyright 2026 The d2p2 Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef D2P2_SRC_TEXT_UTIL_HPP
#define D2P2_SRC_TEXT_UTIL_HPP

#include <charconv>
#include <string>

#include "d2p2/errors.hpp"

namespace d2p2::detail {

// Shortest round-trip decimal form; "inf"/"nan" for non-finite values.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

inline double parse_double(std::string_view s, const std::string& context) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw config_error(context + ": non-numeric value '" + std::string(s) +
                       "'");
  }
  return v;
}

}  // namespace d2p2::detail

#endif  // D2P2_SRC_TEXT_UTIL_HPP
