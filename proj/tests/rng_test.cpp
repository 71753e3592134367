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

#include <cmath>
#include <doctest.h>

#include "d2p2/rng.hpp"

using d2p2::KeyedStream;
using d2p2::stream_purpose;

TEST_SUITE_BEGIN("rng");

TEST_CASE("same key reproduces the stream exactly") {
  KeyedStream a(7, stream_purpose::noise, 3);
  KeyedStream b(7, stream_purpose::noise, 3);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  KeyedStream c(7, stream_purpose::noise, 3);
  KeyedStream d(7, stream_purpose::noise, 3);
  for (int i = 0; i < 100; ++i) {
    CHECK(c.gaussian() == d.gaussian());
  }
}

TEST_CASE("different purposes and steps give different streams") {
  KeyedStream noise(7, stream_purpose::noise, 3);
  KeyedStream proj(7, stream_purpose::projection, 3);
  KeyedStream later(7, stream_purpose::noise, 4);
  KeyedStream other_seed(8, stream_purpose::noise, 3);
  const std::uint64_t base = noise.next_u64();
  CHECK(base != proj.next_u64());
  CHECK(base != later.next_u64());
  CHECK(base != other_seed.next_u64());
}

TEST_CASE("uniform lies in [0,1) and uniform_pos in (0,1]") {
  KeyedStream rng(1, stream_purpose::data, 0);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = rng.uniform_pos();
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("gaussian moments") {
  KeyedStream rng(2, stream_purpose::data, 0);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    sum += g;
    sumsq += g * g;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("uniform_below stays in range and covers it") {
  KeyedStream rng(3, stream_purpose::minibatch, 1);
  bool seen[10] = {};
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t v = rng.uniform_below(10);
    CHECK(v < 10);
    seen[v] = true;
  }
  for (bool s : seen) CHECK(s);
}

TEST_SUITE_END();
