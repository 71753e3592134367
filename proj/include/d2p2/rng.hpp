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

#ifndef D2P2_RNG_HPP
#define D2P2_RNG_HPP

#include <cmath>
#include <cstdint>

namespace d2p2 {

// Randomness consumers are keyed so that no two of them ever share a stream,
// regardless of evaluation order.
enum class stream_purpose : std::uint64_t {
  minibatch = 1,
  projection = 2,
  noise = 3,
  init = 4,
  data = 5,
};

namespace detail {

// SplitMix64 finalizer (Stafford mix13). Bijective with full avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace detail

// Counter-based random stream keyed by (seed, purpose, step). Two streams
// constructed with the same key produce identical output; streams with
// different keys are statistically independent. Draw order within a stream
// is the only state, so trajectories are reproducible independent of how
// callers interleave different streams.
class KeyedStream {
 public:
  KeyedStream(std::uint64_t seed, stream_purpose purpose, std::uint64_t step)
      : state_(derive_key(seed, static_cast<std::uint64_t>(purpose), step)) {}

  std::uint64_t next_u64() {
    state_ += detail::kGolden;
    return detail::mix64(state_);
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log() argument.
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller. The spare value is cached, so each pair
  // of draws consumes exactly two uniforms.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  // Uniform integer in [0, bound) via the multiply-shift reduction. The bias
  // of ~bound/2^64 is far below anything observable here.
  std::uint64_t uniform_below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

 private:
  static constexpr std::uint64_t derive_key(std::uint64_t seed,
                                            std::uint64_t purpose,
                                            std::uint64_t step) {
    std::uint64_t h = detail::mix64(seed + detail::kGolden);
    h = detail::mix64(h ^ (purpose + detail::kGolden));
    h = detail::mix64(h ^ (step + detail::kGolden));
    return h;
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace d2p2

#endif  // D2P2_RNG_HPP
