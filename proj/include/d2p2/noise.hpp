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
//
// Gaussian privacy noise with a static or decaying variance schedule. The
// dynamic schedule uses variance sigma_eps^2 / k at step k, i.e. the noise
// standard deviation decays like 1/sqrt(k).

#ifndef D2P2_NOISE_HPP
#define D2P2_NOISE_HPP

#include "d2p2/errors.hpp"
#include "d2p2/rng.hpp"
#include "d2p2/types.hpp"

namespace d2p2 {

enum class schedule_mode { static_noise, dynamic_noise };

struct NoiseSchedule {
  double sigma_eps = 3.0;  // base standard deviation
  schedule_mode mode = schedule_mode::static_noise;

  void validate() const {
    if (!(sigma_eps >= 0.0)) {
      throw config_error("noise: sigma_eps must be >= 0");
    }
  }
};

// Per-step variance: sigma_eps^2 for static, sigma_eps^2 / k for dynamic.
// Steps are 1-based.
double variance_at(const NoiseSchedule& schedule, long k);

// i.i.d. N(0, variance_at(schedule, k)) vector of length p, deterministic
// per stream key.
Vector sample_noise(const NoiseSchedule& schedule, long k, Index p,
                    KeyedStream& rng);

// Sum of per-step variances over steps 1..K. For the dynamic schedule this
// is sigma_eps^2 times the K-th harmonic number, bounded by
// (ln K + 1) sigma_eps^2.
double schedule_sum(const NoiseSchedule& schedule, long steps);

}  // namespace d2p2

#endif  // D2P2_NOISE_HPP
