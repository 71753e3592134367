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

#include "d2p2/noise.hpp"

#include <cmath>
#include <string>

namespace d2p2 {

double variance_at(const NoiseSchedule& schedule, long k) {
  schedule.validate();
  if (k < 1) {
    throw config_error("noise: step index must be >= 1, got " +
                       std::to_string(k));
  }
  const double base = schedule.sigma_eps * schedule.sigma_eps;
  return schedule.mode == schedule_mode::static_noise
             ? base
             : base / static_cast<double>(k);
}

Vector sample_noise(const NoiseSchedule& schedule, long k, Index p,
                    KeyedStream& rng) {
  if (p < 1) throw config_error("noise: dimension must be >= 1");
  const double stddev = std::sqrt(variance_at(schedule, k));
  Vector eps(p);
  for (Index i = 0; i < p; ++i) eps(i) = stddev * rng.gaussian();
  return eps;
}

double schedule_sum(const NoiseSchedule& schedule, long steps) {
  if (steps < 1) throw config_error("noise: step count must be >= 1");
  double sum = 0.0;
  for (long k = 1; k <= steps; ++k) sum += variance_at(schedule, k);
  return sum;
}

}  // namespace d2p2
