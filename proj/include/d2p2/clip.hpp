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
// Per-sample gradient clipping. The automatic form rescales a vector v to
// scale/(||v|| + gamma) * v, so the output norm approaches (but never
// reaches) `scale` and no nonzero gradient is ever zeroed out. The
// threshold form min{1, scale/||v||} * v is kept for A/B comparison.

#ifndef D2P2_CLIP_HPP
#define D2P2_CLIP_HPP

#include <algorithm>
#include <cmath>

#include "d2p2/errors.hpp"
#include "d2p2/types.hpp"

namespace d2p2 {

enum class clip_mode { automatic, threshold };

struct ClipConfig {
  double gamma = 0.01;  // stability constant; gamma = 0 is plain normalization
  double scale = 1.0;   // target scale G
  clip_mode mode = clip_mode::automatic;

  void validate() const {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
      throw config_error("clip: gamma must be finite and >= 0");
    }
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      throw config_error("clip: scale must be finite and > 0");
    }
  }
};

// scale/(||v|| + gamma) * v. Preserves direction; output norm is
// scale * ||v||/(||v|| + gamma), strictly below scale for gamma > 0.
template <typename Derived>
Vector auto_clip(const Eigen::MatrixBase<Derived>& v, const ClipConfig& cfg) {
  cfg.validate();
  if (!v.allFinite()) throw numeric_error("auto_clip: non-finite input");
  const double denom = v.norm() + cfg.gamma;
  if (denom == 0.0) return Vector::Zero(v.size());
  return (cfg.scale / denom) * v;
}

// min{1, scale/||v||} * v. Has the lazy region: vectors with ||v|| > scale
// are shrunk onto the scale sphere and tiny ones pass through unchanged.
template <typename Derived>
Vector threshold_clip(const Eigen::MatrixBase<Derived>& v,
                      const ClipConfig& cfg) {
  cfg.validate();
  if (!v.allFinite()) throw numeric_error("threshold_clip: non-finite input");
  const double norm = v.norm();
  if (norm <= cfg.scale) return v;
  return (cfg.scale / norm) * v;
}

template <typename Derived>
Vector clip_one(const Eigen::MatrixBase<Derived>& v, const ClipConfig& cfg) {
  return cfg.mode == clip_mode::automatic ? auto_clip(v, cfg)
                                          : threshold_clip(v, cfg);
}

// Mean of the per-sample clipped gradients; columns of `grads` are samples.
// Summation runs in column order so results are deterministic.
inline Vector clip_batch(const Matrix& grads, const ClipConfig& cfg) {
  cfg.validate();
  if (grads.cols() == 0) throw config_error("clip_batch: empty batch");
  Vector sum = Vector::Zero(grads.rows());
  for (Index s = 0; s < grads.cols(); ++s) {
    sum += clip_one(grads.col(s), cfg);
  }
  return sum / static_cast<double>(grads.cols());
}

}  // namespace d2p2

#endif  // D2P2_CLIP_HPP
