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
// The D2P2-SGD training loop and its degenerations. One step:
//
//   1. sample a minibatch uniformly without replacement
//   2. clip each per-sample gradient, average in index order -> g_k
//   3. draw a fresh projection A_k (gaussian variants) and noise eps_k
//   4. update along A_k((1/sqrt(p)) A_k^T g_k + eps_k)
//   5. advance the privacy ledger
//
// The variant matrix:
//
//   variant   projection   noise schedule   clipping
//   d2p2      gaussian     dynamic          on
//   d2p       identity     dynamic          on
//   dp2       gaussian     static           on
//   dpsgd     identity     static           on
//   sgd       identity     none             off
//
// Overrides may degenerate d2p2/dp2 toward the simpler variants (that
// equivalence is tested bitwise); overriding a knob the variant definition
// forces is a configuration error.

#ifndef D2P2_OPTIMIZER_HPP
#define D2P2_OPTIMIZER_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "d2p2/accountant.hpp"
#include "d2p2/clip.hpp"
#include "d2p2/model.hpp"
#include "d2p2/noise.hpp"
#include "d2p2/project.hpp"

namespace d2p2 {

enum class optimizer_variant { d2p2, d2p, dp2, dpsgd, sgd };

const char* variant_name(optimizer_variant variant);
optimizer_variant parse_variant(const std::string& name);

struct OptimizerConfig {
  optimizer_variant variant = optimizer_variant::d2p2;
  double alpha = 0.01;  // step size; theory wants alpha <= 1/(2L), not enforced
  long epochs = 40;
  long batch = 256;
  double gamma = 0.01;  // clip stability constant
  double scale = 1.0;   // clip scale G
  clip_mode clip = clip_mode::automatic;
  double sigma_eps = 3.0;
  double reduction_rate = 0.7;  // p = max(1, round((1 - r) d))
  double sigma_a = 1.0;
  std::uint64_t seed = 0;
  double delta = 1e-5;
  // Draw one projection per parameter block instead of one for the full
  // flattened vector.
  bool layerwise_projection = false;
  // Fixed contiguous split into floor(n/B) batches, sample one per step,
  // instead of fresh sampling without replacement.
  bool split_batch_sampling = false;
  std::optional<projection_mode> projection_override;
  std::optional<schedule_mode> schedule_override;

  void validate() const;
};

struct ResolvedPipeline {
  projection_mode projection = projection_mode::identity;
  std::optional<schedule_mode> schedule;  // nullopt: no noise
  bool clip_enabled = false;
};

// Resolves (projection, schedule, clip) from the variant matrix and any
// overrides; rejects overrides that contradict the variant definition.
ResolvedPipeline variant_dispatch(const OptimizerConfig& cfg);

struct TrainState {
  Vector x;
  long k = 0;      // completed optimizer steps
  long epoch = 0;  // completed epochs
  std::optional<PrivacyLedger> ledger;
  double last_grad_norm = 0.0;  // ||g_k|| after clipping, before noise
};

// Initial state: seeded parameter init, fresh ledger for DP variants.
// A DP variant with sigma_eps == 0 adds no noise and is accounted as
// non-private (no ledger; epsilon reported as infinity).
TrainState init_state(const OptimizerConfig& cfg, const Objective& obj);

// Minibatch indices for step k, drawn from the step's sampling stream.
std::vector<Index> sample_minibatch(Index n, long batch, std::uint64_t seed,
                                    long k, bool split_mode);

// One optimizer step (step index state.k + 1).
TrainState step(TrainState state, const OptimizerConfig& cfg,
                const Objective& obj, const Dataset& data);

struct EpochMetrics {
  long epoch = 0;
  long step = 0;
  double train_loss = 0.0;
  double test_accuracy = 0.0;  // NaN for quadratic objectives
  double epsilon = 0.0;        // +inf when no privacy guarantee is tracked
  double sigma_eps_k = 0.0;    // noise stddev at the epoch's last step
};

using MetricsSeries = std::vector<EpochMetrics>;

// Runs epochs * floor(n/B) steps, evaluating once per epoch. Deterministic
// per seed. Train loss is the mean over a fixed held-in prefix of the
// training set (at most 1000 samples).
MetricsSeries train(const OptimizerConfig& cfg, const Objective& obj,
                    const Dataset& data_train, const Dataset& data_test);

}  // namespace d2p2

#endif  // D2P2_OPTIMIZER_HPP
