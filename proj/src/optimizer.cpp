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

#include "d2p2/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

namespace d2p2 {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool adds_noise(const ResolvedPipeline& pipe, const OptimizerConfig& cfg) {
  return pipe.schedule.has_value() && cfg.sigma_eps > 0.0;
}

void reject_override(const OptimizerConfig& cfg, projection_mode forced) {
  if (cfg.projection_override.has_value() &&
      *cfg.projection_override != forced) {
    throw config_error("optimizer: projection override contradicts variant");
  }
}

void reject_override(const OptimizerConfig& cfg, schedule_mode forced) {
  if (cfg.schedule_override.has_value() && *cfg.schedule_override != forced) {
    throw config_error("optimizer: schedule override contradicts variant");
  }
}

}  // namespace

const char* variant_name(optimizer_variant variant) {
  switch (variant) {
    case optimizer_variant::d2p2: return "d2p2";
    case optimizer_variant::d2p: return "d2p";
    case optimizer_variant::dp2: return "dp2";
    case optimizer_variant::dpsgd: return "dpsgd";
    case optimizer_variant::sgd: return "sgd";
  }
  return "unknown";
}

optimizer_variant parse_variant(const std::string& name) {
  if (name == "d2p2") return optimizer_variant::d2p2;
  if (name == "d2p") return optimizer_variant::d2p;
  if (name == "dp2") return optimizer_variant::dp2;
  if (name == "dpsgd") return optimizer_variant::dpsgd;
  if (name == "sgd") return optimizer_variant::sgd;
  throw config_error("optimizer: unknown variant '" + name +
                     "' (expected d2p2|d2p|dp2|dpsgd|sgd)");
}

void OptimizerConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw config_error("optimizer: alpha must be finite and > 0");
  }
  if (epochs < 1) throw config_error("optimizer: epochs must be >= 1");
  if (batch < 1) throw config_error("optimizer: batch must be >= 1");
  if (!(gamma >= 0.0)) throw config_error("optimizer: gamma must be >= 0");
  if (!(scale > 0.0)) throw config_error("optimizer: scale must be > 0");
  if (!(sigma_eps >= 0.0)) {
    throw config_error("optimizer: sigma_eps must be >= 0");
  }
  if (!(reduction_rate >= 0.0) || !(reduction_rate < 1.0)) {
    throw config_error("optimizer: reduction rate must lie in [0, 1)");
  }
  if (!(sigma_a > 0.0)) throw config_error("optimizer: sigma_a must be > 0");
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw config_error("optimizer: delta must lie in (0, 1)");
  }
}

ResolvedPipeline variant_dispatch(const OptimizerConfig& cfg) {
  cfg.validate();
  ResolvedPipeline pipe;
  switch (cfg.variant) {
    case optimizer_variant::d2p2:
      pipe = {projection_mode::gaussian, schedule_mode::dynamic_noise, true};
      break;
    case optimizer_variant::d2p:
      pipe = {projection_mode::identity, schedule_mode::dynamic_noise, true};
      reject_override(cfg, projection_mode::identity);
      break;
    case optimizer_variant::dp2:
      pipe = {projection_mode::gaussian, schedule_mode::static_noise, true};
      reject_override(cfg, schedule_mode::static_noise);
      break;
    case optimizer_variant::dpsgd:
      pipe = {projection_mode::identity, schedule_mode::static_noise, true};
      reject_override(cfg, projection_mode::identity);
      reject_override(cfg, schedule_mode::static_noise);
      break;
    case optimizer_variant::sgd:
      if (cfg.projection_override.has_value() ||
          cfg.schedule_override.has_value()) {
        throw config_error("optimizer: sgd baseline takes no overrides");
      }
      return {projection_mode::identity, std::nullopt, false};
  }
  if (cfg.projection_override.has_value()) {
    pipe.projection = *cfg.projection_override;
  }
  if (cfg.schedule_override.has_value()) pipe.schedule = *cfg.schedule_override;
  return pipe;
}

TrainState init_state(const OptimizerConfig& cfg, const Objective& obj) {
  const ResolvedPipeline pipe = variant_dispatch(cfg);
  TrainState state;
  state.x = obj.initial_point(cfg.seed);
  if (adds_noise(pipe, cfg)) state.ledger.emplace();
  return state;
}

std::vector<Index> sample_minibatch(Index n, long batch, std::uint64_t seed,
                                    long k, bool split_mode) {
  if (batch < 1 || batch > n) {
    throw config_error("optimizer: batch size must lie in [1, n]");
  }
  KeyedStream rng(seed, stream_purpose::minibatch, static_cast<std::uint64_t>(k));
  if (split_mode) {
    const Index n_batches = n / batch;
    const Index pick = static_cast<Index>(
        rng.uniform_below(static_cast<std::uint64_t>(n_batches)));
    std::vector<Index> indices(batch);
    std::iota(indices.begin(), indices.end(), pick * batch);
    return indices;
  }
  std::vector<Index> pool(n);
  std::iota(pool.begin(), pool.end(), Index{0});
  for (long i = 0; i < batch; ++i) {
    const auto j = i + static_cast<Index>(rng.uniform_below(
                           static_cast<std::uint64_t>(n - i)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(batch);
  return pool;
}

TrainState step(TrainState state, const OptimizerConfig& cfg,
                const Objective& obj, const Dataset& data) {
  const ResolvedPipeline pipe = variant_dispatch(cfg);
  const long k = state.k + 1;

  const std::vector<Index> batch = sample_minibatch(
      data.n(), cfg.batch, cfg.seed, k, cfg.split_batch_sampling);

  Matrix grads(obj.dim, static_cast<Index>(batch.size()));
  for (Index s = 0; s < static_cast<Index>(batch.size()); ++s) {
    grads.col(s) = per_sample_gradient(obj, state.x, data, batch[s]);
  }
  Vector g;
  if (pipe.clip_enabled) {
    g = clip_batch(grads, ClipConfig{cfg.gamma, cfg.scale, cfg.clip});
  } else {
    g = Vector::Zero(obj.dim);
    for (Index s = 0; s < grads.cols(); ++s) g += grads.col(s);
    g /= static_cast<double>(grads.cols());
  }
  state.last_grad_norm = g.norm();

  const bool noisy = adds_noise(pipe, cfg);
  NoiseSchedule schedule;
  if (pipe.schedule.has_value()) {
    schedule = NoiseSchedule{cfg.sigma_eps, *pipe.schedule};
  }

  Vector update;
  if (pipe.projection == projection_mode::identity) {
    update = g;
    if (noisy) {
      KeyedStream noise_rng(cfg.seed, stream_purpose::noise,
                            static_cast<std::uint64_t>(k));
      update += sample_noise(schedule, k, obj.dim, noise_rng);
    }
  } else {
    KeyedStream proj_rng(cfg.seed, stream_purpose::projection,
                         static_cast<std::uint64_t>(k));
    KeyedStream noise_rng(cfg.seed, stream_purpose::noise,
                          static_cast<std::uint64_t>(k));
    const auto blocks = cfg.layerwise_projection
                            ? obj.param_blocks()
                            : std::vector<std::pair<Index, Index>>{{0, obj.dim}};
    update.resize(obj.dim);
    for (const auto& [offset, length] : blocks) {
      const Index p = reduced_dim(length, cfg.reduction_rate);
      const ProjectionOperator op =
          sample_operator(length, p, cfg.sigma_a, proj_rng);
      Vector r = project_down(op, g.segment(offset, length));
      if (noisy) r += sample_noise(schedule, k, p, noise_rng);
      update.segment(offset, length) = project_up(op, r);
    }
  }

  if (!update.allFinite()) {
    throw numeric_error("optimizer: non-finite update at step " +
                        std::to_string(k));
  }
  state.x -= cfg.alpha * update;
  if (!state.x.allFinite()) {
    throw numeric_error("optimizer: non-finite iterate at step " +
                        std::to_string(k));
  }

  if (noisy) {
    if (!state.ledger.has_value()) state.ledger.emplace();
    const MechanismParams params{data.n(), cfg.batch, cfg.sigma_eps,
                                 *pipe.schedule, cfg.delta};
    state.ledger->accumulate_step(params, k);
  }
  state.k = k;
  return state;
}

MetricsSeries train(const OptimizerConfig& cfg, const Objective& obj,
                    const Dataset& data_train, const Dataset& data_test) {
  cfg.validate();
  data_train.validate();
  data_test.validate();
  const ResolvedPipeline pipe = variant_dispatch(cfg);
  const long steps_per_epoch = data_train.n() / cfg.batch;
  if (steps_per_epoch < 1) {
    throw config_error("optimizer: batch size exceeds training set size");
  }
  const Index eval_count = std::min<Index>(data_train.n(), 1000);

  TrainState state = init_state(cfg, obj);
  MetricsSeries series;
  series.reserve(cfg.epochs);
  for (long epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (long t = 0; t < steps_per_epoch; ++t) {
      state = step(std::move(state), cfg, obj, data_train);
    }
    state.epoch = epoch;

    EpochMetrics row;
    row.epoch = epoch;
    row.step = state.k;
    row.train_loss = mean_loss(obj, state.x, data_train, eval_count);
    row.test_accuracy = obj.kind == objective_kind::quadratic
                            ? std::numeric_limits<double>::quiet_NaN()
                            : accuracy(obj, state.x, data_test);
    if (state.ledger.has_value()) {
      try {
        row.epsilon = state.ledger->epsilon_at_delta(cfg.delta);
      } catch (const no_valid_order_error&) {
        row.epsilon = kInf;
      }
    } else {
      row.epsilon = kInf;
    }
    row.sigma_eps_k =
        pipe.schedule.has_value()
            ? std::sqrt(variance_at(NoiseSchedule{cfg.sigma_eps, *pipe.schedule},
                                    state.k))
            : 0.0;
    series.push_back(row);
  }
  return series;
}

}  // namespace d2p2
