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
#include <limits>

#include "d2p2/harness.hpp"
#include "d2p2/optimizer.hpp"

using d2p2::Dataset;
using d2p2::Objective;
using d2p2::OptimizerConfig;
using d2p2::optimizer_variant;
using d2p2::projection_mode;
using d2p2::schedule_mode;
using d2p2::TrainState;
using d2p2::Vector;

namespace {

OptimizerConfig base_config(optimizer_variant variant) {
  OptimizerConfig cfg;
  cfg.variant = variant;
  cfg.alpha = 0.05;
  cfg.epochs = 2;
  cfg.batch = 100;
  cfg.sigma_eps = 3.0;
  cfg.reduction_rate = 0.5;
  cfg.seed = 0;
  return cfg;
}

Dataset logistic_data() {
  return d2p2::generate_synthetic(2000, 10, 3.0, 7);
}

Vector run_steps(const OptimizerConfig& cfg, const Objective& obj,
                 const Dataset& data, long steps) {
  TrainState state = d2p2::init_state(cfg, obj);
  for (long t = 0; t < steps; ++t) {
    state = d2p2::step(std::move(state), cfg, obj, data);
    if (state.ledger.has_value()) {
      REQUIRE(state.ledger->steps_done() == state.k);
    }
  }
  return state.x;
}

}  // namespace

TEST_SUITE_BEGIN("optimizer");

TEST_CASE("variant matrix resolution") {
  using d2p2::variant_dispatch;
  const auto d2p = variant_dispatch(base_config(optimizer_variant::d2p));
  CHECK(d2p.projection == projection_mode::identity);
  CHECK(*d2p.schedule == schedule_mode::dynamic_noise);
  CHECK(d2p.clip_enabled);

  const auto dp2 = variant_dispatch(base_config(optimizer_variant::dp2));
  CHECK(dp2.projection == projection_mode::gaussian);
  CHECK(*dp2.schedule == schedule_mode::static_noise);
  CHECK(dp2.clip_enabled);

  const auto sgd = variant_dispatch(base_config(optimizer_variant::sgd));
  CHECK(sgd.projection == projection_mode::identity);
  CHECK_FALSE(sgd.schedule.has_value());
  CHECK_FALSE(sgd.clip_enabled);
}

TEST_CASE("contradictory overrides are rejected") {
  OptimizerConfig cfg = base_config(optimizer_variant::d2p);
  cfg.projection_override = projection_mode::gaussian;
  CHECK_THROWS_AS(d2p2::variant_dispatch(cfg), d2p2::config_error);

  cfg = base_config(optimizer_variant::dpsgd);
  cfg.schedule_override = schedule_mode::dynamic_noise;
  CHECK_THROWS_AS(d2p2::variant_dispatch(cfg), d2p2::config_error);

  cfg = base_config(optimizer_variant::sgd);
  cfg.projection_override = projection_mode::identity;
  CHECK_THROWS_AS(d2p2::variant_dispatch(cfg), d2p2::config_error);

  // degenerations stay legal
  cfg = base_config(optimizer_variant::d2p2);
  cfg.projection_override = projection_mode::identity;
  cfg.schedule_override = schedule_mode::static_noise;
  CHECK(d2p2::variant_dispatch(cfg).projection == projection_mode::identity);
}

TEST_CASE("hand-traced single step on the 1-d quadratic") {
  // f = x^2/2, x = 1, alpha = 0.1, gamma = 0, no noise: clipped gradient is
  // 1/(|1| + 0) = 1, so the iterate moves to 0.9.
  const Objective obj = Objective::quadratic(Vector::Zero(1));
  Dataset data;
  data.features = d2p2::Matrix::Zero(1, 1);
  data.labels = Vector::Zero(1);

  OptimizerConfig cfg = base_config(optimizer_variant::dpsgd);
  cfg.alpha = 0.1;
  cfg.batch = 1;
  cfg.gamma = 0.0;
  cfg.sigma_eps = 0.0;

  TrainState state = d2p2::init_state(cfg, obj);
  CHECK_FALSE(state.ledger.has_value());  // zero noise: nothing to account
  state.x = Vector::Constant(1, 1.0);
  state = d2p2::step(std::move(state), cfg, obj, data);
  CHECK(state.x(0) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(state.last_grad_norm == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("zero gradients and zero noise leave the iterate unchanged") {
  const Objective obj = Objective::quadratic(Vector::Zero(3));
  Dataset data;
  data.features = d2p2::Matrix::Zero(5, 3);
  data.labels = Vector::Zero(5);
  OptimizerConfig cfg = base_config(optimizer_variant::dpsgd);
  cfg.batch = 2;
  cfg.sigma_eps = 0.0;
  TrainState state = d2p2::init_state(cfg, obj);
  state = d2p2::step(std::move(state), cfg, obj, data);
  CHECK(state.x.isZero(0.0));
}

TEST_CASE("noise is applied whenever sigma_eps is positive") {
  // All-zero gradients isolate the injected noise in the update.
  const Objective obj = Objective::quadratic(Vector::Zero(3));
  Dataset data;
  data.features = d2p2::Matrix::Zero(100, 3);
  data.labels = Vector::Zero(100);
  OptimizerConfig cfg = base_config(optimizer_variant::dpsgd);
  cfg.batch = 5;
  cfg.sigma_eps = 3.0;
  TrainState state = d2p2::init_state(cfg, obj);
  REQUIRE(state.ledger.has_value());
  state = d2p2::step(std::move(state), cfg, obj, data);
  CHECK(state.x.norm() > 0.0);
  // exactly the sampled noise scaled by -alpha
  d2p2::KeyedStream noise_rng(cfg.seed, d2p2::stream_purpose::noise, 1);
  const Vector eps = d2p2::sample_noise(
      d2p2::NoiseSchedule{3.0, schedule_mode::static_noise}, 1, 3, noise_rng);
  CHECK(state.x == (-cfg.alpha * eps).eval());
}

TEST_CASE("minibatch sampling") {
  SUBCASE("without replacement, deterministic per (seed, step)") {
    const auto batch = d2p2::sample_minibatch(50, 20, 3, 7, false);
    const auto again = d2p2::sample_minibatch(50, 20, 3, 7, false);
    CHECK(batch == again);
    std::vector<bool> seen(50, false);
    for (const auto idx : batch) {
      CHECK(idx >= 0);
      CHECK(idx < 50);
      CHECK_FALSE(seen[idx]);
      seen[idx] = true;
    }
    CHECK(batch != d2p2::sample_minibatch(50, 20, 3, 8, false));
  }
  SUBCASE("split mode picks one contiguous block") {
    const auto batch = d2p2::sample_minibatch(50, 10, 3, 7, true);
    REQUIRE(batch.size() == 10);
    CHECK(batch.front() % 10 == 0);
    for (std::size_t i = 1; i < batch.size(); ++i) {
      CHECK(batch[i] == batch[i - 1] + 1);
    }
  }
  SUBCASE("batch larger than the dataset is rejected") {
    CHECK_THROWS_AS(d2p2::sample_minibatch(5, 6, 3, 1, false),
                    d2p2::config_error);
  }
}

TEST_CASE("degeneration lattice is bitwise") {
  const Dataset data = logistic_data();
  const Objective obj = Objective::logistic(10);
  const long steps = 20;

  SUBCASE("d2p2 with identity projection equals d2p") {
    OptimizerConfig forced = base_config(optimizer_variant::d2p2);
    forced.projection_override = projection_mode::identity;
    const Vector a = run_steps(forced, obj, data, steps);
    const Vector b = run_steps(base_config(optimizer_variant::d2p), obj, data,
                               steps);
    CHECK(a == b);
  }
  SUBCASE("d2p2 with static schedule equals dp2") {
    OptimizerConfig forced = base_config(optimizer_variant::d2p2);
    forced.schedule_override = schedule_mode::static_noise;
    const Vector a = run_steps(forced, obj, data, steps);
    const Vector b = run_steps(base_config(optimizer_variant::dp2), obj, data,
                               steps);
    CHECK(a == b);
  }
  SUBCASE("dp2 with identity projection equals dpsgd") {
    OptimizerConfig forced = base_config(optimizer_variant::dp2);
    forced.projection_override = projection_mode::identity;
    const Vector a = run_steps(forced, obj, data, steps);
    const Vector b = run_steps(base_config(optimizer_variant::dpsgd), obj,
                               data, steps);
    CHECK(a == b);
  }
  SUBCASE("gaussian projection at full dimension still differs from d2p") {
    OptimizerConfig full = base_config(optimizer_variant::d2p2);
    full.reduction_rate = 0.0;  // p == d but A is a random matrix
    const Vector a = run_steps(full, obj, data, steps);
    const Vector b = run_steps(base_config(optimizer_variant::d2p), obj, data,
                               steps);
    CHECK(a != b);
  }
}

TEST_CASE("clipped minibatch gradient stays below the clip scale") {
  const Dataset data = logistic_data();
  const Objective obj = Objective::logistic(10);
  OptimizerConfig cfg = base_config(optimizer_variant::d2p2);
  TrainState state = d2p2::init_state(cfg, obj);
  for (long t = 0; t < 30; ++t) {
    state = d2p2::step(std::move(state), cfg, obj, data);
    CHECK(state.last_grad_norm < cfg.scale);
  }
}

TEST_CASE("train is deterministic and tracks the accountant") {
  const Dataset data = logistic_data();
  const Dataset test = d2p2::generate_synthetic(400, 10, 3.0, 8);
  const Objective obj = Objective::logistic(10);
  OptimizerConfig cfg = base_config(optimizer_variant::dpsgd);
  cfg.epochs = 3;

  const auto series = d2p2::train(cfg, obj, data, test);
  const auto again = d2p2::train(cfg, obj, data, test);
  REQUIRE(series.size() == 3);
  for (std::size_t e = 0; e < series.size(); ++e) {
    CHECK(series[e].train_loss == again[e].train_loss);
    CHECK(series[e].test_accuracy == again[e].test_accuracy);
    CHECK(series[e].epsilon == again[e].epsilon);
    CHECK(series[e].sigma_eps_k == again[e].sigma_eps_k);
  }

  // dpsgd epsilon equals the closed-form K-step conversion
  const long steps_per_epoch = data.n() / cfg.batch;
  const d2p2::MechanismParams params{data.n(), cfg.batch, cfg.sigma_eps,
                                     schedule_mode::static_noise, cfg.delta};
  for (std::size_t e = 0; e < series.size(); ++e) {
    d2p2::PrivacyLedger ledger;
    for (long k = 1; k <= static_cast<long>(e + 1) * steps_per_epoch; ++k) {
      ledger.accumulate_step(params, k);
    }
    CHECK(series[e].epsilon == ledger.epsilon_at_delta(cfg.delta));
    CHECK(series[e].sigma_eps_k == cfg.sigma_eps);
  }

  // epsilon never decreases over epochs
  for (std::size_t e = 1; e < series.size(); ++e) {
    CHECK(series[e].epsilon >= series[e - 1].epsilon);
  }
}

TEST_CASE("DP variants reject sampling ratios at or above 1/10") {
  const Dataset data = d2p2::generate_synthetic(600, 10, 3.0, 7);
  OptimizerConfig cfg = base_config(optimizer_variant::dpsgd);
  cfg.batch = 100;  // q = 1/6
  TrainState state = d2p2::init_state(cfg, Objective::logistic(10));
  CHECK_THROWS_AS(
      d2p2::step(std::move(state), cfg, Objective::logistic(10), data),
      d2p2::config_error);
}

TEST_CASE("sgd reports no privacy guarantee") {
  const Dataset data = logistic_data();
  const Dataset test = d2p2::generate_synthetic(400, 10, 3.0, 8);
  OptimizerConfig cfg = base_config(optimizer_variant::sgd);
  cfg.epochs = 1;
  const auto series = d2p2::train(cfg, Objective::logistic(10), data, test);
  CHECK(std::isinf(series[0].epsilon));
  CHECK(series[0].sigma_eps_k == 0.0);
}

TEST_CASE("mlp training improves over chance on separable data") {
  const auto [train, test] =
      d2p2::split_dataset(d2p2::generate_synthetic(2400, 10, 5.0, 13), 2000);
  const Objective obj = Objective::mlp(10, 8, 2);
  OptimizerConfig cfg = base_config(optimizer_variant::sgd);
  cfg.alpha = 0.1;
  cfg.epochs = 5;
  const auto series = d2p2::train(cfg, obj, train, test);
  CHECK(series.back().test_accuracy >= 0.9);
  CHECK(series.back().train_loss < series.front().train_loss);
}

TEST_CASE("layerwise projection runs and changes the trajectory") {
  const Dataset data = logistic_data();
  const Objective obj = Objective::mlp(10, 6, 2);
  OptimizerConfig cfg = base_config(optimizer_variant::d2p2);
  cfg.batch = 50;
  const Vector whole = run_steps(cfg, obj, data, 5);
  cfg.layerwise_projection = true;
  const Vector layered = run_steps(cfg, obj, data, 5);
  CHECK(whole != layered);
  CHECK(whole.allFinite());
  CHECK(layered.allFinite());
}

TEST_SUITE_END();
