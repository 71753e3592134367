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
// Trainable objectives with per-sample loss and exact per-sample gradients,
// plus a central-difference gradient oracle for testing.
//
// Three objective kinds are supported:
//   quadratic  f(x, s) = curvature/2 * ||x - center - s||^2
//   logistic   binary cross-entropy of a linear score, labels in {0, 1}
//   mlp        one tanh hidden layer + softmax cross-entropy, integer labels
//
// MLP parameters are stored flattened, layer-major, weights before biases:
// [W1 | b1 | W2 | b2], each W in Eigen's column-major order. All gradient
// computation is per-example backprop; minibatch means are reduced in index
// order so results are deterministic.

#ifndef D2P2_MODEL_HPP
#define D2P2_MODEL_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "d2p2/errors.hpp"
#include "d2p2/rng.hpp"
#include "d2p2/types.hpp"

namespace d2p2 {

struct Dataset {
  Matrix features;  // n x m, one row per sample
  Vector labels;    // n; class index or regression target

  Index n() const { return features.rows(); }
  Index width() const { return features.cols(); }

  void validate() const;
};

enum class objective_kind { quadratic, logistic, mlp };

struct Objective {
  objective_kind kind = objective_kind::quadratic;
  Index dim = 0;  // flattened parameter count d

  // quadratic
  Vector center;
  double curvature = 1.0;

  // mlp shape
  Index n_features = 0;
  Index hidden = 0;
  Index n_classes = 0;

  static Objective quadratic(Vector center, double curvature = 1.0);
  static Objective logistic(Index n_features);
  static Objective mlp(Index n_features, Index hidden, Index n_classes);

  // Flattened parameter layout as (offset, length) blocks, one per layer
  // matrix or bias. Single-block for quadratic and logistic.
  std::vector<std::pair<Index, Index>> param_blocks() const;

  // Seeded initial iterate: zeros for quadratic/logistic, symmetric uniform
  // fan-in scaling for mlp weights (biases zero).
  Vector initial_point(std::uint64_t seed) const;
};

double loss(const Objective& obj, const Vector& x, const Dataset& data,
            Index idx);

Vector per_sample_gradient(const Objective& obj, const Vector& x,
                           const Dataset& data, Index idx);

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
Vector finite_diff_gradient(const Objective& obj, const Vector& x,
                            const Dataset& data, Index idx, double h);

// Arithmetic mean of per-sample gradients over the whole dataset.
Vector full_gradient(const Objective& obj, const Vector& x,
                     const Dataset& data);

// Mean loss over samples [0, count) of the dataset.
double mean_loss(const Objective& obj, const Vector& x, const Dataset& data,
                 Index count);

// Fraction of samples whose predicted class matches the label. Logistic
// predicts by the sign of the score, mlp by argmax over class logits.
// Not defined for quadratic objectives.
double accuracy(const Objective& obj, const Vector& x, const Dataset& data);

}  // namespace d2p2

#endif  // D2P2_MODEL_HPP
