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

#include "d2p2/model.hpp"

#include <cmath>
#include <string>

namespace d2p2 {

namespace {

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                  : std::exp(z) / (1.0 + std::exp(z));
}

void check_sample(const Objective& obj, const Vector& x, const Dataset& data,
                  Index idx) {
  if (idx < 0 || idx >= data.n()) {
    throw config_error("model: sample index " + std::to_string(idx) +
                       " out of range [0, " + std::to_string(data.n()) + ")");
  }
  if (x.size() != obj.dim) {
    throw config_error("model: parameter dimension " +
                       std::to_string(x.size()) + " != objective dim " +
                       std::to_string(obj.dim));
  }
  const Index want =
      obj.kind == objective_kind::quadratic ? obj.dim : obj.n_features;
  if (data.width() != want) {
    throw config_error("model: feature width " + std::to_string(data.width()) +
                       " != expected " + std::to_string(want));
  }
}

Index class_label(const Objective& obj, double raw, Index idx) {
  const auto label = static_cast<Index>(std::llround(raw));
  const Index n_classes =
      obj.kind == objective_kind::logistic ? 2 : obj.n_classes;
  if (label < 0 || label >= n_classes ||
      std::abs(raw - static_cast<double>(label)) > 1e-9) {
    throw config_error("model: label " + std::to_string(raw) + " at sample " +
                       std::to_string(idx) + " not a class index in [0, " +
                       std::to_string(n_classes) + ")");
  }
  return label;
}

// Views into the flat mlp parameter vector. Blocks follow param_blocks().
struct MlpViews {
  Eigen::Map<const Matrix> w1;
  Eigen::Map<const Vector> b1;
  Eigen::Map<const Matrix> w2;
  Eigen::Map<const Vector> b2;
};

MlpViews mlp_views(const Objective& obj, const Vector& x) {
  const Index m = obj.n_features, h = obj.hidden, c = obj.n_classes;
  const double* p = x.data();
  return MlpViews{Eigen::Map<const Matrix>(p, h, m),
                  Eigen::Map<const Vector>(p + h * m, h),
                  Eigen::Map<const Matrix>(p + h * m + h, c, h),
                  Eigen::Map<const Vector>(p + h * m + h + c * h, c)};
}

struct MlpForward {
  Vector hidden_act;  // tanh(z1)
  Vector logits;      // z2
  double loss;        // logsumexp(z2) - z2[label]
};

MlpForward mlp_forward(const Objective& obj, const Vector& x,
                       const Vector& input, Index label) {
  const MlpViews v = mlp_views(obj, x);
  MlpForward fwd;
  fwd.hidden_act = (v.w1 * input + v.b1).array().tanh();
  fwd.logits = v.w2 * fwd.hidden_act + v.b2;
  const double zmax = fwd.logits.maxCoeff();
  const double lse =
      zmax + std::log((fwd.logits.array() - zmax).exp().sum());
  fwd.loss = lse - fwd.logits(label);
  return fwd;
}

}  // namespace

void Dataset::validate() const {
  if (n() < 1) throw config_error("dataset: needs at least one sample");
  if (labels.size() != n()) {
    throw config_error("dataset: label count " + std::to_string(labels.size()) +
                       " != sample count " + std::to_string(n()));
  }
  if (!features.allFinite() || !labels.allFinite()) {
    throw numeric_error("dataset: non-finite entries");
  }
}

Objective Objective::quadratic(Vector center, double curvature) {
  if (!(curvature > 0.0)) {
    throw config_error("objective: quadratic curvature must be > 0");
  }
  Objective obj;
  obj.kind = objective_kind::quadratic;
  obj.dim = center.size();
  obj.center = std::move(center);
  obj.curvature = curvature;
  return obj;
}

Objective Objective::logistic(Index n_features) {
  if (n_features < 1) throw config_error("objective: need >= 1 feature");
  Objective obj;
  obj.kind = objective_kind::logistic;
  obj.dim = n_features;
  obj.n_features = n_features;
  return obj;
}

Objective Objective::mlp(Index n_features, Index hidden, Index n_classes) {
  if (n_features < 1 || hidden < 1 || n_classes < 2) {
    throw config_error("objective: mlp needs features >= 1, hidden >= 1, "
                       "classes >= 2");
  }
  Objective obj;
  obj.kind = objective_kind::mlp;
  obj.n_features = n_features;
  obj.hidden = hidden;
  obj.n_classes = n_classes;
  obj.dim = hidden * (n_features + 1) + n_classes * (hidden + 1);
  return obj;
}

std::vector<std::pair<Index, Index>> Objective::param_blocks() const {
  if (kind != objective_kind::mlp) return {{0, dim}};
  const Index m = n_features, h = hidden, c = n_classes;
  return {{0, h * m}, {h * m, h}, {h * m + h, c * h}, {h * m + h + c * h, c}};
}

Vector Objective::initial_point(std::uint64_t seed) const {
  if (kind != objective_kind::mlp) return Vector::Zero(dim);
  Vector x = Vector::Zero(dim);
  KeyedStream rng(seed, stream_purpose::init, 0);
  const auto blocks = param_blocks();
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(n_features));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (Index i = blocks[0].first; i < blocks[0].first + blocks[0].second; ++i) {
    x(i) = bound1 * (2.0 * rng.uniform() - 1.0);
  }
  for (Index i = blocks[2].first; i < blocks[2].first + blocks[2].second; ++i) {
    x(i) = bound2 * (2.0 * rng.uniform() - 1.0);
  }
  return x;
}

double loss(const Objective& obj, const Vector& x, const Dataset& data,
            Index idx) {
  check_sample(obj, x, data, idx);
  double value = 0.0;
  switch (obj.kind) {
    case objective_kind::quadratic: {
      const Vector r = x - obj.center - data.features.row(idx).transpose();
      value = 0.5 * obj.curvature * r.squaredNorm();
      break;
    }
    case objective_kind::logistic: {
      const Index label = class_label(obj, data.labels(idx), idx);
      const double z = x.dot(data.features.row(idx));
      value = softplus(z) - static_cast<double>(label) * z;
      break;
    }
    case objective_kind::mlp: {
      const Index label = class_label(obj, data.labels(idx), idx);
      value = mlp_forward(obj, x, data.features.row(idx), label).loss;
      break;
    }
  }
  if (!std::isfinite(value)) {
    throw numeric_error("loss: non-finite value at sample " +
                        std::to_string(idx));
  }
  return value;
}

Vector per_sample_gradient(const Objective& obj, const Vector& x,
                           const Dataset& data, Index idx) {
  check_sample(obj, x, data, idx);
  switch (obj.kind) {
    case objective_kind::quadratic:
      return obj.curvature *
             (x - obj.center - data.features.row(idx).transpose());
    case objective_kind::logistic: {
      const Index label = class_label(obj, data.labels(idx), idx);
      const double z = x.dot(data.features.row(idx));
      return (sigmoid(z) - static_cast<double>(label)) *
             data.features.row(idx).transpose();
    }
    case objective_kind::mlp:
      break;
  }
  const Index label = class_label(obj, data.labels(idx), idx);
  const Vector input = data.features.row(idx);
  const MlpViews v = mlp_views(obj, x);
  const MlpForward fwd = mlp_forward(obj, x, input, label);

  Vector delta2 = (fwd.logits.array() - fwd.logits.maxCoeff()).exp();
  delta2 /= delta2.sum();  // softmax probabilities
  delta2(label) -= 1.0;

  const Vector delta1 =
      (v.w2.transpose() * delta2).array() *
      (1.0 - fwd.hidden_act.array().square());

  Vector grad(obj.dim);
  const Index m = obj.n_features, h = obj.hidden, c = obj.n_classes;
  Eigen::Map<Matrix>(grad.data(), h, m) = delta1 * input.transpose();
  Eigen::Map<Vector>(grad.data() + h * m, h) = delta1;
  Eigen::Map<Matrix>(grad.data() + h * m + h, c, h) =
      delta2 * fwd.hidden_act.transpose();
  Eigen::Map<Vector>(grad.data() + h * m + h + c * h, c) = delta2;
  return grad;
}

Vector finite_diff_gradient(const Objective& obj, const Vector& x,
                            const Dataset& data, Index idx, double h) {
  if (!(h > 0.0)) throw config_error("finite_diff_gradient: h must be > 0");
  Vector probe = x;
  Vector grad(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    probe(i) = xi + h;
    const double up = loss(obj, probe, data, idx);
    probe(i) = xi - h;
    const double down = loss(obj, probe, data, idx);
    probe(i) = xi;
    grad(i) = (up - down) / (2.0 * h);
  }
  return grad;
}

Vector full_gradient(const Objective& obj, const Vector& x,
                     const Dataset& data) {
  Vector sum = Vector::Zero(obj.dim);
  for (Index idx = 0; idx < data.n(); ++idx) {
    sum += per_sample_gradient(obj, x, data, idx);
  }
  return sum / static_cast<double>(data.n());
}

double mean_loss(const Objective& obj, const Vector& x, const Dataset& data,
                 Index count) {
  const Index m = std::min(count, data.n());
  if (m < 1) throw config_error("mean_loss: empty evaluation set");
  double sum = 0.0;
  for (Index idx = 0; idx < m; ++idx) sum += loss(obj, x, data, idx);
  return sum / static_cast<double>(m);
}

double accuracy(const Objective& obj, const Vector& x, const Dataset& data) {
  if (obj.kind == objective_kind::quadratic) {
    throw config_error("accuracy: undefined for quadratic objectives");
  }
  Index hits = 0;
  for (Index idx = 0; idx < data.n(); ++idx) {
    const Index label = class_label(obj, data.labels(idx), idx);
    Index predicted = 0;
    if (obj.kind == objective_kind::logistic) {
      predicted = x.dot(data.features.row(idx)) > 0.0 ? 1 : 0;
    } else {
      mlp_forward(obj, x, data.features.row(idx), 0)
          .logits.maxCoeff(&predicted);
    }
    hits += predicted == label ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(data.n());
}

}  // namespace d2p2
