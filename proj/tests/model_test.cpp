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

#include "d2p2/model.hpp"

using d2p2::Dataset;
using d2p2::Index;
using d2p2::KeyedStream;
using d2p2::Matrix;
using d2p2::Objective;
using d2p2::Vector;

namespace {

Dataset single_sample(const Vector& features, double label) {
  Dataset data;
  data.features = features.transpose();
  data.labels = Vector::Constant(1, label);
  return data;
}

Vector random_vector(KeyedStream& rng, Index dim) {
  Vector v(dim);
  for (Index i = 0; i < dim; ++i) v(i) = rng.gaussian();
  return v;
}

// Max relative coordinate error, scaled by the gradient's sup norm.
double gradient_disagreement(const Vector& analytic, const Vector& numeric) {
  const double scale = std::max(analytic.lpNorm<Eigen::Infinity>(), 1e-8);
  return (analytic - numeric).lpNorm<Eigen::Infinity>() / scale;
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("logistic loss at zero weights is ln 2") {
  const Objective obj = Objective::logistic(3);
  Vector a(3);
  a << 0.7, -1.2, 2.0;
  const Dataset data = single_sample(a, 1.0);
  CHECK(d2p2::loss(obj, Vector::Zero(3), data, 0) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("logistic loss hand evaluation") {
  const Objective obj = Objective::logistic(2);
  Vector x(2);
  x << 1.0, 0.0;
  Vector a(2);
  a << 2.0, 0.0;
  const Dataset data = single_sample(a, 1.0);
  CHECK(d2p2::loss(obj, x, data, 0) ==
        doctest::Approx(0.1269280110429726).epsilon(1e-12));
}

TEST_CASE("quadratic loss vanishes at the center") {
  Vector c(4);
  c << 1.0, -2.0, 0.5, 3.0;
  const Objective obj = Objective::quadratic(c);
  const Dataset data = single_sample(Vector::Zero(4), 0.0);
  CHECK(d2p2::loss(obj, c, data, 0) == 0.0);
  CHECK(d2p2::per_sample_gradient(obj, c, data, 0).isZero(0.0));
}

TEST_CASE("quadratic gradient is x minus center") {
  const Objective obj = Objective::quadratic(Vector::Zero(2));
  Vector x(2);
  x << 1.0, 1.0;
  const Dataset data = single_sample(Vector::Zero(2), 0.0);
  const Vector g = d2p2::per_sample_gradient(obj, x, data, 0);
  CHECK(g(0) == 1.0);
  CHECK(g(1) == 1.0);
}

TEST_CASE("logistic gradient at zero weights is (sigmoid(0) - y) a") {
  const Objective obj = Objective::logistic(3);
  Vector a(3);
  a << 0.5, -1.0, 2.0;
  for (const double y : {0.0, 1.0}) {
    const Dataset data = single_sample(a, y);
    const Vector g = d2p2::per_sample_gradient(obj, Vector::Zero(3), data, 0);
    CHECK((g - (0.5 - y) * a).norm() <= 1e-15);
  }
}

TEST_CASE("finite differences are exact on quadratics") {
  const Objective obj = Objective::quadratic(Vector::Zero(2));
  Vector x(2);
  x << 1.0, 1.0;
  const Dataset data = single_sample(Vector::Zero(2), 0.0);
  const Vector fd = d2p2::finite_diff_gradient(obj, x, data, 0, 1e-5);
  CHECK(std::abs(fd(0) - 1.0) < 1e-9);
  CHECK(std::abs(fd(1) - 1.0) < 1e-9);
}

TEST_CASE("finite differences of a constant objective vanish") {
  // Quadratic evaluated at its per-sample minimum has zero slope.
  const Objective obj = Objective::quadratic(Vector::Zero(3));
  const Dataset data = single_sample(Vector::Zero(3), 0.0);
  const Vector fd =
      d2p2::finite_diff_gradient(obj, Vector::Zero(3), data, 0, 1e-6);
  CHECK(fd.lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("analytic gradients agree with finite differences") {
  KeyedStream rng(21, d2p2::stream_purpose::data, 0);

  SUBCASE("logistic") {
    const Objective obj = Objective::logistic(6);
    for (int trial = 0; trial < 10; ++trial) {
      const Dataset data =
          single_sample(random_vector(rng, 6), trial % 2 == 0 ? 1.0 : 0.0);
      const Vector x = random_vector(rng, 6);
      const Vector g = d2p2::per_sample_gradient(obj, x, data, 0);
      const Vector fd = d2p2::finite_diff_gradient(obj, x, data, 0, 1e-5);
      CHECK(gradient_disagreement(g, fd) <= 1e-5);
    }
  }
  SUBCASE("mlp") {
    const Objective obj = Objective::mlp(5, 7, 3);
    for (int trial = 0; trial < 5; ++trial) {
      const Dataset data = single_sample(
          random_vector(rng, 5), static_cast<double>(trial % 3));
      const Vector x = 0.5 * random_vector(rng, obj.dim);
      const Vector g = d2p2::per_sample_gradient(obj, x, data, 0);
      const Vector fd = d2p2::finite_diff_gradient(obj, x, data, 0, 1e-5);
      CHECK(gradient_disagreement(g, fd) <= 1e-4);
    }
  }
}

TEST_CASE("full gradient is the mean of per-sample gradients") {
  KeyedStream rng(22, d2p2::stream_purpose::data, 0);
  const Objective obj = Objective::quadratic(Vector::Zero(3));
  Dataset data;
  data.features.resize(4, 3);
  for (Index i = 0; i < 4; ++i) {
    data.features.row(i) = random_vector(rng, 3).transpose();
  }
  data.labels = Vector::Zero(4);
  const Vector x = random_vector(rng, 3);

  SUBCASE("single sample reduces to per_sample_gradient") {
    Dataset one = single_sample(data.features.row(0).transpose(), 0.0);
    CHECK(d2p2::full_gradient(obj, x, one) ==
          d2p2::per_sample_gradient(obj, x, one, 0));
  }
  SUBCASE("per-sample centers average out") {
    const Vector expected =
        x - data.features.colwise().mean().transpose();
    CHECK((d2p2::full_gradient(obj, x, data) - expected).norm() <= 1e-12);
  }
  SUBCASE("matches an explicit index-order mean") {
    Vector mean = Vector::Zero(3);
    for (Index i = 0; i < 4; ++i) {
      mean += d2p2::per_sample_gradient(obj, x, data, i);
    }
    mean /= 4.0;
    CHECK((d2p2::full_gradient(obj, x, data) - mean).norm() <= 1e-12);
  }
}

TEST_CASE("mlp parameter layout and initialization") {
  const Objective obj = Objective::mlp(4, 3, 2);
  CHECK(obj.dim == 3 * 4 + 3 + 2 * 3 + 2);
  const auto blocks = obj.param_blocks();
  REQUIRE(blocks.size() == 4);
  CHECK(blocks[0] == std::pair<Index, Index>{0, 12});
  CHECK(blocks[3] == std::pair<Index, Index>{21, 2});

  const Vector x1 = obj.initial_point(3);
  const Vector x2 = obj.initial_point(3);
  CHECK(x1 == x2);
  // biases start at zero; weights within fan-in bounds
  CHECK(x1.segment(12, 3).isZero(0.0));
  CHECK(x1.segment(21, 2).isZero(0.0));
  CHECK(x1.lpNorm<Eigen::Infinity>() <= 1.0 / std::sqrt(3.0));
  CHECK(x1.norm() > 0.0);
}

TEST_CASE("dimension and label validation") {
  const Objective obj = Objective::logistic(3);
  const Dataset data = single_sample(Vector::Zero(3), 1.0);
  CHECK_THROWS_AS(d2p2::loss(obj, Vector::Zero(4), data, 0),
                  d2p2::config_error);
  CHECK_THROWS_AS(d2p2::loss(obj, Vector::Zero(3), data, 5),
                  d2p2::config_error);
  const Dataset bad_label = single_sample(Vector::Zero(3), 2.0);
  CHECK_THROWS_AS(d2p2::loss(obj, Vector::Zero(3), bad_label, 0),
                  d2p2::config_error);
}

TEST_SUITE_END();
