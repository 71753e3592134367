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

#include "d2p2/project.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace d2p2 {

ProjectionOperator ProjectionOperator::identity(Index d) {
  if (d < 1) throw config_error("projection: dimension must be >= 1");
  ProjectionOperator op;
  op.mode = projection_mode::identity;
  op.ambient_dim = d;
  op.target_dim = d;
  return op;
}

ProjectionOperator sample_operator(Index d, Index p, double sigma_a,
                                   KeyedStream& rng) {
  if (d < 1 || p < 1 || p > d) {
    throw config_error("projection: need 1 <= p <= d, got p=" +
                       std::to_string(p) + ", d=" + std::to_string(d));
  }
  if (!(sigma_a > 0.0) || !std::isfinite(sigma_a)) {
    throw config_error("projection: sigma_a must be finite and > 0");
  }
  ProjectionOperator op;
  op.mode = projection_mode::gaussian;
  op.ambient_dim = d;
  op.target_dim = p;
  op.sigma_a = sigma_a;
  op.matrix.resize(d, p);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < d; ++i) {
      op.matrix(i, j) = sigma_a * rng.gaussian();
    }
  }
  return op;
}

Vector project_down(const ProjectionOperator& op, const Vector& v) {
  if (v.size() != op.ambient_dim) {
    throw config_error("project_down: vector dim " + std::to_string(v.size()) +
                       " != ambient dim " + std::to_string(op.ambient_dim));
  }
  if (op.mode == projection_mode::identity) return v;
  return (op.matrix.transpose() * v) /
         std::sqrt(static_cast<double>(op.target_dim));
}

Vector project_up(const ProjectionOperator& op, const Vector& w) {
  if (w.size() != op.target_dim) {
    throw config_error("project_up: vector dim " + std::to_string(w.size()) +
                       " != target dim " + std::to_string(op.target_dim));
  }
  if (op.mode == projection_mode::identity) return w;
  return op.matrix * w;
}

Index jl_min_dim(Index m, double zeta) {
  if (m < 2) throw config_error("jl_min_dim: need at least 2 points");
  if (!(zeta > 0.0) || !(zeta < 1.0)) {
    throw config_error("jl_min_dim: zeta must lie in (0, 1)");
  }
  const double bound = 8.0 * std::log(static_cast<double>(m)) / (zeta * zeta);
  return static_cast<Index>(std::floor(bound)) + 1;
}

Index reduced_dim(Index d, double reduction_rate) {
  if (d < 1) throw config_error("reduced_dim: dimension must be >= 1");
  if (!(reduction_rate >= 0.0) || !(reduction_rate < 1.0)) {
    throw config_error("reduced_dim: reduction rate must lie in [0, 1)");
  }
  const auto p = static_cast<Index>(
      std::llround((1.0 - reduction_rate) * static_cast<double>(d)));
  return std::max<Index>(1, p);
}

double distortion_report(const Matrix& points, const ProjectionOperator& op,
                         double zeta) {
  const Index m = points.rows();
  if (m < 2) throw config_error("distortion_report: need at least 2 points");
  Matrix projected(m, op.target_dim);
  for (Index i = 0; i < m; ++i) {
    projected.row(i) = project_down(op, points.row(i).transpose());
  }
  Index within = 0;
  Index pairs = 0;
  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) {
      const double orig = (points.row(i) - points.row(j)).squaredNorm();
      const double proj = (projected.row(i) - projected.row(j)).squaredNorm();
      ++pairs;
      if (proj >= (1.0 - zeta) * orig && proj <= (1.0 + zeta) * orig) {
        ++within;
      }
    }
  }
  return static_cast<double>(within) / static_cast<double>(pairs);
}

}  // namespace d2p2
