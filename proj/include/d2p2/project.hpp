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
// Gaussian random projection between the ambient space R^d and a target
// space R^p. Down-projection applies (1/sqrt(p)) A^T, up-projection applies
// A, where A is d x p with i.i.d. N(0, sigma_a^2) entries resampled per
// iteration. The identity mode (p == d, no matrix) backs the
// projection-free optimizer variants.

#ifndef D2P2_PROJECT_HPP
#define D2P2_PROJECT_HPP

#include "d2p2/errors.hpp"
#include "d2p2/rng.hpp"
#include "d2p2/types.hpp"

namespace d2p2 {

enum class projection_mode { gaussian, identity };

struct ProjectionOperator {
  projection_mode mode = projection_mode::identity;
  Index ambient_dim = 0;  // d
  Index target_dim = 0;   // p
  double sigma_a = 1.0;
  Matrix matrix;  // d x p, gaussian mode only

  static ProjectionOperator identity(Index d);
};

// Fresh i.i.d. N(0, sigma_a^2) matrix of shape d x p, filled in column-major
// order from the stream. Identical stream state yields the identical matrix.
ProjectionOperator sample_operator(Index d, Index p, double sigma_a,
                                   KeyedStream& rng);

// (1/sqrt(p)) A^T v, or v unchanged in identity mode.
Vector project_down(const ProjectionOperator& op, const Vector& v);

// A w, or w unchanged in identity mode.
Vector project_up(const ProjectionOperator& op, const Vector& w);

// Smallest integer strictly greater than 8 ln(m) / zeta^2 - the target
// dimension that preserves pairwise distances of m points to factor
// (1 +/- zeta) with high probability.
Index jl_min_dim(Index m, double zeta);

// Target dimension from a reduction rate r in [0, 1): p = max(1,
// round((1 - r) * d)).
Index reduced_dim(Index d, double reduction_rate);

// Fraction of point pairs (rows of `points`) whose projected squared
// distance lies within (1 +/- zeta) of the original. Zero-distance pairs
// count as preserved.
double distortion_report(const Matrix& points, const ProjectionOperator& op,
                         double zeta);

}  // namespace d2p2

#endif  // D2P2_PROJECT_HPP
