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
// Experiment runner: dataset synthesis and CSV ingestion, multi-seed runs,
// sweep orchestration, and metric emission.
//
// Every metrics file starts with the schema comment "# d2p2-metrics v1".
// Per-run files carry one row per epoch with columns
//   seed,epoch,step,train_loss,test_accuracy,epsilon,sigma_eps_k,wall_ms
// (wall_ms is reserved and always 0 so reruns are byte-identical). The
// aggregate file carries per-epoch mean/min/max across seeds, keyed by
// sweep value. Distinct (seed, sweep point) runs may execute concurrently;
// D2P2_THREADS caps that parallelism.

#ifndef D2P2_HARNESS_HPP
#define D2P2_HARNESS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "d2p2/model.hpp"
#include "d2p2/optimizer.hpp"

namespace d2p2 {

struct SyntheticSpec {
  long n = 4000;
  long n_test = 1000;
  long features = 50;
  double separation = 4.0;
  std::uint64_t data_seed = 42;
};

struct CsvSource {
  std::string train_path;
  std::string test_path;  // empty: evaluate accuracy on the training set
};

struct ObjectiveSpec {
  objective_kind kind = objective_kind::logistic;
  Index hidden = 32;  // mlp only
};

enum class sweep_axis { sigma_eps, batch, reduction_rate };

struct SweepSpec {
  sweep_axis axis = sweep_axis::sigma_eps;
  std::vector<double> values;
};

struct ExperimentSpec {
  OptimizerConfig opt;  // opt.seed is ignored; per-run seeds below
  ObjectiveSpec objective;
  SyntheticSpec synthetic;
  std::optional<CsvSource> csv;  // overrides synthetic when set
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::string out_dir = "out";
  std::optional<SweepSpec> sweep;

  void validate() const;
};

// Two Gaussian blobs centered at +/- (separation/2) u for a seeded random
// unit direction u, unit covariance, labels alternating 0/1. Requires an
// even sample count.
Dataset generate_synthetic(long n, long features, double separation,
                           std::uint64_t seed);

// Splits off the first `count` rows; returns (head, tail). Used to carve a
// train/test pair out of one synthetic draw so both share the blob
// geometry.
std::pair<Dataset, Dataset> split_dataset(const Dataset& data, Index count);

// Header must contain exactly one column named "label"; all other columns
// are numeric features. Parse failures report 1-based line numbers.
Dataset load_csv(const std::string& path);
void write_csv(const Dataset& data, const std::string& path);

struct RunResult {
  std::string axis;  // "none" when not sweeping
  double sweep_value = 0.0;
  std::uint64_t seed = 0;
  MetricsSeries series;
  std::string file;
};

struct RunOutputs {
  std::vector<RunResult> runs;   // ordered by (sweep value, seed)
  std::string aggregate_file;
};

// Trains every (sweep value, seed) combination, writing one metrics CSV per
// run plus aggregate.csv with per-epoch mean/min/max across seeds. Output
// is byte-identical across reruns of the same spec.
RunOutputs run(const ExperimentSpec& spec);

struct SweepRow {
  std::string axis;
  double sweep_value = 0.0;
  optimizer_variant variant = optimizer_variant::d2p2;
  double final_accuracy_mean = 0.0;
  double final_epsilon_mean = 0.0;
};

// Final-epoch accuracy and epsilon means per sweep value.
std::vector<SweepRow> sweep_report(const ExperimentSpec& spec,
                                   const RunOutputs& outputs);

void write_sweep_report(const std::vector<SweepRow>& rows,
                        const std::string& path);

}  // namespace d2p2

#endif  // D2P2_HARNESS_HPP
