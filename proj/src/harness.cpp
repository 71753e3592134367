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

#include "d2p2/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "text_util.hpp"

namespace d2p2 {

namespace {

using detail::format_double;
using detail::parse_double;

constexpr const char* kSchemaLine = "# d2p2-metrics v1";
constexpr double kInfinity = std::numeric_limits<double>::infinity();

std::string axis_name(sweep_axis axis) {
  switch (axis) {
    case sweep_axis::sigma_eps: return "sigma_eps";
    case sweep_axis::batch: return "batch";
    case sweep_axis::reduction_rate: return "reduction_rate";
  }
  return "unknown";
}

void apply_sweep_value(OptimizerConfig& cfg, sweep_axis axis, double value) {
  switch (axis) {
    case sweep_axis::sigma_eps:
      cfg.sigma_eps = value;
      break;
    case sweep_axis::batch: {
      const auto b = static_cast<long>(std::llround(value));
      if (b < 1 || std::abs(value - static_cast<double>(b)) > 1e-9) {
        throw config_error("sweep: batch value must be a positive integer");
      }
      cfg.batch = b;
      break;
    }
    case sweep_axis::reduction_rate:
      if (!(value > 0.0) || !(value < 1.0)) {
        throw config_error("sweep: reduction rate must lie in (0, 1)");
      }
      cfg.reduction_rate = value;
      break;
  }
}

Objective make_objective(const ObjectiveSpec& spec, const Dataset& train) {
  switch (spec.kind) {
    case objective_kind::quadratic:
      return Objective::quadratic(Vector::Zero(train.width()));
    case objective_kind::logistic:
      return Objective::logistic(train.width());
    case objective_kind::mlp:
      break;
  }
  const auto classes =
      static_cast<Index>(std::llround(train.labels.maxCoeff())) + 1;
  return Objective::mlp(train.width(), spec.hidden, std::max<Index>(classes, 2));
}

void write_lines(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("harness: cannot open '" + path + "' for write");
  out << content;
  if (!out) throw config_error("harness: write to '" + path + "' failed");
}

std::string metrics_file_name(const std::optional<SweepSpec>& sweep,
                              double value, std::uint64_t seed) {
  std::ostringstream name;
  name << "metrics_";
  if (sweep.has_value()) {
    name << axis_name(sweep->axis) << "_" << format_double(value) << "_";
  }
  name << "seed" << seed << ".csv";
  return name.str();
}

unsigned thread_budget(std::size_t items) {
  unsigned budget = 1;
  if (const char* env = std::getenv("D2P2_THREADS")) {
    const long parsed = std::strtol(env, nullptr, 10);
    if (parsed > 0) budget = static_cast<unsigned>(parsed);
  }
  return std::min<unsigned>(budget, static_cast<unsigned>(std::max<std::size_t>(items, 1)));
}

}  // namespace

void ExperimentSpec::validate() const {
  opt.validate();
  if (seeds.empty()) throw config_error("harness: seed list must be nonempty");
  if (sweep.has_value()) {
    if (sweep->values.empty()) {
      throw config_error("harness: sweep values must be nonempty");
    }
    for (const double v : sweep->values) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw config_error("harness: sweep values must be positive and finite");
      }
    }
  }
  if (out_dir.empty()) throw config_error("harness: output directory required");
  if (!csv.has_value() && (synthetic.n % 2 != 0 || synthetic.n_test % 2 != 0)) {
    throw config_error("harness: synthetic train/test sizes must be even");
  }
}

Dataset generate_synthetic(long n, long features, double separation,
                           std::uint64_t seed) {
  if (n < 2 || n % 2 != 0) {
    throw config_error("synthetic: sample count must be even and >= 2");
  }
  if (features < 1) throw config_error("synthetic: need >= 1 feature");
  if (!(separation >= 0.0)) {
    throw config_error("synthetic: separation must be >= 0");
  }
  KeyedStream rng(seed, stream_purpose::data, 0);
  Vector direction(features);
  for (Index i = 0; i < features; ++i) direction(i) = rng.gaussian();
  const double norm = direction.norm();
  if (norm > 0.0) direction /= norm;

  Dataset data;
  data.features.resize(n, features);
  data.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    const Index label = i % 2;
    const double sign = label == 0 ? -1.0 : 1.0;
    for (Index j = 0; j < features; ++j) {
      data.features(i, j) =
          sign * 0.5 * separation * direction(j) + rng.gaussian();
    }
    data.labels(i) = static_cast<double>(label);
  }
  return data;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data, Index count) {
  if (count < 1 || count >= data.n()) {
    throw config_error("split_dataset: head count must lie in [1, n)");
  }
  Dataset head;
  head.features = data.features.topRows(count);
  head.labels = data.labels.head(count);
  Dataset tail;
  tail.features = data.features.bottomRows(data.n() - count);
  tail.labels = data.labels.tail(data.n() - count);
  return {std::move(head), std::move(tail)};
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("load_csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) {
    throw config_error("load_csv: '" + path + "' has no data rows");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header;
  {
    std::stringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) header.push_back(field);
  }
  Index label_col = -1;
  for (Index c = 0; c < static_cast<Index>(header.size()); ++c) {
    if (header[c] == "label") {
      if (label_col >= 0) {
        throw config_error("load_csv: duplicate 'label' column in '" + path +
                           "'");
      }
      label_col = c;
    }
  }
  if (label_col < 0) {
    throw config_error("load_csv: no column named 'label' in '" + path + "'");
  }
  const auto width = static_cast<Index>(header.size()) - 1;
  if (width < 1) {
    throw config_error("load_csv: '" + path + "' has no feature columns");
  }

  std::vector<std::vector<double>> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(header.size());
    std::stringstream fields(line);
    std::string field;
    Index col = 0;
    while (std::getline(fields, field, ',')) {
      row.push_back(parse_double(
          field, "load_csv: '" + path + "' line " + std::to_string(line_no) +
                     ", column " + std::to_string(col + 1)));
      ++col;
    }
    if (col != static_cast<Index>(header.size())) {
      throw config_error("load_csv: '" + path + "' line " +
                         std::to_string(line_no) + " has " +
                         std::to_string(col) + " cells, expected " +
                         std::to_string(header.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw config_error("load_csv: '" + path + "' has no data rows");
  }

  Dataset data;
  data.features.resize(static_cast<Index>(rows.size()), width);
  data.labels.resize(static_cast<Index>(rows.size()));
  for (Index i = 0; i < static_cast<Index>(rows.size()); ++i) {
    Index out = 0;
    for (Index c = 0; c < static_cast<Index>(header.size()); ++c) {
      if (c == label_col) {
        data.labels(i) = rows[i][c];
      } else {
        data.features(i, out++) = rows[i][c];
      }
    }
  }
  data.validate();
  return data;
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ostringstream out;
  for (Index j = 0; j < data.width(); ++j) out << "f" << j << ",";
  out << "label\n";
  for (Index i = 0; i < data.n(); ++i) {
    for (Index j = 0; j < data.width(); ++j) {
      out << format_double(data.features(i, j)) << ",";
    }
    out << format_double(data.labels(i)) << "\n";
  }
  write_lines(path, out.str());
}

RunOutputs run(const ExperimentSpec& spec) {
  spec.validate();
  std::filesystem::create_directories(spec.out_dir);

  Dataset train_data;
  Dataset test_data;
  if (spec.csv.has_value()) {
    train_data = load_csv(spec.csv->train_path);
    test_data = spec.csv->test_path.empty() ? train_data
                                            : load_csv(spec.csv->test_path);
  } else {
    // One draw covering train + test so both share the blob geometry.
    const Dataset all = generate_synthetic(
        spec.synthetic.n + spec.synthetic.n_test, spec.synthetic.features,
        spec.synthetic.separation, spec.synthetic.data_seed);
    std::tie(train_data, test_data) = split_dataset(all, spec.synthetic.n);
  }
  const Objective obj = make_objective(spec.objective, train_data);

  const std::string axis =
      spec.sweep.has_value() ? axis_name(spec.sweep->axis) : "none";
  const std::vector<double> values =
      spec.sweep.has_value() ? spec.sweep->values : std::vector<double>{0.0};

  RunOutputs outputs;
  for (const double value : values) {
    for (const std::uint64_t seed : spec.seeds) {
      RunResult item;
      item.axis = axis;
      item.sweep_value = value;
      item.seed = seed;
      item.file = (std::filesystem::path(spec.out_dir) /
                   metrics_file_name(spec.sweep, value, seed))
                      .string();
      outputs.runs.push_back(std::move(item));
    }
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mutex;
  const auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= outputs.runs.size() || failed.load()) return;
      RunResult& item = outputs.runs[i];
      try {
        OptimizerConfig cfg = spec.opt;
        cfg.seed = item.seed;
        if (spec.sweep.has_value()) {
          apply_sweep_value(cfg, spec.sweep->axis, item.sweep_value);
        }
        item.series = train(cfg, obj, train_data, test_data);
        std::ostringstream out;
        out << kSchemaLine << "\n";
        out << "seed,epoch,step,train_loss,test_accuracy,epsilon,sigma_eps_k,"
               "wall_ms\n";
        for (const EpochMetrics& row : item.series) {
          out << item.seed << "," << row.epoch << "," << row.step << ","
              << format_double(row.train_loss) << ","
              << format_double(row.test_accuracy) << ","
              << format_double(row.epsilon) << ","
              << format_double(row.sigma_eps_k) << ",0\n";
        }
        write_lines(item.file, out.str());
      } catch (const std::exception& e) {
        std::scoped_lock lock(failure_mutex);
        failed.store(true);
        if (failure.empty()) {
          failure = "run " + item.axis + "=" + format_double(item.sweep_value) +
                    " seed=" + std::to_string(item.seed) + ": " + e.what();
        }
      }
    }
  };

  const unsigned n_threads = thread_budget(outputs.runs.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failed.load()) throw config_error(failure);

  // Aggregate: per (sweep value, epoch) mean/min/max across seeds.
  std::ostringstream agg;
  agg << kSchemaLine << "\n";
  agg << "sweep_axis,sweep_value,epoch,step,"
         "train_loss_mean,train_loss_min,train_loss_max,"
         "test_accuracy_mean,test_accuracy_min,test_accuracy_max,"
         "epsilon_mean,epsilon_min,epsilon_max\n";
  const std::size_t n_seeds = spec.seeds.size();
  for (std::size_t v = 0; v < values.size(); ++v) {
    const RunResult& first = outputs.runs[v * n_seeds];
    for (std::size_t e = 0; e < first.series.size(); ++e) {
      const auto stats = [&](auto field) {
        double sum = 0.0, lo = kInfinity, hi = -kInfinity;
        bool undefined = false;
        for (std::size_t s = 0; s < n_seeds; ++s) {
          const double x = field(outputs.runs[v * n_seeds + s].series[e]);
          undefined = undefined || std::isnan(x);
          sum += x;
          lo = std::min(lo, x);
          hi = std::max(hi, x);
        }
        if (undefined) {
          const double nan = std::numeric_limits<double>::quiet_NaN();
          return std::array<double, 3>{nan, nan, nan};
        }
        return std::array<double, 3>{sum / static_cast<double>(n_seeds), lo,
                                     hi};
      };
      const auto loss = stats([](const EpochMetrics& m) { return m.train_loss; });
      const auto acc =
          stats([](const EpochMetrics& m) { return m.test_accuracy; });
      const auto eps = stats([](const EpochMetrics& m) { return m.epsilon; });
      agg << axis << "," << format_double(values[v]) << ","
          << first.series[e].epoch << "," << first.series[e].step;
      for (const auto& triple : {loss, acc, eps}) {
        for (const double x : triple) agg << "," << format_double(x);
      }
      agg << "\n";
    }
  }
  outputs.aggregate_file =
      (std::filesystem::path(spec.out_dir) / "aggregate.csv").string();
  write_lines(outputs.aggregate_file, agg.str());
  return outputs;
}

std::vector<SweepRow> sweep_report(const ExperimentSpec& spec,
                                   const RunOutputs& outputs) {
  std::vector<SweepRow> rows;
  const std::size_t n_seeds = spec.seeds.size();
  for (std::size_t v = 0; v * n_seeds < outputs.runs.size(); ++v) {
    SweepRow row;
    row.axis = outputs.runs[v * n_seeds].axis;
    row.sweep_value = outputs.runs[v * n_seeds].sweep_value;
    row.variant = spec.opt.variant;
    double acc = 0.0, eps = 0.0;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const MetricsSeries& series = outputs.runs[v * n_seeds + s].series;
      acc += series.back().test_accuracy;
      eps += series.back().epsilon;
    }
    row.final_accuracy_mean = acc / static_cast<double>(n_seeds);
    row.final_epsilon_mean = eps / static_cast<double>(n_seeds);
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_report(const std::vector<SweepRow>& rows,
                        const std::string& path) {
  std::ostringstream out;
  out << kSchemaLine << "\n";
  out << "sweep_axis,sweep_value,variant,final_accuracy_mean,"
         "final_epsilon_mean\n";
  for (const SweepRow& row : rows) {
    out << row.axis << "," << format_double(row.sweep_value) << ","
        << variant_name(row.variant) << ","
        << format_double(row.final_accuracy_mean) << ","
        << format_double(row.final_epsilon_mean) << "\n";
  }
  write_lines(path, out.str());
}

}  // namespace d2p2
