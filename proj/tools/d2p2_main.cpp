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
// Command-line experiment runner:
//   d2p2 run        train one optimizer configuration over several seeds
//   d2p2 sweep      repeat a run across an axis of values
//   d2p2 accountant print the composed (epsilon, delta) privacy loss
//
// Flags may also come from a config file of flat `key = value` lines with
// `#` comments (via --config); command-line flags override file values.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "d2p2/accountant.hpp"
#include "d2p2/harness.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::string optimizer = "d2p2";
  std::string dataset = "synthetic";
  std::string objective = "logistic";
  long epochs = 40;
  long batch = 256;
  double lr = 0.01;
  double sigma_eps = 3.0;
  double gamma = 0.01;
  double reduction_rate = 0.7;
  double sigma_a = 1.0;
  double delta = 1e-5;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::string out_dir = "out";
  long hidden = 32;
  long synthetic_n = 4000;
  long synthetic_test_n = 1000;
  long features = 50;
  double separation = 4.0;
  std::uint64_t data_seed = 42;
  bool layerwise = false;
  bool split_batches = false;
};

void add_common_options(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path,
                  "Config file of flat key = value lines");
  cmd->add_option("--optimizer", opts.optimizer,
                  "Variant: d2p2|d2p|dp2|dpsgd|sgd");
  cmd->add_option("--dataset", opts.dataset,
                  "synthetic, or csv:<train.csv>[,<test.csv>]");
  cmd->add_option("--objective", opts.objective,
                  "Objective: logistic|mlp|quadratic");
  cmd->add_option("--epochs", opts.epochs, "Training epochs");
  cmd->add_option("--batch-size", opts.batch, "Minibatch size");
  cmd->add_option("--lr", opts.lr, "Step size");
  cmd->add_option("--sigma-eps", opts.sigma_eps, "Base noise stddev");
  cmd->add_option("--gamma", opts.gamma, "Clipping stability constant");
  cmd->add_option("--reduction-rate", opts.reduction_rate,
                  "Dimension reduction rate in [0, 1)");
  cmd->add_option("--sigma-a", opts.sigma_a, "Projection entry stddev");
  cmd->add_option("--delta", opts.delta, "Privacy delta");
  cmd->add_option("--seeds", opts.seeds, "Run seeds")->delimiter(',');
  cmd->add_option("--out", opts.out_dir, "Output directory");
  cmd->add_option("--hidden", opts.hidden, "MLP hidden width");
  cmd->add_option("--synthetic-n", opts.synthetic_n, "Synthetic train size");
  cmd->add_option("--synthetic-test-n", opts.synthetic_test_n,
                  "Synthetic test size");
  cmd->add_option("--features", opts.features, "Synthetic feature count");
  cmd->add_option("--separation", opts.separation, "Synthetic class separation");
  cmd->add_option("--data-seed", opts.data_seed, "Dataset generation seed");
  cmd->add_flag("--layerwise", opts.layerwise,
                "Project each parameter block separately");
  cmd->add_flag("--split-batches", opts.split_batches,
                "Sample one block of a fixed batch split per step");
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  return s.substr(begin, s.find_last_not_of(" \t") - begin + 1);
}

long parse_long(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const long parsed = std::stol(value, &used);
    if (used == value.size()) return parsed;
  } catch (...) {
  }
  throw d2p2::config_error("config: bad integer for '" + key + "': " + value);
}

double parse_real(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const double parsed = std::stod(value, &used);
    if (used == value.size()) return parsed;
  } catch (...) {
  }
  throw d2p2::config_error("config: bad number for '" + key + "': " + value);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& value) {
  std::vector<std::uint64_t> seeds;
  std::stringstream fields(value);
  std::string field;
  while (std::getline(fields, field, ',')) {
    seeds.push_back(
        static_cast<std::uint64_t>(parse_long(trim(field), "seeds")));
  }
  return seeds;
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw d2p2::config_error("config: bad flag value for '" + key +
                           "': " + value);
}

// Flat `key = value` file with `#` comments. Command-line flags win: a file
// value is applied only when its flag was not given on the command line.
void apply_config_file(const CLI::App* cmd, CommonOptions& opts) {
  std::ifstream in(opts.config_path);
  if (!in) {
    throw d2p2::config_error("config: cannot open '" + opts.config_path + "'");
  }
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw d2p2::config_error("config: line " + std::to_string(line_no) +
                               " is not a key = value pair");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const CLI::Option* flag = cmd->get_option_no_throw("--" + key);
    if (flag == nullptr) {
      throw d2p2::config_error("config: unknown key '" + key + "' at line " +
                               std::to_string(line_no));
    }
    if (flag->count() > 0) continue;  // flag overrides file

    if (key == "optimizer") opts.optimizer = value;
    else if (key == "dataset") opts.dataset = value;
    else if (key == "objective") opts.objective = value;
    else if (key == "epochs") opts.epochs = parse_long(value, key);
    else if (key == "batch-size") opts.batch = parse_long(value, key);
    else if (key == "lr") opts.lr = parse_real(value, key);
    else if (key == "sigma-eps") opts.sigma_eps = parse_real(value, key);
    else if (key == "gamma") opts.gamma = parse_real(value, key);
    else if (key == "reduction-rate") opts.reduction_rate = parse_real(value, key);
    else if (key == "sigma-a") opts.sigma_a = parse_real(value, key);
    else if (key == "delta") opts.delta = parse_real(value, key);
    else if (key == "seeds") opts.seeds = parse_seed_list(value);
    else if (key == "out") opts.out_dir = value;
    else if (key == "hidden") opts.hidden = parse_long(value, key);
    else if (key == "synthetic-n") opts.synthetic_n = parse_long(value, key);
    else if (key == "synthetic-test-n") opts.synthetic_test_n = parse_long(value, key);
    else if (key == "features") opts.features = parse_long(value, key);
    else if (key == "separation") opts.separation = parse_real(value, key);
    else if (key == "data-seed") opts.data_seed = static_cast<std::uint64_t>(parse_long(value, key));
    else if (key == "layerwise") opts.layerwise = parse_bool(value, key);
    else if (key == "split-batches") opts.split_batches = parse_bool(value, key);
    else if (key == "config") {
      throw d2p2::config_error("config: files cannot nest via 'config ='");
    }
  }
}

d2p2::ExperimentSpec build_spec(const CommonOptions& opts) {
  d2p2::ExperimentSpec spec;
  spec.opt.variant = d2p2::parse_variant(opts.optimizer);
  spec.opt.epochs = opts.epochs;
  spec.opt.batch = opts.batch;
  spec.opt.alpha = opts.lr;
  spec.opt.sigma_eps = opts.sigma_eps;
  spec.opt.gamma = opts.gamma;
  spec.opt.reduction_rate = opts.reduction_rate;
  spec.opt.sigma_a = opts.sigma_a;
  spec.opt.delta = opts.delta;
  spec.opt.layerwise_projection = opts.layerwise;
  spec.opt.split_batch_sampling = opts.split_batches;
  spec.seeds = opts.seeds;
  spec.out_dir = opts.out_dir;

  if (opts.objective == "logistic") {
    spec.objective.kind = d2p2::objective_kind::logistic;
  } else if (opts.objective == "mlp") {
    spec.objective.kind = d2p2::objective_kind::mlp;
    spec.objective.hidden = opts.hidden;
  } else if (opts.objective == "quadratic") {
    spec.objective.kind = d2p2::objective_kind::quadratic;
  } else {
    throw d2p2::config_error("unknown objective '" + opts.objective + "'");
  }

  if (opts.dataset == "synthetic") {
    spec.synthetic = d2p2::SyntheticSpec{opts.synthetic_n, opts.synthetic_test_n,
                                         opts.features, opts.separation,
                                         opts.data_seed};
  } else if (opts.dataset.rfind("csv:", 0) == 0) {
    const std::string paths = opts.dataset.substr(4);
    const auto comma = paths.find(',');
    d2p2::CsvSource source;
    source.train_path = paths.substr(0, comma);
    if (comma != std::string::npos) source.test_path = paths.substr(comma + 1);
    spec.csv = source;
  } else {
    throw d2p2::config_error("unknown dataset '" + opts.dataset +
                             "' (expected synthetic or csv:<path>)");
  }
  return spec;
}

void print_report(const std::vector<d2p2::SweepRow>& rows) {
  std::printf("%-16s %12s %8s %16s %14s\n", "axis", "value", "variant",
              "final_accuracy", "final_epsilon");
  for (const auto& row : rows) {
    std::printf("%-16s %12g %8s %16.4f %14.6g\n", row.axis.c_str(),
                row.sweep_value, d2p2::variant_name(row.variant),
                row.final_accuracy_mean, row.final_epsilon_mean);
  }
}

int run_command(const CLI::App* cmd, CommonOptions opts,
                const std::optional<d2p2::SweepSpec>& sweep) {
  if (!opts.config_path.empty()) apply_config_file(cmd, opts);
  d2p2::ExperimentSpec spec = build_spec(opts);
  spec.sweep = sweep;
  const auto outputs = d2p2::run(spec);
  for (const auto& item : outputs.runs) {
    std::printf("wrote %s\n", item.file.c_str());
  }
  std::printf("wrote %s\n", outputs.aggregate_file.c_str());
  const auto rows = d2p2::sweep_report(spec, outputs);
  if (sweep.has_value()) {
    const auto report_path =
        (std::filesystem::path(spec.out_dir) / "sweep_report.csv").string();
    d2p2::write_sweep_report(rows, report_path);
    std::printf("wrote %s\n", report_path.c_str());
  }
  print_report(rows);
  return 0;
}

int accountant_command(long n, long batch, long steps, double sigma_eps,
                       double delta, bool dynamic) {
  const d2p2::MechanismParams params{
      n, batch, sigma_eps,
      dynamic ? d2p2::schedule_mode::dynamic_noise
              : d2p2::schedule_mode::static_noise,
      delta};
  d2p2::PrivacyLedger ledger;
  for (long k = 1; k <= steps; ++k) ledger.accumulate_step(params, k);
  double epsilon = 0.0;
  try {
    epsilon = ledger.epsilon_at_delta(delta);
  } catch (const d2p2::no_valid_order_error&) {
    std::printf("epsilon = inf (no admissible Renyi order; raise sigma-eps)\n");
    return 0;
  }
  std::printf("epsilon = %.6g (delta = %g, minimizing order %ld over %ld %s steps)\n",
              epsilon, delta, ledger.minimizing_order(delta), steps,
              dynamic ? "dynamic" : "static");
  const auto c1 = d2p2::c1_feasibility(n, batch, steps, epsilon);
  if (!c1.within_bound) {
    std::fprintf(stderr,
                 "warning: implied C1 = %.4g exceeds the configured ceiling "
                 "of 314\n",
                 c1.implied_c1);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"d2p2: differentially private stochastic optimization"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  CLI::App* run_cmd = app.add_subcommand("run", "Train over a seed list");
  add_common_options(run_cmd, run_opts);

  CommonOptions sweep_opts;
  std::string sweep_axis_name = "sigma_eps";
  std::vector<double> sweep_values;
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "Run across an axis of values");
  add_common_options(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--axis", sweep_axis_name,
                        "Sweep axis: sigma_eps|batch|reduction_rate");
  sweep_cmd->add_option("--values", sweep_values, "Sweep values")
      ->delimiter(',')
      ->required();

  long acct_n = 0, acct_batch = 0, acct_steps = 0;
  double acct_sigma = 3.0, acct_delta = 1e-5;
  bool acct_dynamic = false;
  CLI::App* acct_cmd =
      app.add_subcommand("accountant", "Convert a run to (epsilon, delta)");
  acct_cmd->add_option("--n", acct_n, "Dataset size")->required();
  acct_cmd->add_option("--batch-size", acct_batch, "Minibatch size")
      ->required();
  acct_cmd->add_option("--steps", acct_steps, "Optimizer steps")->required();
  acct_cmd->add_option("--sigma-eps", acct_sigma, "Base noise stddev");
  acct_cmd->add_option("--delta", acct_delta, "Privacy delta");
  acct_cmd->add_flag("--dynamic", acct_dynamic, "Decaying noise schedule");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      return run_command(run_cmd, run_opts, std::nullopt);
    }
    if (sweep_cmd->parsed()) {
      d2p2::SweepSpec sweep;
      if (sweep_axis_name == "sigma_eps") {
        sweep.axis = d2p2::sweep_axis::sigma_eps;
      } else if (sweep_axis_name == "batch") {
        sweep.axis = d2p2::sweep_axis::batch;
      } else if (sweep_axis_name == "reduction_rate") {
        sweep.axis = d2p2::sweep_axis::reduction_rate;
      } else {
        throw d2p2::config_error("unknown sweep axis '" + sweep_axis_name +
                                 "'");
      }
      sweep.values = sweep_values;
      return run_command(sweep_cmd, sweep_opts, sweep);
    }
    if (acct_cmd->parsed()) {
      return accountant_command(acct_n, acct_batch, acct_steps, acct_sigma,
                                acct_delta, acct_dynamic);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
