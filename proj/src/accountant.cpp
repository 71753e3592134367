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

#include "d2p2/accountant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "text_util.hpp"

namespace d2p2 {

namespace {

using detail::format_double;
using detail::parse_double;

double schedule_weight(schedule_mode mode, long k) {
  return mode == schedule_mode::static_noise ? 1.0 : static_cast<double>(k);
}

// Effective variance at step k.
double step_variance(const MechanismParams& params, long k) {
  const double base = params.sigma_eps * params.sigma_eps;
  return params.mode == schedule_mode::static_noise
             ? base
             : base / static_cast<double>(k);
}

long step_cap(const MechanismParams& params, long k) {
  const double cap =
      0.5 * step_variance(params, k) *
      std::log(static_cast<double>(params.n) / static_cast<double>(params.batch));
  if (!(cap >= 0.0)) return 0;
  if (cap > 1e18) return std::numeric_limits<long>::max();
  return static_cast<long>(std::floor(cap));
}

}  // namespace

void MechanismParams::validate() const {
  if (n < 1 || batch < 1 || batch > n) {
    throw config_error("accountant: need 1 <= B <= n");
  }
  if (!(sampling_ratio() < 0.1)) {
    throw config_error("accountant: sampling ratio B/n must be < 1/10, got " +
                       std::to_string(sampling_ratio()));
  }
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw config_error("accountant: delta must lie in (0, 1)");
  }
  if (!(sigma_eps >= 0.0)) {
    throw config_error("accountant: sigma_eps must be >= 0");
  }
}

long max_admissible_order(const MechanismParams& params, long k) {
  params.validate();
  if (k < 1) throw config_error("accountant: step index must be >= 1");
  return step_cap(params, k);
}

std::optional<double> per_step_renyi(const MechanismParams& params, long k,
                                     long eta) {
  params.validate();
  if (k < 1) throw config_error("accountant: step index must be >= 1");
  if (eta < 2) throw config_error("accountant: order must be >= 2");
  if (eta > step_cap(params, k)) return std::nullopt;
  const double q = params.sampling_ratio();
  return 7.0 * q * q * static_cast<double>(eta) / step_variance(params, k);
}

PrivacyLedger::PrivacyLedger(long eta_min, long eta_max)
    : eta_min_(eta_min), eta_max_(eta_max), cap_(eta_max) {
  if (eta_min < 2 || eta_max < eta_min) {
    throw config_error("ledger: need 2 <= eta_min <= eta_max");
  }
}

double PrivacyLedger::order_coefficient() const {
  if (!params_.has_value() || weight_sum_ == 0.0) return 0.0;
  const double q = params_->sampling_ratio();
  return 7.0 * q * q * weight_sum_ /
         (params_->sigma_eps * params_->sigma_eps);
}

std::optional<double> PrivacyLedger::total(long eta) const {
  if (eta < eta_min_ || eta > eta_max_ || eta > cap_) return std::nullopt;
  return order_coefficient() * static_cast<double>(eta);
}

void PrivacyLedger::accumulate_step(const MechanismParams& params, long k) {
  params.validate();
  if (k != steps_done_ + 1) {
    throw usage_error("ledger: expected step " + std::to_string(steps_done_ + 1) +
                      ", got " + std::to_string(k));
  }
  if (params_.has_value()) {
    const MechanismParams& prev = *params_;
    if (prev.n != params.n || prev.batch != params.batch ||
        prev.sigma_eps != params.sigma_eps || prev.mode != params.mode) {
      throw usage_error("ledger: mechanism parameters changed mid-run");
    }
  } else {
    params_ = params;
  }
  cap_ = std::min(cap_, step_cap(params, k));
  weight_sum_ += schedule_weight(params.mode, k);
  steps_done_ = k;
}

double PrivacyLedger::epsilon_at_delta(double delta) const {
  const long eta = minimizing_order(delta);
  return total(eta).value() +
         std::log(1.0 / delta) / static_cast<double>(eta - 1);
}

long PrivacyLedger::minimizing_order(double delta) const {
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw config_error("ledger: delta must lie in (0, 1)");
  }
  const long top = std::min(cap_, eta_max_);
  if (top < eta_min_) {
    throw no_valid_order_error(
        "ledger: no admissible order remains (cap " + std::to_string(cap_) +
        " below grid minimum " + std::to_string(eta_min_) + ")");
  }
  const double coeff = order_coefficient();
  const double log_term = std::log(1.0 / delta);
  long best_eta = eta_min_;
  double best = std::numeric_limits<double>::infinity();
  for (long eta = eta_min_; eta <= top; ++eta) {
    const double value =
        coeff * static_cast<double>(eta) + log_term / static_cast<double>(eta - 1);
    if (value < best) {
      best = value;
      best_eta = eta;
    }
  }
  return best_eta;
}

std::string PrivacyLedger::to_text() const {
  std::ostringstream out;
  out << "d2p2-ledger v1\n";
  out << "eta_min " << eta_min_ << "\n";
  out << "eta_max " << eta_max_ << "\n";
  out << "cap " << cap_ << "\n";
  out << "steps " << steps_done_ << "\n";
  out << "weight_sum " << format_double(weight_sum_) << "\n";
  if (params_.has_value()) {
    out << "n " << params_->n << "\n";
    out << "batch " << params_->batch << "\n";
    out << "sigma_eps " << format_double(params_->sigma_eps) << "\n";
    out << "mode "
        << (params_->mode == schedule_mode::static_noise ? "static" : "dynamic")
        << "\n";
    out << "delta " << format_double(params_->delta) << "\n";
  }
  const long top = std::min(cap_, eta_max_);
  for (long eta = eta_min_; eta <= top; ++eta) {
    out << "total " << eta << " " << format_double(*total(eta)) << "\n";
  }
  return out.str();
}

PrivacyLedger PrivacyLedger::from_text(const std::string& text) {
  std::istringstream in(text);
  std::string header;
  std::getline(in, header);
  if (header != "d2p2-ledger v1") {
    throw config_error("ledger snapshot: unrecognized header '" + header + "'");
  }
  long eta_min = 2, eta_max = 2000, cap = 2000, steps = 0;
  double weight_sum = 0.0;
  MechanismParams params;
  bool have_params = false;
  const auto parse_long = [](const std::string& value, const char* field) {
    try {
      return std::stol(value);
    } catch (...) {
      throw config_error(std::string("ledger snapshot: bad value for ") +
                         field);
    }
  };
  std::string key;
  while (in >> key) {
    if (key == "total") {  // derived; skip the two value tokens
      std::string skip;
      in >> skip >> skip;
      continue;
    }
    std::string value;
    in >> value;
    if (key == "eta_min") eta_min = parse_long(value, "eta_min");
    else if (key == "eta_max") eta_max = parse_long(value, "eta_max");
    else if (key == "cap") cap = parse_long(value, "cap");
    else if (key == "steps") steps = parse_long(value, "steps");
    else if (key == "weight_sum") weight_sum = parse_double(value, "weight_sum");
    else if (key == "n") { params.n = parse_long(value, "n"); have_params = true; }
    else if (key == "batch") params.batch = parse_long(value, "batch");
    else if (key == "sigma_eps") params.sigma_eps = parse_double(value, "sigma_eps");
    else if (key == "mode") {
      params.mode = value == "dynamic" ? schedule_mode::dynamic_noise
                                       : schedule_mode::static_noise;
    } else if (key == "delta") params.delta = parse_double(value, "delta");
    else throw config_error("ledger snapshot: unknown key '" + key + "'");
  }
  if (steps > 0 && !have_params) {
    throw config_error(
        "ledger snapshot: steps recorded but mechanism parameters missing");
  }
  PrivacyLedger ledger(eta_min, eta_max);
  ledger.cap_ = cap;
  ledger.steps_done_ = steps;
  ledger.weight_sum_ = weight_sum;
  if (have_params) ledger.params_ = params;
  return ledger;
}

double required_sigma(const SigmaRequest& request, long eta_min,
                      long eta_max) {
  if (request.n < 1 || request.batch < 1 || request.steps < 1) {
    throw config_error("required_sigma: need n, B, K >= 1");
  }
  if (!(request.eps_target > 0.0)) {
    throw config_error("required_sigma: epsilon target must be > 0");
  }
  const double q =
      static_cast<double>(request.batch) / static_cast<double>(request.n);
  if (!(q < 0.1)) {
    throw config_error("required_sigma: sampling ratio must be < 1/10");
  }
  const double log_ratio = std::log(1.0 / q);
  const double log_delta = std::log(1.0 / request.delta);
  double weight_sum = 0.0;
  for (long k = 1; k <= request.steps; ++k) {
    weight_sum += schedule_weight(request.mode, k);
  }
  // Tightest cap across steps occurs at k = K for the decaying schedule.
  const double cap_scale =
      request.mode == schedule_mode::static_noise
          ? 1.0
          : 1.0 / static_cast<double>(request.steps);

  const auto epsilon_of = [&](double sigma) {
    const double variance = sigma * sigma;
    const double cap_value = 0.5 * variance * cap_scale * log_ratio;
    const long top = cap_value > static_cast<double>(eta_max)
                         ? eta_max
                         : static_cast<long>(std::floor(cap_value));
    if (top < eta_min) return std::numeric_limits<double>::infinity();
    const double coeff = 7.0 * q * q * weight_sum / variance;
    double best = std::numeric_limits<double>::infinity();
    for (long eta = eta_min; eta <= top; ++eta) {
      best = std::min(best, coeff * static_cast<double>(eta) +
                                log_delta / static_cast<double>(eta - 1));
    }
    return best;
  };

  double hi = 1.0;
  int doublings = 0;
  while (epsilon_of(hi) > request.eps_target) {
    hi *= 2.0;
    if (++doublings > 200) {
      throw config_error(
          "required_sigma: target epsilon unreachable on the order grid "
          "(floor is ln(1/delta)/(eta_max - 1))");
    }
  }
  double lo = hi / 2.0;
  while (epsilon_of(lo) <= request.eps_target && lo > 1e-12) lo /= 2.0;
  while ((hi - lo) / hi > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    if (epsilon_of(mid) <= request.eps_target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

C1Feasibility c1_feasibility(long n, long batch, long steps, double eps,
                             double c1_ceiling) {
  if (n < 1 || batch < 1 || steps < 1) {
    throw config_error("c1_feasibility: need n, B, K >= 1");
  }
  if (!(eps >= 0.0)) throw config_error("c1_feasibility: eps must be >= 0");
  C1Feasibility result;
  result.implied_c1 = eps * static_cast<double>(n) * static_cast<double>(n) /
                      (static_cast<double>(batch) * static_cast<double>(batch) *
                       static_cast<double>(steps));
  result.within_bound = result.implied_c1 <= c1_ceiling;
  return result;
}

}  // namespace d2p2
