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
// Renyi-divergence accountant for the subsampled Gaussian mechanism with a
// static or decaying noise schedule.
//
// One step of training releases a subsampled Gaussian with sampling ratio
// q = B/n and noise variance sigma_k^2. Its order-eta Renyi divergence is
// bounded by 7 q^2 eta / sigma_k^2, valid for eta <= (sigma_k^2 / 2) ln(n/B)
// and q < 1/10. Steps compose additively per order; the composed bound
// converts to (epsilon, delta) via
//   epsilon = min over admissible eta of  total(eta) + ln(1/delta)/(eta - 1).
//
// Orders live on an integer grid. Under the decaying schedule the
// admissibility cap shrinks with the step index, so orders are retired as
// accumulation proceeds; a retired order never re-enters conversion.
//
// Note this composes the closed-form upper bound, not a numerically tight
// subsampled-Gaussian accountant, so reported epsilons are conservative.

#ifndef D2P2_ACCOUNTANT_HPP
#define D2P2_ACCOUNTANT_HPP

#include <optional>
#include <string>

#include "d2p2/errors.hpp"
#include "d2p2/noise.hpp"

namespace d2p2 {

// Conversion requested with every order retired (or none ever admissible).
class no_valid_order_error : public std::runtime_error {
 public:
  explicit no_valid_order_error(const std::string& what)
      : std::runtime_error(what) {}
};

struct MechanismParams {
  long n = 0;      // dataset size
  long batch = 0;  // minibatch size B
  double sigma_eps = 0.0;
  schedule_mode mode = schedule_mode::static_noise;
  double delta = 1e-5;

  double sampling_ratio() const {
    return static_cast<double>(batch) / static_cast<double>(n);
  }
  void validate() const;
};

// Largest order admissible at step k: floor((sigma_k^2 / 2) ln(n/B)), where
// sigma_k^2 is the step's effective variance. May fall below 2, in which
// case no order is admissible.
long max_admissible_order(const MechanismParams& params, long k);

// 7 q^2 eta / sigma_k^2, or nullopt when eta exceeds the step's cap.
std::optional<double> per_step_renyi(const MechanismParams& params, long k,
                                     long eta);

// Accumulated Renyi bounds over an integer order grid. Strictly sequential:
// step k may only be accumulated after step k-1.
class PrivacyLedger {
 public:
  explicit PrivacyLedger(long eta_min = 2, long eta_max = 2000);

  long steps_done() const { return steps_done_; }
  long eta_min() const { return eta_min_; }
  long eta_max() const { return eta_max_; }

  // Largest order still usable for conversion (min over accumulated steps
  // of the per-step cap, clamped to the grid).
  long admissible_cap() const { return cap_; }

  // Accumulated total for an order, or nullopt if the order is off the grid
  // or retired.
  std::optional<double> total(long eta) const;

  // Adds step k's cost to every still-admissible order and retires orders
  // whose cap has shrunk below them. Parameters must be identical across
  // all accumulated steps.
  void accumulate_step(const MechanismParams& params, long k);

  // min over admissible eta of total(eta) + ln(1/delta)/(eta - 1).
  double epsilon_at_delta(double delta) const;

  // The order attaining that minimum.
  long minimizing_order(double delta) const;

  // Plain-text key-value snapshot (orders, totals, steps) for resumable
  // runs. Exact round-trip through from_text.
  std::string to_text() const;
  static PrivacyLedger from_text(const std::string& text);

 private:
  double order_coefficient() const;

  long eta_min_;
  long eta_max_;
  long cap_;  // retirement cutoff; orders above it are excluded
  long steps_done_ = 0;
  // Sum over steps of the schedule weight (1 static, k dynamic). The
  // per-order total is then 7 q^2 / sigma_eps^2 * weight_sum * eta, which
  // keeps composition of identical steps exactly additive.
  double weight_sum_ = 0.0;
  std::optional<MechanismParams> params_;
};

// Free-function forms of the ledger operations.
inline void accumulate_step(PrivacyLedger& ledger,
                            const MechanismParams& params, long k) {
  ledger.accumulate_step(params, k);
}
inline double epsilon_at_delta(const PrivacyLedger& ledger, double delta) {
  return ledger.epsilon_at_delta(delta);
}

struct SigmaRequest {
  long n = 0;
  long batch = 0;
  long steps = 0;  // K
  double eps_target = 0.0;
  double delta = 1e-5;
  schedule_mode mode = schedule_mode::static_noise;
};

// Smallest base sigma_eps (to 1e-6 relative) whose composed epsilon after
// K steps is <= eps_target on the given order grid. Throws config_error if
// the target is unreachable even with unbounded noise.
double required_sigma(const SigmaRequest& request, long eta_min = 2,
                      long eta_max = 2000);

struct C1Feasibility {
  double implied_c1 = 0.0;  // eps * n^2 / (B^2 K)
  bool within_bound = false;
};

// Checks a privacy target against the eps <= C1 B^2 K / n^2 sanity bound.
C1Feasibility c1_feasibility(long n, long batch, long steps, double eps,
                             double c1_ceiling = 314.0);

}  // namespace d2p2

#endif  // D2P2_ACCOUNTANT_HPP
