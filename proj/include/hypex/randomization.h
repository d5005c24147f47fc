// Copyright 2026 The hypex Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Assignment mechanisms of the hypothetical experiments, used to redraw
// treatment vectors for randomization inference.

#ifndef HYPEX_RANDOMIZATION_H_
#define HYPEX_RANDOMIZATION_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "hypex/design_types.h"
#include "hypex/lock.h"
#include "hypex/numerics/random.h"

namespace hypex {

// One entry per analysis unit, in AnalysisDataset::units() order.
using Assignment = std::vector<std::uint8_t>;

inline constexpr int kCriterionProbeTries = 100000;
inline constexpr double kMinAcceptanceRate = 1e-4;

class RandomizationScheme {
 public:
  // Builds the mechanism of experiment `kind` on the analysis units:
  //   A, B, D.1  complete randomization with the observed group sizes
  //   C          complete randomization within each stratum
  //   D.2        complete randomization, rejected until the criterion holds
  //   E          one fair coin per pair
  // The design must instantiate `kind`. For D.2 the acceptance rate is
  // estimated from kCriterionProbeTries draws of stream (seed, 2^63) and
  // CriterionTooTightError is thrown below kMinAcceptanceRate.
  static RandomizationScheme Make(const AnalysisDataset& ad, ExperimentKind kind,
                                  std::uint64_t seed = 0);

  ExperimentKind kind() const { return kind_; }
  std::size_t size() const { return observed_.size(); }
  int n_treated() const { return n_treated_; }
  const Assignment& observed() const { return observed_; }
  // Positions (treated member, control member) of each pair under the
  // observed assignment. Empty unless kind() == E.
  const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }
  const std::vector<std::vector<int>>& strata() const { return strata_; }

  // Draws one assignment; deterministic given the rng state.
  Assignment draw(numerics::Rng& rng) const;
  // True unless a D.2 criterion rejects `w`.
  bool accepts(const Assignment& w) const;
  // D.2 only: share of unrestricted draws accepted during the probe.
  std::optional<double> acceptance_rate() const { return acceptance_rate_; }
  bool observed_accepted() const { return accepts(observed_); }

  // Calls `visit` on every assignment the mechanism can produce (D.2
  // filtered by the criterion). Throws DomainError above `limit` candidates.
  void enumerate(const std::function<void(const Assignment&)>& visit,
                 std::uint64_t limit = 5'000'000) const;

 private:
  RandomizationScheme() = default;
  Assignment draw_unrestricted(numerics::Rng& rng) const;

  ExperimentKind kind_ = ExperimentKind::kA;
  Assignment observed_;
  int n_treated_ = 0;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<std::vector<int>> strata_;  // positions; one stratum for complete designs
  std::vector<int> stratum_treated_;

  // D.2 criterion, one row per caliper.
  std::vector<std::vector<double>> criterion_values_;
  std::vector<double> criterion_scale_;  // sd or 1 for binary
  std::vector<double> criterion_threshold_;
  std::vector<double> criterion_total_;
  std::optional<double> acceptance_rate_;
};

}  // namespace hypex

#endif  // HYPEX_RANDOMIZATION_H_
