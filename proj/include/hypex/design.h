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

// Design-stage methods. Everything here sees covariates and treatment only.

#ifndef HYPEX_DESIGN_H_
#define HYPEX_DESIGN_H_

#include <map>
#include <optional>
#include <vector>

#include "hypex/dataset.h"
#include "hypex/design_types.h"
#include "hypex/numerics/linalg.h"
#include "hypex/terms.h"

namespace hypex {

DesignResult design_none(const BlindedDataset& ds);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// Units whose sex equals `sex` (any sex when unset) must fall inside every
// closed range listed.
struct TrimRule {
  std::optional<int> sex;
  std::map<Covariate, Range> ranges;
};

// Girls: age [10, 18], height [60, 69]. Boys: age [9, 18], height [58, 72].
std::vector<TrimRule> default_trim_rules();

// Throws ConfigurationError when rules overlap, a range is reversed, or a
// unit matches no rule.
DesignResult trim_by_ranges(const BlindedDataset& ds, const std::vector<TrimRule>& rules);

struct BinSpec {
  Covariate covariate = Covariate::kAge;
  // Interior cutpoints, strictly increasing. Bins are right-closed, the
  // first one also closed on the left: (-inf, c1], (c1, c2], ..., (ck, inf).
  std::vector<double> cutpoints;
};

struct StratifyOptions {
  std::vector<BinSpec> bins;
  std::vector<Covariate> exact;
};

// Sturges' rule on `x`: ceil(log2(n) + 1) equal-width bins over [min, max];
// returns the interior cutpoints.
std::vector<double> sturges_cutpoints(std::span<const double> x);

// Sturges bins for age and height on the pooled sample, sex matched exactly.
StratifyOptions default_stratify_options(const BlindedDataset& ds);

// Throws ConfigurationError on non-increasing cutpoints, EmptyDesignError when
// no stratum holds both groups.
DesignResult coarsened_stratify(const BlindedDataset& ds, const StratifyOptions& options);

struct PropensityModel {
  numerics::FitResult fit;
  std::vector<std::string> terms;  // selected candidate
  std::size_t selected = 0;        // index into the candidate list
  // LRT of candidate k+1 against candidate k, for each comparison made.
  std::vector<numerics::LrtResult> tests;
  std::vector<int> ids;        // dataset order
  std::vector<double> scores;  // parallel to ids
  double score_sd = 0.0;       // sample SD over all units

  double score(int id) const;
};

// {age, height, sex} then {age, age^2, height, height^2, sex, sex*age, sex*height}.
std::vector<std::vector<Term>> default_propensity_candidates();

// Candidates must be nested in order. Walks the sequence and keeps the first
// candidate that the LRT against the next one does not reject at `alpha`.
PropensityModel fit_propensity(const BlindedDataset& ds,
                               const std::vector<std::vector<Term>>& candidates,
                               double alpha = 0.05);

struct OverlapOptions {
  bool iterate = false;  // repeat until stable instead of a single pass
};

// Drops treated units outside [min, max] of the control scores and controls
// outside [min, max] of the treated scores, both computed before any unit is
// dropped. Throws EmptyDesignError when a group empties.
DesignResult discard_nonoverlap(const BlindedDataset& ds, const PropensityModel& pm,
                                const OverlapOptions& options = {});

// Greedy 1:1 matching without replacement. Treated units go in descending
// score order (ties: smaller id), each taking the nearest unused control
// (ties: smaller id) if within caliper_sd_multiple * pm.score_sd. Produces
// experiments D.1 and D.2 (with `criterion`).
DesignResult caliper_match(const BlindedDataset& ds, const DesignResult& overlap,
                           const PropensityModel& pm, double caliper_sd_multiple,
                           const AcceptanceCriterion& criterion = AcceptanceCriterion::Default());

// Covariate vector used for Mahalanobis distances.
Eigen::VectorXd covariate_vector(const UnitRecord& u, const std::vector<Covariate>& covariates);

// Covariance of `covariates` over `ids` (n - 1 denominator).
numerics::CovarianceMatrix covariate_covariance(const BlindedDataset& ds, std::span<const int> ids,
                                                const std::vector<Covariate>& covariates);

// Minimum total squared-Mahalanobis pairing of every retained treated unit
// with a distinct retained control, covariance estimated on all retained units
// of `overlap`. Produces experiment E.
DesignResult optimal_match(const BlindedDataset& ds, const DesignResult& overlap,
                           const std::vector<Covariate>& covariates);

}  // namespace hypex

#endif  // HYPEX_DESIGN_H_
