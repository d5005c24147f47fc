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

// Analysis-stage estimators and randomization inference.

#ifndef HYPEX_INFERENCE_H_
#define HYPEX_INFERENCE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hypex/bayes.h"
#include "hypex/design_types.h"
#include "hypex/lock.h"
#include "hypex/randomization.h"
#include "hypex/statistics.h"

namespace hypex {

struct InferenceResult {
  std::string method;
  std::string interval_kind;  // "confidence", "fiducial" or "posterior"
  std::optional<ExperimentKind> experiment;
  int n = 0;
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  std::optional<double> standard_error;
  std::optional<double> df;
  std::optional<double> statistic;
  std::optional<double> p_value;
  int draws = 0;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> warnings;
};

Json to_json(const InferenceResult& r);

// Difference in means with a Welch interval. On a stratified design the
// comparison is weighted (treated 1, control (m_c / m_t)(n_t,s / n_c,s)) and
// uses the weighted least-squares standard error with n - 2 df.
InferenceResult neyman_crude(const AnalysisDataset& ad, double level = 0.95);

// Treatment coefficient in y ~ 1 + W + covariates, t interval with n - p df.
// Weighted on stratified designs as above.
InferenceResult ols_adjusted(const AnalysisDataset& ad,
                             const std::vector<Covariate>& covariates = {Covariate::kAge,
                                                                         Covariate::kHeight,
                                                                         Covariate::kSex},
                             double level = 0.95);

struct InteractionTest {
  std::string term;  // e.g. "treatment*age"
  double estimate = 0.0;
  double standard_error = 0.0;
  double statistic = 0.0;
  double p_value = 1.0;
};

// Adds W*c for each covariate c, one at a time, to the adjusted model.
std::vector<InteractionTest> interaction_screen(
    const AnalysisDataset& ad,
    const std::vector<Covariate>& covariates = {Covariate::kAge, Covariate::kHeight,
                                                Covariate::kSex});

struct FisherOptions {
  Statistic statistic = Statistic::kWelchT;
  StatisticOptions statistic_options;
  double tau0 = 0.0;
  int draws = 10000;
  std::uint64_t seed = 0;
  int threads = 1;
  bool keep_draws = true;
};

struct FisherResult {
  Statistic statistic = Statistic::kWelchT;
  ExperimentKind experiment = ExperimentKind::kD1;
  double tau0 = 0.0;
  double observed = 0.0;  // signed, on y - tau0 * w_obs
  double p_value = 1.0;
  int draws = 0;          // assignments evaluated
  bool exact = false;
  std::uint64_t seed = 0;
  std::optional<double> acceptance_rate;
  std::vector<double> null_draws;
};

Json to_json(const FisherResult& r);

// |t| >= |t_obs| up to a relative 1e-9 slack for rounding in equal statistics.
bool at_least_as_extreme(double t, double t_obs);

// Sharp null Y(1) = Y(0) + tau0. The statistic is evaluated on the implied
// control outcomes y - tau0 * w_obs under the observed and under each
// redrawn assignment; draw k uses Rng::Stream(seed, k).
// p = (1 + #{|T_k| >= |T_obs|}) / (1 + draws).
FisherResult fisher_test(const AnalysisDataset& ad, const RandomizationScheme& scheme,
                         const FisherOptions& options);

// Same, over every assignment the scheme can produce (observed included):
// p = #{|T| >= |T_obs|} / #assignments.
FisherResult fisher_test_exact(const AnalysisDataset& ad, const RandomizationScheme& scheme,
                               Statistic statistic, double tau0 = 0.0,
                               const StatisticOptions& statistic_options = {});

struct FiducialOptions {
  Statistic statistic = Statistic::kWelchT;
  StatisticOptions statistic_options;
  double level = 0.95;
  double grid_lo = -1.0;
  double grid_hi = 0.5;
  double grid_step = 0.01;
  int bisection_steps = 20;
  int draws = 10000;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct FiducialResult {
  double lower = 0.0;
  double upper = 0.0;
  double point = 0.0;  // tau at which the observed statistic is centred
  std::vector<double> grid;
  std::vector<double> p_values;  // parallel to grid
  std::vector<std::string> warnings;
};

// Closure of {tau : p(tau) >= 1 - level}: grid scan (plus the point
// estimate), then bisection on each boundary. One set of assignments is
// drawn and reused for every tau.
FiducialResult fiducial_interval(const AnalysisDataset& ad, const RandomizationScheme& scheme,
                                 const FiducialOptions& options);

// Point estimate matching each statistic: paired mean difference for E,
// regression coefficient for regression_t, difference in means otherwise.
double point_estimate(const AnalysisDataset& ad, const RandomizationScheme& scheme,
                      Statistic statistic, const StatisticOptions& options = {});

Json to_json(const AcePosterior& p);

}  // namespace hypex

#endif  // HYPEX_INFERENCE_H_
