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

// Finite-population posterior of the average causal effect by imputing the
// missing potential outcomes from two independent normal linear models
// (one per arm) under the flat prior p(beta, sigma^2) ~ 1 / sigma^2.
//
// Per draw and arm a, with nu = n_a - p and s^2 the arm's residual mean
// square:  sigma^2 = nu s^2 / chi^2_nu,  beta ~ N(beta_hat, (X'X)^-1 sigma^2).
// Each missing outcome is x_i beta + sigma z_i and the ACE draw is the mean of
// Y(1) - Y(0) over all units, observed values kept where observed.

#ifndef HYPEX_BAYES_H_
#define HYPEX_BAYES_H_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "hypex/dataset.h"
#include "hypex/lock.h"
#include "hypex/randomization.h"

namespace hypex {

struct AcePosterior {
  std::vector<double> draws;
  double mean = 0.0;
  double sd = 0.0;     // n - 1 denominator
  double lower = 0.0;  // type-7 2.5% quantile
  double upper = 0.0;  // type-7 97.5% quantile
  std::uint64_t seed = 0;

  static AcePosterior FromDraws(std::vector<double> draws, std::uint64_t seed = 0);
};

struct AceOptions {
  // Regressors besides the intercept; empty gives the no-covariate model.
  std::vector<Covariate> covariates = {Covariate::kAge, Covariate::kHeight, Covariate::kSex};
  int draws = 10000;
  std::uint64_t seed = 0;
  int threads = 1;
};

// Intercept plus `covariates`, rows in AnalysisDataset::units() order.
Eigen::MatrixXd regressor_matrix(std::span<const UnitRecord> units,
                                 const std::vector<Covariate>& covariates);

// Throws DomainError when an arm has nu = n_a - p < 2, SingularMatrixError on
// a rank-deficient arm and DegeneratePosteriorError when an arm fits exactly.
AcePosterior ace_posterior(const AnalysisDataset& ad, const AceOptions& options = {});

// Same model on raw arrays: `x` includes the intercept column.
AcePosterior ace_posterior(const Eigen::MatrixXd& x, std::span<const double> y,
                           const Assignment& w, int draws, std::uint64_t seed, int threads = 1);

// |mean| / sd. Throws DegeneratePosteriorError when sd is zero.
double posterior_t(const AcePosterior& p);

struct AceMoments {
  double mean = 0.0;
  double sd = 0.0;
};

// Exact posterior mean and SD of the ACE under the same model, marginalising
// beta and sigma^2 in each arm (needs nu > 2 in both arms).
AceMoments ace_moments(const Eigen::MatrixXd& x, std::span<const double> y, const Assignment& w);

// The mixed statistic |posterior mean| / posterior SD on a candidate
// assignment. `fast` uses ace_moments; otherwise ace_posterior with
// `sampled_draws` draws from `seed`.
double bayes_t_statistic(const Eigen::MatrixXd& x, std::span<const double> y, const Assignment& w,
                         bool fast = true, int sampled_draws = 1000, std::uint64_t seed = 0);

}  // namespace hypex

#endif  // HYPEX_BAYES_H_
