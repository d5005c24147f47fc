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

// Test statistics for randomization inference, evaluated many times on a
// fixed outcome vector with varying assignments.

#ifndef HYPEX_STATISTICS_H_
#define HYPEX_STATISTICS_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "hypex/lock.h"
#include "hypex/randomization.h"

namespace hypex {

enum class Statistic { kWelchT, kRegressionT, kPairedT, kBayesT };

std::string_view to_string(Statistic s);
Statistic statistic_from_string(std::string_view s);

struct StatisticOptions {
  // Regressors for regression_t and bayes_t besides the intercept.
  std::vector<Covariate> covariates = {Covariate::kAge, Covariate::kHeight, Covariate::kSex};
  bool bayes_fast = true;
  int bayes_draws = 1000;  // sampled mode only
  std::uint64_t bayes_seed = 0;
};

// All statistics are signed (treated minus control) except bayes_t, which is
// non-negative by definition. When the relevant standard error vanishes
// (below 1e-12 of the outcome scale) the value is 0 if the effect estimate
// vanishes too and +-infinity otherwise.
class TestStatistic {
 public:
  // paired_t needs an E scheme; throws ConfigurationError otherwise.
  TestStatistic(const AnalysisDataset& ad, const RandomizationScheme& scheme, Statistic kind,
                const StatisticOptions& options = {});

  Statistic kind() const { return kind_; }

  // Precomputes everything that depends on the outcomes only. The returned
  // evaluator is immutable and safe to call from several threads.
  class Bound {
   public:
    double operator()(const Assignment& w) const;

   private:
    friend class TestStatistic;
    const TestStatistic* owner_ = nullptr;
    std::vector<double> y_;
    double tol_ = 0.0;
    std::vector<double> y_resid_;  // regression_t: y with covariates partialled out
    double resid_ss_ = 0.0;
  };

  Bound bind(std::span<const double> y) const;

 private:
  double welch_t(const Bound& b, const Assignment& w) const;
  double regression_t(const Bound& b, const Assignment& w) const;
  double paired_t(const Bound& b, const Assignment& w) const;
  double bayes_t(const Bound& b, const Assignment& w) const;

  Statistic kind_;
  StatisticOptions options_;
  std::vector<std::pair<int, int>> pairs_;
  Eigen::MatrixXd z_;          // intercept + covariates
  Eigen::MatrixXd ztz_inv_;
};

}  // namespace hypex

#endif  // HYPEX_STATISTICS_H_
