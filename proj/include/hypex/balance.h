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

// Covariate balance diagnostics on a design. Outcome-free by construction.

#ifndef HYPEX_BALANCE_H_
#define HYPEX_BALANCE_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hypex/dataset.h"
#include "hypex/design_types.h"
#include "hypex/terms.h"

namespace hypex {

// (mean_t - mean_c) / sqrt((s_t^2 + s_c^2) / 2). Throws UndefinedSmdError
// when the pooled SD is zero and EmptyInputError when a group is empty.
double standardized_difference(std::span<const double> treated, std::span<const double> control);

// One value per term over the design's retained units.
std::vector<double> smd(const DesignResult& design, const BlindedDataset& ds,
                        const std::vector<Term>& terms);

enum class KsMethod { kAuto, kExact, kAsymptotic };

struct KsResult {
  double statistic = 0.0;  // D
  double p_value = 1.0;
  bool exact = false;
};

// Two-sample Kolmogorov-Smirnov. kAuto picks the exact conditional
// permutation distribution when min(n) <= 30 or the pooled sample has ties,
// else the Kolmogorov limit law at sqrt(mn / (m + n)) * D.
KsResult ks_two_sample(std::span<const double> x, std::span<const double> y,
                       KsMethod method = KsMethod::kAuto);

// Limiting survival function P(K > lambda) of the Kolmogorov distribution.
double kolmogorov_sf(double lambda);

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

// Per group mean (SD) of age and height and the male proportion.
struct BalanceRow {
  int n = 0;
  int n_treated = 0;
  int n_control = 0;
  MeanSd age_treated, age_control;
  MeanSd height_treated, height_control;
  double male_treated = 0.0;
  double male_control = 0.0;
};

BalanceRow balance_table(const DesignResult& design, const BlindedDataset& ds);

struct PairDistanceSummary {
  std::vector<double> distances;  // per pair, in pair order
  double total = 0.0;             // summed in pair order
  double bin_width = 1.0;
  std::vector<int> counts;        // bin k covers [k w, (k + 1) w)
};

// Squared Mahalanobis distances of the design's pairs. The covariance is
// estimated on provenance.support_ids when present, else on the retained
// units. Throws NotApplicableError for pairless designs.
PairDistanceSummary pair_distances(const DesignResult& design, const BlindedDataset& ds,
                                   const std::vector<Covariate>& covariates,
                                   double bin_width = 1.0);

struct CovariateTest {
  std::string covariate;
  std::string test;  // "welch_t" or "two_proportion_z"
  double statistic = 0.0;
  double p_value = 1.0;
};

struct PlausibilityVerdict {
  double alpha = 0.05;
  std::vector<CovariateTest> tests;
  bool plausible = true;  // no p-value below alpha
};

// Welch t for age and height, pooled two-proportion z for sex; unpaired for
// every design.
PlausibilityVerdict assess_plausibility(const DesignResult& design, const BlindedDataset& ds,
                                        double alpha = 0.05);

struct KsRow {
  std::string covariate;
  std::string phase;  // "before" or "after"
  KsResult result;
};

struct BalanceReport {
  std::vector<std::string> terms;
  std::vector<double> smd_before;  // full dataset
  std::vector<double> smd_after;   // design's retained units
  std::vector<KsRow> ks;
  BalanceRow table;
  std::optional<PairDistanceSummary> pair_histogram;
  PlausibilityVerdict verdict;
};

struct BalanceOptions {
  std::vector<Term> terms = balance_terms();
  std::vector<Covariate> distance_covariates = {Covariate::kAge, Covariate::kHeight,
                                                Covariate::kSex};
  double alpha = 0.05;
  double bin_width = 1.0;
  KsMethod ks_method = KsMethod::kAuto;
};

BalanceReport balance_report(const DesignResult& design, const BlindedDataset& ds,
                             const BalanceOptions& options = {});

Json to_json(const BalanceRow& row);
Json to_json(const BalanceReport& report);

}  // namespace hypex

#endif  // HYPEX_BALANCE_H_
