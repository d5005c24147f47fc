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

#ifndef HYPEX_NUMERICS_STATS_H_
#define HYPEX_NUMERICS_STATS_H_

#include <span>
#include <vector>

namespace hypex::numerics {

double mean(std::span<const double> x);

// Sample variance with the n - 1 denominator. Returns 0 for n == 1.
double sample_variance(std::span<const double> x);
double sample_sd(std::span<const double> x);

// Linear-interpolation quantile (Hyndman-Fan type 7) of an unsorted sample.
double quantile(std::span<const double> x, double p);
// Same, for a sample that is already sorted ascending.
double quantile_sorted(std::span<const double> sorted, double p);

// Distribution helpers (thin wrappers over Boost.Math).
double normal_cdf(double z);
double student_t_quantile(double df, double p);
// Two-sided p-value of a t statistic with df degrees of freedom.
double student_t_two_sided_p(double t, double df);
double chi_squared_sf(double x, double df);

struct WelchSummary {
  double difference = 0.0;  // mean_t - mean_c
  double standard_error = 0.0;
  double df = 0.0;  // Welch-Satterthwaite
};

// Requires both samples to have at least two elements.
WelchSummary welch(std::span<const double> treated,
                   std::span<const double> control);

}  // namespace hypex::numerics

#endif  // HYPEX_NUMERICS_STATS_H_
