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

#ifndef HYPEX_NUMERICS_RANDOM_H_
#define HYPEX_NUMERICS_RANDOM_H_

#include <cstdint>
#include <limits>

#include <Eigen/Core>

namespace hypex::numerics {

// xoshiro256** generator. The bit stream is fully specified here so that
// draws are reproducible across compilers and standard libraries:
//
//   state seeding: s[k] = splitmix64 outputs k = 0..3 starting from x0, where
//     x0 = seed                                         for Rng(seed)
//     x0 = mix64(seed) ^ mix64(index + 0x632BE59BD9B4E019) for Stream(seed, index)
//   uniform():  (next() >> 11) * 2^-53, in [0, 1)
//   normal():   Box-Muller, z = sqrt(-2 ln(1 - u1)) cos(2 pi u2), one variate
//               per two uniforms (no cached second variate)
//   gamma(a):   Marsaglia-Tsang squeeze for a >= 1; a < 1 via gamma(a+1) U^(1/a)
//
// Satisfies std::uniform_random_bit_generator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  // Independent child stream for task `index`; used so that Monte-Carlo
  // loops give identical results for any number of workers.
  static Rng Stream(std::uint64_t seed, std::uint64_t index);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  double uniform();
  // Uniform integer in [0, n) by rejection; n must be positive.
  std::uint64_t below(std::uint64_t n);
  double normal();
  double gamma(double shape);
  double chi_squared(double df);

 private:
  Rng() = default;
  std::uint64_t s_[4] = {0, 0, 0, 0};
};

std::uint64_t mix64(std::uint64_t x);

// sigma^2 = df * scale / X with X ~ chi^2_df, i.e. 1/sigma^2 ~ chi^2_df / (df * scale).
// Throws DomainError unless df >= 1 and scale > 0.
double draw_scaled_inv_chisq(Rng& rng, double df, double scale);

// Throws DomainError unless `cov` is symmetric positive semi-definite.
Eigen::VectorXd draw_mvnormal(Rng& rng, const Eigen::VectorXd& mean,
                              const Eigen::MatrixXd& cov);

// mean + factor * z for a precomputed factor with factor * factor' = cov.
Eigen::VectorXd draw_mvnormal_factor(Rng& rng, const Eigen::VectorXd& mean,
                                     const Eigen::MatrixXd& factor);

}  // namespace hypex::numerics

#endif  // HYPEX_NUMERICS_RANDOM_H_
