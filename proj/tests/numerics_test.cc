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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "hypex/error.h"
#include "hypex/numerics/assignment.h"
#include "hypex/numerics/linalg.h"
#include "hypex/numerics/random.h"
#include "hypex/numerics/stats.h"

namespace hypex::numerics {
namespace {

using Mat = std::vector<std::vector<double>>;

// Gauss-Jordan with partial pivoting; returns the inverse of a.
Mat invert(Mat a) {
  const std::size_t n = a.size();
  Mat inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    std::swap(a[c], a[piv]);
    std::swap(inv[c], inv[piv]);
    const double d = a[c][c];
    for (std::size_t k = 0; k < n; ++k) {
      a[c][k] /= d;
      inv[c][k] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c];
      for (std::size_t k = 0; k < n; ++k) {
        a[r][k] -= f * a[c][k];
        inv[r][k] -= f * inv[c][k];
      }
    }
  }
  return inv;
}

struct OracleFit {
  std::vector<double> beta;
  std::vector<double> se;
  double s2 = 0.0;
};

// Normal equations with optional weights, solved by Gauss-Jordan.
OracleFit oracle_ls(const Mat& x, const std::vector<double>& y, const std::vector<double>& w = {}) {
  const std::size_t n = x.size(), p = x[0].size();
  Mat xtx(p, std::vector<double>(p, 0.0));
  std::vector<double> xty(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    for (std::size_t a = 0; a < p; ++a) {
      xty[a] += wi * x[i][a] * y[i];
      for (std::size_t b = 0; b < p; ++b) xtx[a][b] += wi * x[i][a] * x[i][b];
    }
  }
  const Mat inv = invert(xtx);
  OracleFit f;
  f.beta.assign(p, 0.0);
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b < p; ++b) f.beta[a] += inv[a][b] * xty[b];
  }
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double fit = 0.0;
    for (std::size_t a = 0; a < p; ++a) fit += x[i][a] * f.beta[a];
    rss += (w.empty() ? 1.0 : w[i]) * (y[i] - fit) * (y[i] - fit);
  }
  f.s2 = rss / static_cast<double>(n - p);
  for (std::size_t a = 0; a < p; ++a) f.se.push_back(std::sqrt(f.s2 * inv[a][a]));
  return f;
}

// Iteratively reweighted least squares for the logit link.
std::vector<double> oracle_irls(const Mat& x, const std::vector<double>& w) {
  const std::size_t n = x.size(), p = x[0].size();
  std::vector<double> beta(p, 0.0);
  for (int it = 0; it < 100; ++it) {
    Mat h(p, std::vector<double>(p, 0.0));
    std::vector<double> g(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double eta = 0.0;
      for (std::size_t a = 0; a < p; ++a) eta += x[i][a] * beta[a];
      const double mu = 1.0 / (1.0 + std::exp(-eta));
      for (std::size_t a = 0; a < p; ++a) {
        g[a] += x[i][a] * (w[i] - mu);
        for (std::size_t b = 0; b < p; ++b) h[a][b] += mu * (1.0 - mu) * x[i][a] * x[i][b];
      }
    }
    const Mat hi = invert(h);
    double step = 0.0;
    for (std::size_t a = 0; a < p; ++a) {
      double d = 0.0;
      for (std::size_t b = 0; b < p; ++b) d += hi[a][b] * g[b];
      beta[a] += d;
      step = std::max(step, std::abs(d));
    }
    if (step < 1e-12) break;
  }
  return beta;
}

Eigen::MatrixXd to_eigen(const Mat& m) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m[0].size()));
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m[0].size(); ++j) out(i, j) = m[i][j];
  }
  return out;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Mat random_design(std::mt19937_64& gen, int n, int p) {
  std::normal_distribution<double> z(0.0, 1.0);
  Mat x(n, std::vector<double>(p, 1.0));
  for (auto& row : x) {
    for (int j = 1; j < p; ++j) row[j] = z(gen) * (1.0 + j);
  }
  return x;
}

std::vector<std::string> labels(int p) {
  std::vector<std::string> out;
  for (int j = 0; j < p; ++j) out.push_back("x" + std::to_string(j));
  return out;
}

TEST(OlsTest, MatchesGaussJordanNormalEquations) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 20 + rep * 3, p = 1 + rep % 5;
    const Mat x = random_design(gen, n, p);
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) y[i] = 0.5 * x[i][0] - (p > 1 ? 0.3 * x[i][p - 1] : 0.0) + z(gen);
    const auto oracle = oracle_ls(x, y);
    const auto fit = solve_ols(DesignMatrix(to_eigen(x), labels(p)), to_eigen(y));
    ASSERT_EQ(fit.df, n - p);
    EXPECT_NEAR(fit.residual_variance, oracle.s2, 1e-10 * std::max(1.0, oracle.s2));
    for (int j = 0; j < p; ++j) {
      EXPECT_NEAR(fit.coefficients[j], oracle.beta[j], 1e-9);
      EXPECT_NEAR(fit.standard_error(j), oracle.se[j], 1e-9);
    }
  }
}

TEST(OlsTest, ResidualsAreOrthogonalToColumns) {
  std::mt19937_64 gen(12);
  std::normal_distribution<double> z(0.0, 1.0);
  const Mat x = random_design(gen, 60, 4);
  std::vector<double> y(60);
  for (auto& v : y) v = z(gen) * 3.0 + 10.0;
  const auto fit = solve_ols(DesignMatrix(to_eigen(x), labels(4)), to_eigen(y));
  const Eigen::VectorXd r = to_eigen(y) - fit.fitted;
  const Eigen::VectorXd xr = to_eigen(x).transpose() * r;
  EXPECT_LT(xr.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(OlsTest, RankDeficientDesignThrows) {
  Mat x = {{1, 1, 2}, {1, 2, 4}, {1, 3, 6}, {1, 4, 8}, {1, 5, 10}};
  EXPECT_THROW(solve_ols(DesignMatrix(to_eigen(x), labels(3)), to_eigen({1, 2, 3, 4, 6})),
               SingularMatrixError);
}

TEST(WlsTest, MatchesWeightedNormalEquations) {
  std::mt19937_64 gen(13);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  const Mat x = random_design(gen, 40, 3);
  std::vector<double> y(40), w(40);
  for (int i = 0; i < 40; ++i) {
    y[i] = 1.0 + x[i][1] + z(gen);
    w[i] = u(gen);
  }
  const auto oracle = oracle_ls(x, y, w);
  const auto fit = solve_wls(DesignMatrix(to_eigen(x), labels(3)), to_eigen(y), to_eigen(w));
  for (int j = 0; j < 3; ++j) {
    EXPECT_NEAR(fit.coefficients[j], oracle.beta[j], 1e-9);
    EXPECT_NEAR(fit.standard_error(j), oracle.se[j], 1e-9);
  }
}

TEST(WlsTest, IntegerWeightsEqualReplicatedRows) {
  const Mat x = {{1, 0.5}, {1, 1.5}, {1, 2.0}, {1, 3.5}, {1, 4.0}};
  const std::vector<double> y = {1.0, 2.2, 2.1, 4.5, 4.4};
  const std::vector<double> w = {1, 3, 2, 1, 2};
  Mat xr;
  std::vector<double> yr;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (int k = 0; k < static_cast<int>(w[i]); ++k) {
      xr.push_back(x[i]);
      yr.push_back(y[i]);
    }
  }
  const auto a = solve_wls(DesignMatrix(to_eigen(x), labels(2)), to_eigen(y), to_eigen(w));
  const auto b = solve_ols(DesignMatrix(to_eigen(xr), labels(2)), to_eigen(yr));
  EXPECT_NEAR(a.coefficients[0], b.coefficients[0], 1e-12);
  EXPECT_NEAR(a.coefficients[1], b.coefficients[1], 1e-12);
}

TEST(WlsTest, RejectsNonPositiveWeights) {
  const Mat x = {{1, 0}, {1, 1}, {1, 2}};
  EXPECT_THROW(solve_wls(DesignMatrix(to_eigen(x), labels(2)), to_eigen({1, 2, 3}),
                         to_eigen({1, 0, 1})),
               DomainError);
}

TEST(LogisticTest, MatchesIrlsOracle) {
  std::mt19937_64 gen(21);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 200, p = 2 + rep % 3;
    const Mat x = random_design(gen, n, p);
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) {
      const double eta = -0.5 + 0.4 * x[i][1];
      w[i] = u(gen) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
    }
    const auto oracle = oracle_irls(x, w);
    const auto fit = logistic_newton(DesignMatrix(to_eigen(x), labels(p)), to_eigen(w));
    for (int j = 0; j < p; ++j) EXPECT_NEAR(fit.coefficients[j], oracle[j], 1e-7);
    double ll = 0.0;
    for (int i = 0; i < n; ++i) {
      double eta = 0.0;
      for (int j = 0; j < p; ++j) eta += x[i][j] * oracle[j];
      ll += w[i] * eta - std::log1p(std::exp(eta));
    }
    EXPECT_NEAR(fit.log_likelihood, ll, 1e-7);
  }
}

TEST(LogisticTest, CompleteSeparationIsReported) {
  const Mat x = {{1, 1}, {1, 2}, {1, 3}, {1, 4}, {1, 5}, {1, 6}};
  EXPECT_THROW(logistic_newton(DesignMatrix(to_eigen(x), labels(2)), to_eigen({0, 0, 0, 1, 1, 1})),
               SeparationError);
}

TEST(LrtTest, StatisticIsTwiceLogLikelihoodGap) {
  std::mt19937_64 gen(31);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 400;
  Mat full(n), reduced(n);
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    const double a = z(gen);
    full[i] = {1.0, a, a * a};
    reduced[i] = {1.0, a};
    w[i] = u(gen) < 1.0 / (1.0 + std::exp(-(-1.0 + 0.3 * a + 0.8 * a * a))) ? 1.0 : 0.0;
  }
  const auto f = logistic_newton(DesignMatrix(to_eigen(full), labels(3)), to_eigen(w));
  const auto r = logistic_newton(DesignMatrix(to_eigen(reduced), labels(2)), to_eigen(w));
  const auto lrt = lrt_compare(f, r, 1);
  EXPECT_NEAR(lrt.statistic, 2.0 * (f.log_likelihood - r.log_likelihood), 1e-12);
  // A strong quadratic term is detected.
  EXPECT_LT(lrt.p_value, 1e-4);
  EXPECT_NEAR(chi_squared_sf(lrt.statistic, 1), lrt.p_value, 1e-15);
}

// Exhaustive search over injective row -> column maps.
double brute_force_assignment(const Eigen::MatrixXd& c) {
  const int nr = static_cast<int>(c.rows()), nc = static_cast<int>(c.cols());
  std::vector<int> cols(nc);
  std::iota(cols.begin(), cols.end(), 0);
  double best = INFINITY;
  do {
    double total = 0.0;
    for (int i = 0; i < nr; ++i) total += c(i, cols[i]);
    best = std::min(best, total);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

TEST(AssignmentTest, EqualsBruteForceOn200RandomInstances) {
  std::mt19937_64 gen(41);
  std::uniform_int_distribution<int> rows(1, 5);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::uniform_int_distribution<int> small(0, 3);
  for (int rep = 0; rep < 200; ++rep) {
    const int nr = rows(gen);
    const int nc = std::uniform_int_distribution<int>(nr, 7)(gen);
    Eigen::MatrixXd c(nr, nc);
    for (int i = 0; i < nr; ++i) {
      for (int j = 0; j < nc; ++j) c(i, j) = rep % 4 == 0 ? small(gen) : u(gen);  // ties too
    }
    const auto sol = assignment_min_cost(c);
    ASSERT_EQ(static_cast<int>(sol.column_of_row.size()), nr);
    std::vector<int> seen = sol.column_of_row;
    std::sort(seen.begin(), seen.end());
    EXPECT_EQ(std::adjacent_find(seen.begin(), seen.end()), seen.end());
    double total = 0.0;
    for (int i = 0; i < nr; ++i) total += c(i, sol.column_of_row[i]);
    EXPECT_DOUBLE_EQ(sol.total_cost, total);
    EXPECT_NEAR(sol.total_cost, brute_force_assignment(c), 1e-9) << "instance " << rep;
  }
}

TEST(AssignmentTest, MoreRowsThanColumnsIsInfeasible) {
  EXPECT_THROW(assignment_min_cost(Eigen::MatrixXd::Ones(3, 2)), InfeasibleError);
}

TEST(QuantileTest, OrderStatisticsAtGridPoints) {
  const std::vector<double> x = {9, 2, 7, 4, 5, 1, 8};
  std::vector<double> s = x;
  std::sort(s.begin(), s.end());
  for (std::size_t k = 0; k < s.size(); ++k) {
    EXPECT_DOUBLE_EQ(quantile(x, static_cast<double>(k) / (s.size() - 1)), s[k]);
  }
  // Halfway between grid points interpolates linearly.
  EXPECT_DOUBLE_EQ(quantile(x, 0.5 / 6.0), 1.5);
  EXPECT_DOUBLE_EQ(quantile(x, 0.25), 3.0);
}

TEST(QuantileTest, MonotoneInP) {
  const std::vector<double> x = {3.2, -1, 4, 4, 0.5, 10, 2};
  double prev = -INFINITY;
  for (int k = 0; k <= 100; ++k) {
    const double q = quantile(x, k / 100.0);
    EXPECT_GE(q, prev);
    prev = q;
  }
}

// Student t density integrated by composite Simpson's rule.
double t_cdf_by_quadrature(double t, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI);
  auto f = [&](double x) { return c * std::pow(1.0 + x * x / df, -(df + 1) / 2); };
  const int n = 20000;
  const double h = std::abs(t) / n;
  double s = f(0) + f(std::abs(t));
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  const double half = s * h / 3.0;
  return t >= 0 ? 0.5 + half : 0.5 - half;
}

TEST(DistributionTest, StudentTAgainstQuadrature) {
  for (double df : {3.0, 7.5, 30.0, 120.0}) {
    for (double t : {0.3, 1.0, 2.1, 3.7}) {
      const double p = 2.0 * (1.0 - t_cdf_by_quadrature(t, df));
      EXPECT_NEAR(student_t_two_sided_p(t, df), p, 1e-9);
      EXPECT_NEAR(student_t_two_sided_p(-t, df), p, 1e-9);
    }
    const double q = student_t_quantile(df, 0.975);
    EXPECT_NEAR(t_cdf_by_quadrature(q, df), 0.975, 1e-9);
  }
}

TEST(DistributionTest, ClosedForms) {
  for (double x : {0.1, 1.0, 5.0}) EXPECT_NEAR(chi_squared_sf(x, 2), std::exp(-x / 2), 1e-14);
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-15);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
}

TEST(WelchTest, MatchesHandFormula) {
  const std::vector<double> t = {2.1, 2.5, 3.0, 2.8}, c = {1.0, 1.8, 1.2, 2.2, 1.5};
  const auto w = welch(t, c);
  const double vt = sample_variance(t) / 4, vc = sample_variance(c) / 5;
  EXPECT_NEAR(w.difference, mean(t) - mean(c), 1e-14);
  EXPECT_NEAR(w.standard_error, std::sqrt(vt + vc), 1e-14);
  EXPECT_NEAR(w.df, (vt + vc) * (vt + vc) / (vt * vt / 3 + vc * vc / 4), 1e-12);
}

TEST(RngTest, StreamsAreReproducibleAndDistinct) {
  Rng a = Rng::Stream(5, 17), b = Rng::Stream(5, 17), c = Rng::Stream(5, 18), d = Rng::Stream(6, 17);
  for (int i = 0; i < 100; ++i) {
    const auto va = a();
    EXPECT_EQ(va, b());
    EXPECT_NE(va, c());
    EXPECT_NE(va, d());
  }
}

TEST(RngTest, BelowIsUniform) {
  Rng rng(3);
  const int k = 7, n = 70000;
  std::vector<int> counts(k, 0);
  for (int i = 0; i < n; ++i) ++counts[rng.below(k)];
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - n / k) * (c - n / k) / static_cast<double>(n / k);
  EXPECT_GT(chi_squared_sf(chi2, k - 1), 1e-3);
}

TEST(RngTest, VariateMoments) {
  Rng rng(4);
  const int n = 200000;
  std::vector<double> z(n), g(n), u(n);
  for (int i = 0; i < n; ++i) {
    z[i] = rng.normal();
    g[i] = rng.chi_squared(5.0);
    u[i] = rng.uniform();
  }
  EXPECT_NEAR(mean(z), 0.0, 0.01);
  EXPECT_NEAR(sample_variance(z), 1.0, 0.015);
  EXPECT_NEAR(mean(g), 5.0, 0.03);
  EXPECT_NEAR(sample_variance(g), 10.0, 0.2);
  EXPECT_GE(*std::min_element(u.begin(), u.end()), 0.0);
  EXPECT_LT(*std::max_element(u.begin(), u.end()), 1.0);
}

TEST(MahalanobisTest, InvariantUnderAffineMaps) {
  std::mt19937_64 gen(51);
  std::normal_distribution<double> z(0.0, 1.0);
  const int n = 50;
  Eigen::MatrixXd x(n, 3);
  for (int i = 0; i < n; ++i) x.row(i) << z(gen), 2 * z(gen) + 1, z(gen) - 0.5 * x(i, 0);
  Eigen::Matrix3d a;
  a << 2, 0.3, 0, -1, 1, 0.5, 0.2, 0, 3;
  const Eigen::RowVector3d shift(5, -2, 7);
  const Eigen::MatrixXd y = (x * a.transpose()).rowwise() + shift;
  const auto sx = CovarianceMatrix::FromSample(x, {"a", "b", "c"});
  const auto sy = CovarianceMatrix::FromSample(y, {"a", "b", "c"});
  for (int i = 0; i < 10; ++i) {
    const double dx = mahalanobis_sq(x.row(i).transpose(), x.row(i + 20).transpose(), sx);
    const double dy = mahalanobis_sq(y.row(i).transpose(), y.row(i + 20).transpose(), sy);
    EXPECT_NEAR(dx, dy, 1e-9 * std::max(1.0, dx));
  }
}

TEST(MahalanobisTest, WellConditionedCovarianceIsPositiveDefinite) {
  Eigen::Matrix3d s;
  s << 12.39, 21.12, 0.08, 21.12, 42.84, 0.50, 0.08, 0.50, 0.25;
  const CovarianceMatrix c(s, {"age", "height", "sex"});
  EXPECT_TRUE(c.positive_definite());
  EXPECT_NO_THROW(c.cholesky());
  Eigen::Matrix2d singular;
  singular << 1, 2, 2, 4;
  EXPECT_THROW(CovarianceMatrix(singular, {"a", "b"}).cholesky(), SingularMatrixError);
}

}  // namespace
}  // namespace hypex::numerics
