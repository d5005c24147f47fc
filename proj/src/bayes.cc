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

#include "hypex/bayes.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

#include "hypex/error.h"
#include "hypex/numerics/linalg.h"
#include "hypex/numerics/random.h"
#include "hypex/numerics/stats.h"
#include "hypex/parallel.h"

namespace hypex {
namespace {

struct ArmPosterior {
  Eigen::VectorXd beta_hat;
  Eigen::MatrixXd v_factor;  // lower Cholesky factor of (X'X)^-1
  double s2 = 0.0;
  double nu = 0.0;
};

ArmPosterior fit_arm(const Eigen::MatrixXd& x, std::span<const double> y, const Assignment& w,
                     std::uint8_t arm, const char* name) {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == arm) rows.push_back(static_cast<Eigen::Index>(i));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = x.cols();
  if (n - p < 2) {
    throw DomainError(std::string("posterior needs n - p >= 2 in the ") + name + " arm (n = " +
                      std::to_string(n) + ", p = " + std::to_string(p) + ")");
  }
  Eigen::MatrixXd xa(n, p);
  Eigen::VectorXd ya(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    xa.row(r) = x.row(rows[r]);
    ya[r] = y[static_cast<std::size_t>(rows[r])];
  }
  std::vector<std::string> labels(static_cast<std::size_t>(p), "x");
  const auto fit = numerics::solve_ols(numerics::DesignMatrix(xa, labels), ya);
  if (!(fit.residual_variance > 0.0)) {
    throw DegeneratePosteriorError(std::string("the ") + name +
                                   " arm is fitted exactly; residual variance is zero");
  }
  ArmPosterior arm_post;
  arm_post.beta_hat = fit.coefficients;
  arm_post.s2 = fit.residual_variance;
  arm_post.nu = static_cast<double>(fit.df);
  const Eigen::MatrixXd v = fit.covariance / fit.residual_variance;
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (v + v.transpose()));
  if (llt.info() != Eigen::Success) throw SingularMatrixError("arm (X'X)^-1 is not positive definite");
  arm_post.v_factor = llt.matrixL();
  return arm_post;
}

// Returns (sigma, beta) for one arm, consuming 1 chi-square and p normals.
std::pair<double, Eigen::VectorXd> draw_arm(numerics::Rng& rng, const ArmPosterior& a) {
  const double sigma2 = numerics::draw_scaled_inv_chisq(rng, a.nu, a.s2);
  const double sigma = std::sqrt(sigma2);
  Eigen::VectorXd z(a.beta_hat.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = rng.normal();
  return {sigma, a.beta_hat + sigma * (a.v_factor * z)};
}

}  // namespace

AcePosterior AcePosterior::FromDraws(std::vector<double> draws, std::uint64_t seed) {
  if (draws.empty()) throw DomainError("posterior needs at least one draw");
  AcePosterior p;
  p.seed = seed;
  p.mean = numerics::mean(draws);
  p.sd = numerics::sample_sd(draws);
  std::vector<double> sorted = draws;
  std::sort(sorted.begin(), sorted.end());
  p.lower = numerics::quantile_sorted(sorted, 0.025);
  p.upper = numerics::quantile_sorted(sorted, 0.975);
  p.draws = std::move(draws);
  return p;
}

Eigen::MatrixXd regressor_matrix(std::span<const UnitRecord> units,
                                 const std::vector<Covariate>& covariates) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(units.size()),
                    static_cast<Eigen::Index>(covariates.size() + 1));
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x(r, 0) = 1.0;
    for (std::size_t k = 0; k < covariates.size(); ++k) {
      x(r, static_cast<Eigen::Index>(k + 1)) = units[i].value(covariates[k]);
    }
  }
  return x;
}

AcePosterior ace_posterior(const Eigen::MatrixXd& x, std::span<const double> y,
                           const Assignment& w, int draws, std::uint64_t seed, int threads) {
  if (draws < 1) throw ConfigurationError("posterior draw count must be positive");
  if (static_cast<std::size_t>(x.rows()) != y.size() || y.size() != w.size()) {
    throw DomainError("posterior inputs have mismatched lengths");
  }
  const ArmPosterior treated = fit_arm(x, y, w, 1, "treated");
  const ArmPosterior control = fit_arm(x, y, w, 0, "control");
  const double n = static_cast<double>(y.size());

  std::vector<double> out(static_cast<std::size_t>(draws));
  parallel_for(out.size(), threads, [&](std::size_t k) {
    numerics::Rng rng = numerics::Rng::Stream(seed, k);
    const auto [sigma_t, beta_t] = draw_arm(rng, treated);
    const auto [sigma_c, beta_c] = draw_arm(rng, control);
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      if (w[i]) {
        const double y0 = x.row(r).dot(beta_c) + sigma_c * rng.normal();
        total += y[i] - y0;
      } else {
        const double y1 = x.row(r).dot(beta_t) + sigma_t * rng.normal();
        total += y1 - y[i];
      }
    }
    out[k] = total / n;
  });
  return AcePosterior::FromDraws(std::move(out), seed);
}

AcePosterior ace_posterior(const AnalysisDataset& ad, const AceOptions& options) {
  const auto units = ad.units();
  Assignment w(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) w[i] = static_cast<std::uint8_t>(units[i].treatment);
  return ace_posterior(regressor_matrix(units, options.covariates), ad.outcomes(), w,
                       options.draws, options.seed, options.threads);
}

double posterior_t(const AcePosterior& p) {
  if (!(p.sd > 0.0)) throw DegeneratePosteriorError("posterior SD of the ACE is zero");
  return std::abs(p.mean) / p.sd;
}

AceMoments ace_moments(const Eigen::MatrixXd& x, std::span<const double> y, const Assignment& w) {
  const Eigen::Index p = x.cols();
  const std::size_t n = y.size();
  double centre = 0.0;
  for (double v : y) centre += v;
  centre /= static_cast<double>(n);

  Eigen::MatrixXd s_xx[2] = {Eigen::MatrixXd::Zero(p, p), Eigen::MatrixXd::Zero(p, p)};
  Eigen::VectorXd s_xy[2] = {Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(p)};
  Eigen::VectorXd s_x[2] = {Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(p)};
  double s_y[2] = {0.0, 0.0};
  double s_yy[2] = {0.0, 0.0};
  double count[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const int a = w[i] ? 1 : 0;
    const auto row = x.row(static_cast<Eigen::Index>(i)).transpose();
    const double yi = y[i] - centre;
    s_xx[a].selfadjointView<Eigen::Lower>().rankUpdate(row);
    s_xy[a] += yi * row;
    s_x[a] += row;
    s_y[a] += yi;
    s_yy[a] += yi * yi;
    count[a] += 1.0;
  }
  Eigen::VectorXd beta[2];
  double e_sigma2[2];
  Eigen::LLT<Eigen::MatrixXd> llt[2];
  for (int a = 0; a < 2; ++a) {
    const double nu = count[a] - static_cast<double>(p);
    if (!(nu > 2.0)) {
      throw DegeneratePosteriorError("analytic posterior moments need n - p > 2 in both arms");
    }
    const Eigen::MatrixXd full = s_xx[a].selfadjointView<Eigen::Lower>();
    llt[a].compute(full);
    if (llt[a].info() != Eigen::Success) throw SingularMatrixError("arm X'X is singular");
    beta[a] = llt[a].solve(s_xy[a]);
    const double rss = std::max(0.0, s_yy[a] - s_xy[a].dot(beta[a]));
    const double s2 = rss / nu;
    e_sigma2[a] = nu * s2 / (nu - 2.0);
  }
  // Treated arm imputes Y(1) for controls, control arm imputes Y(0) for treated.
  const double nn = static_cast<double>(n);
  AceMoments m;
  m.mean = (s_y[1] - s_y[0] + s_x[0].dot(beta[1]) - s_x[1].dot(beta[0])) / nn;
  const double q_t = s_x[0].dot(llt[1].solve(s_x[0]));
  const double q_c = s_x[1].dot(llt[0].solve(s_x[1]));
  const double var = (e_sigma2[1] * (q_t + count[0]) + e_sigma2[0] * (q_c + count[1])) / (nn * nn);
  m.sd = std::sqrt(std::max(0.0, var));
  return m;
}

double bayes_t_statistic(const Eigen::MatrixXd& x, std::span<const double> y, const Assignment& w,
                         bool fast, int sampled_draws, std::uint64_t seed) {
  if (fast) {
    const AceMoments m = ace_moments(x, y, w);
    if (!(m.sd > 0.0)) throw DegeneratePosteriorError("posterior SD of the ACE is zero");
    return std::abs(m.mean) / m.sd;
  }
  return posterior_t(ace_posterior(x, y, w, sampled_draws, seed, 1));
}

}  // namespace hypex
