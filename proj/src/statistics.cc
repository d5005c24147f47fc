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

#include "hypex/statistics.h"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "hypex/bayes.h"
#include "hypex/error.h"

namespace hypex {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double degenerate(double estimate, double tol) {
  if (std::abs(estimate) <= tol) return 0.0;
  return estimate > 0.0 ? kInf : -kInf;
}

}  // namespace

std::string_view to_string(Statistic s) {
  switch (s) {
    case Statistic::kWelchT: return "welch_t";
    case Statistic::kRegressionT: return "regression_t";
    case Statistic::kPairedT: return "paired_t";
    case Statistic::kBayesT: return "bayes_t";
  }
  return "?";
}

Statistic statistic_from_string(std::string_view s) {
  if (s == "welch_t") return Statistic::kWelchT;
  if (s == "regression_t") return Statistic::kRegressionT;
  if (s == "paired_t") return Statistic::kPairedT;
  if (s == "bayes_t") return Statistic::kBayesT;
  throw ConfigurationError("unknown statistic '" + std::string(s) +
                           "' (expected welch_t, regression_t, paired_t, bayes_t)");
}

TestStatistic::TestStatistic(const AnalysisDataset& ad, const RandomizationScheme& scheme,
                             Statistic kind, const StatisticOptions& options)
    : kind_(kind), options_(options) {
  if (kind == Statistic::kPairedT) {
    if (scheme.kind() != ExperimentKind::kE) {
      throw ConfigurationError("paired_t requires the paired experiment E, not " +
                               std::string(to_string(scheme.kind())));
    }
    pairs_ = scheme.pairs();
  }
  if (kind == Statistic::kRegressionT || kind == Statistic::kBayesT) {
    z_ = regressor_matrix(ad.units(), options.covariates);
  }
  if (kind == Statistic::kRegressionT) {
    if (z_.rows() <= z_.cols() + 1) {
      throw SingularMatrixError("regression_t needs more units than regressors");
    }
    const Eigen::MatrixXd ztz = z_.transpose() * z_;
    Eigen::LLT<Eigen::MatrixXd> llt(ztz);
    if (llt.info() != Eigen::Success) throw SingularMatrixError("covariate matrix is singular");
    ztz_inv_ = llt.solve(Eigen::MatrixXd::Identity(z_.cols(), z_.cols()));
  }
}

TestStatistic::Bound TestStatistic::bind(std::span<const double> y) const {
  Bound b;
  b.owner_ = this;
  b.y_.assign(y.begin(), y.end());
  double scale = 0.0;
  for (double v : y) scale = std::max(scale, std::abs(v));
  b.tol_ = 1e-12 * scale;
  if (kind_ == Statistic::kRegressionT) {
    const Eigen::Map<const Eigen::VectorXd> yv(b.y_.data(), static_cast<Eigen::Index>(b.y_.size()));
    const Eigen::VectorXd coef = ztz_inv_ * (z_.transpose() * yv);
    const Eigen::VectorXd r = yv - z_ * coef;
    b.y_resid_.assign(r.data(), r.data() + r.size());
    b.resid_ss_ = r.squaredNorm();
  }
  return b;
}

double TestStatistic::Bound::operator()(const Assignment& w) const {
  switch (owner_->kind_) {
    case Statistic::kWelchT: return owner_->welch_t(*this, w);
    case Statistic::kRegressionT: return owner_->regression_t(*this, w);
    case Statistic::kPairedT: return owner_->paired_t(*this, w);
    case Statistic::kBayesT: return owner_->bayes_t(*this, w);
  }
  return 0.0;
}

double TestStatistic::welch_t(const Bound& b, const Assignment& w) const {
  double n[2] = {0, 0}, sum[2] = {0, 0};
  for (std::size_t i = 0; i < w.size(); ++i) {
    const int a = w[i] ? 1 : 0;
    n[a] += 1.0;
    sum[a] += b.y_[i];
  }
  const double mean[2] = {sum[0] / n[0], sum[1] / n[1]};
  double ss[2] = {0, 0};
  for (std::size_t i = 0; i < w.size(); ++i) {
    const int a = w[i] ? 1 : 0;
    const double d = b.y_[i] - mean[a];
    ss[a] += d * d;
  }
  const double var_t = n[1] > 1 ? ss[1] / (n[1] - 1) : 0.0;
  const double var_c = n[0] > 1 ? ss[0] / (n[0] - 1) : 0.0;
  const double se = std::sqrt(var_t / n[1] + var_c / n[0]);
  const double diff = mean[1] - mean[0];
  if (se <= b.tol_) return degenerate(diff, b.tol_);
  return diff / se;
}

double TestStatistic::regression_t(const Bound& b, const Assignment& w) const {
  // Frisch-Waugh: the treatment coefficient equals w~'y~ / w~'w~ with
  // w~ = M_Z w and y~ = M_Z y, and w~'y~ = w'y~.
  const Eigen::Index p = z_.cols();
  Eigen::VectorXd zw = Eigen::VectorXd::Zero(p);
  double nt = 0.0, wy = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!w[i]) continue;
    zw += z_.row(static_cast<Eigen::Index>(i)).transpose();
    nt += 1.0;
    wy += b.y_resid_[i];
  }
  const double wtw = nt - zw.dot(ztz_inv_ * zw);
  if (!(wtw > 1e-10 * std::max(1.0, nt))) {
    throw SingularMatrixError("treatment indicator is collinear with the covariates");
  }
  const double beta = wy / wtw;
  const double df = static_cast<double>(w.size()) - static_cast<double>(p) - 1.0;
  const double rss = std::max(0.0, b.resid_ss_ - beta * wy);
  const double sigma = std::sqrt(rss / df);
  if (sigma <= b.tol_) return degenerate(beta, b.tol_);
  return beta / (sigma / std::sqrt(wtw));
}

double TestStatistic::paired_t(const Bound& b, const Assignment& w) const {
  const double k = static_cast<double>(pairs_.size());
  std::vector<double> d(pairs_.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < pairs_.size(); ++j) {
    const auto [a, c] = pairs_[j];
    const bool a_treated = w[static_cast<std::size_t>(a)] != 0;
    d[j] = a_treated ? b.y_[a] - b.y_[c] : b.y_[c] - b.y_[a];
    sum += d[j];
  }
  const double mean = sum / k;
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = k > 1 ? std::sqrt(ss / (k - 1)) : 0.0;
  const double se = sd / std::sqrt(k);
  if (se <= b.tol_) return degenerate(mean, b.tol_);
  return mean / se;
}

double TestStatistic::bayes_t(const Bound& b, const Assignment& w) const {
  if (!options_.bayes_fast) {
    return bayes_t_statistic(z_, b.y_, w, false, options_.bayes_draws, options_.bayes_seed);
  }
  const AceMoments m = ace_moments(z_, b.y_, w);
  if (m.sd <= b.tol_) return std::abs(degenerate(m.mean, b.tol_));
  return std::abs(m.mean) / m.sd;
}

}  // namespace hypex
