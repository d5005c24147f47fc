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

#include "hypex/numerics/linalg.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "hypex/error.h"
#include "hypex/numerics/stats.h"

namespace hypex::numerics {
namespace {

// log(1 + exp(x)) without overflow.
double log1p_exp(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double bernoulli_log_likelihood(const Eigen::VectorXd& eta, const Eigen::VectorXd& w) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += w[i] * eta[i] - log1p_exp(eta[i]);
  return ll;
}

double condition_number_of(const Eigen::MatrixXd& x) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[s.size() - 1] <= 0.0) return std::numeric_limits<double>::infinity();
  return s[0] / s[s.size() - 1];
}

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) {
    throw DomainError(std::string(what) + " has non-finite entries");
  }
}

}  // namespace

DesignMatrix::DesignMatrix(Eigen::MatrixXd x, std::vector<std::string> labels)
    : x_(std::move(x)), labels_(std::move(labels)) {
  if (x_.cols() < 1) throw DomainError("design matrix needs at least one column");
  if (static_cast<Eigen::Index>(labels_.size()) != x_.cols()) {
    throw DomainError("design matrix label count does not match column count");
  }
  check_finite(x_, "design matrix");
  for (Eigen::Index i = 0; i < x_.rows(); ++i) {
    if (x_(i, 0) != 1.0) throw DomainError("design matrix first column must be all ones");
  }
}

DesignMatrix DesignMatrix::WithIntercept(const Eigen::MatrixXd& covariates,
                                         std::vector<std::string> labels) {
  Eigen::MatrixXd x(covariates.rows(), covariates.cols() + 1);
  x.col(0).setOnes();
  x.rightCols(covariates.cols()) = covariates;
  labels.insert(labels.begin(), "(intercept)");
  return DesignMatrix(std::move(x), std::move(labels));
}

Eigen::Index FitResult::index_of(const std::string& label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw DomainError("no coefficient labelled '" + label + "'");
  return it - labels.begin();
}

double FitResult::standard_error(Eigen::Index j) const {
  return std::sqrt(covariance(j, j));
}

namespace {

// Least squares on rows already multiplied by sqrt(weight). `x` keeps the
// original rows so fitted values are reported on the unweighted scale.
FitResult least_squares(const DesignMatrix& design, const Eigen::MatrixXd& xs,
                        const Eigen::VectorXd& ys) {
  const Eigen::Index n = xs.rows();
  const Eigen::Index p = xs.cols();
  if (n <= p) {
    throw SingularMatrixError("least squares needs more units than columns");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
  if (qr.rank() < p) {
    throw SingularMatrixError("design matrix is rank deficient (rank " +
                              std::to_string(qr.rank()) + " < " + std::to_string(p) + ")");
  }

  FitResult fit;
  fit.labels = design.labels();
  fit.coefficients = qr.solve(ys);
  fit.fitted = design.matrix() * fit.coefficients;
  const double rss = (ys - xs * fit.coefficients).squaredNorm();
  fit.df = static_cast<int>(n - p);
  fit.residual_variance = rss / static_cast<double>(fit.df);

  // (X'X)^-1 = P R^-1 R^-T P'
  const Eigen::MatrixXd r =
      qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd xtx_inv_perm = r_inv * r_inv.transpose();
  const auto& perm = qr.colsPermutation();
  const Eigen::MatrixXd xtx_inv = perm * xtx_inv_perm * perm.transpose();
  fit.covariance = xtx_inv * fit.residual_variance;

  fit.condition_number = condition_number_of(xs);
  if (fit.condition_number > kConditionWarning) {
    std::ostringstream msg;
    msg << "ill-conditioned design (condition number " << fit.condition_number << ")";
    fit.warnings.push_back(msg.str());
  }
  return fit;
}

}  // namespace

FitResult solve_ols(const DesignMatrix& design, const Eigen::VectorXd& y) {
  if (y.size() != design.rows()) throw DomainError("response length does not match design rows");
  check_finite(y, "response");
  return least_squares(design, design.matrix(), y);
}

FitResult solve_wls(const DesignMatrix& design, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& weights) {
  if (y.size() != design.rows() || weights.size() != design.rows()) {
    throw DomainError("response or weight length does not match design rows");
  }
  check_finite(y, "response");
  check_finite(weights, "weights");
  if (weights.size() > 0 && !(weights.minCoeff() > 0.0)) {
    throw DomainError("least-squares weights must be positive");
  }
  const Eigen::VectorXd root = weights.cwiseSqrt();
  return least_squares(design, root.asDiagonal() * design.matrix(), root.cwiseProduct(y));
}

FitResult logistic_newton(const DesignMatrix& design, const Eigen::VectorXd& w,
                          const LogisticOptions& options) {
  const Eigen::MatrixXd& x_raw = design.matrix();
  const Eigen::Index n = x_raw.rows();
  const Eigen::Index p = x_raw.cols();
  if (w.size() != n) throw DomainError("label length does not match design rows");
  double n_pos = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (w[i] != 0.0 && w[i] != 1.0) throw DomainError("logistic labels must be 0 or 1");
    n_pos += w[i];
  }
  if (n_pos == 0.0 || n_pos == static_cast<double>(n)) {
    throw DomainError("logistic regression needs both classes present");
  }
  if (n <= p) throw SingularMatrixError("logistic regression needs more units than columns");

  // Iterate on max-abs scaled columns; report everything on the original scale.
  Eigen::VectorXd scale(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double m = x_raw.col(j).cwiseAbs().maxCoeff();
    scale[j] = m > 0.0 ? m : 1.0;
  }
  const Eigen::MatrixXd x = x_raw * scale.cwiseInverse().asDiagonal();

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  beta[0] = std::log(n_pos / (static_cast<double>(n) - n_pos));
  Eigen::VectorXd eta = x * beta;
  double ll = bernoulli_log_likelihood(eta, w);

  int growth_streak = 0;
  for (int iter = 0; iter <= options.max_iter; ++iter) {
    Eigen::VectorXd prob(n);
    for (Eigen::Index i = 0; i < n; ++i) prob[i] = sigmoid(eta[i]);
    const Eigen::VectorXd score_scaled = x.transpose() * (w - prob);
    const Eigen::VectorXd score = score_scaled.cwiseQuotient(scale);
    const double max_eta = eta.cwiseAbs().maxCoeff();

    if (score.cwiseAbs().maxCoeff() < options.tol) {
      Eigen::VectorXd weights = prob.cwiseProduct(Eigen::VectorXd::Ones(n) - prob);
      const Eigen::MatrixXd info = x.transpose() * weights.asDiagonal() * x;
      Eigen::LLT<Eigen::MatrixXd> llt(info);
      if (llt.info() != Eigen::Success) {
        throw SingularMatrixError("logistic information matrix is singular at the optimum");
      }
      const Eigen::MatrixXd info_inv = llt.solve(Eigen::MatrixXd::Identity(p, p));
      FitResult fit;
      fit.labels = design.labels();
      fit.coefficients = beta.cwiseQuotient(scale);
      fit.covariance = scale.cwiseInverse().asDiagonal() * info_inv *
                       scale.cwiseInverse().asDiagonal();
      fit.log_likelihood = ll;
      fit.df = static_cast<int>(n - p);
      fit.iterations = iter;
      fit.fitted = prob;
      fit.condition_number = condition_number_of(x);
      if (fit.condition_number > kConditionWarning) {
        fit.warnings.push_back("ill-conditioned logistic design");
      }
      return fit;
    }
    if (iter == options.max_iter) break;

    Eigen::VectorXd weights = prob.cwiseProduct(Eigen::VectorXd::Ones(n) - prob);
    const Eigen::MatrixXd info = x.transpose() * weights.asDiagonal() * x;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-300) {
      if (max_eta > 20.0) throw SeparationError("complete separation: information matrix vanished");
      throw SingularMatrixError("logistic information matrix is singular");
    }
    const Eigen::VectorXd step = ldlt.solve(score_scaled);

    double t = 1.0;
    Eigen::VectorXd beta_new;
    Eigen::VectorXd eta_new;
    double ll_new = -std::numeric_limits<double>::infinity();
    for (int halving = 0; halving < 40; ++halving) {
      beta_new = beta + t * step;
      eta_new = x * beta_new;
      ll_new = bernoulli_log_likelihood(eta_new, w);
      if (ll_new >= ll - 1e-12 * std::abs(ll)) break;
      t *= 0.5;
    }

    // Separation: likelihood creeping to its supremum of 0 while the
    // coefficient vector keeps growing.
    if (beta_new.norm() > beta.norm() && eta_new.cwiseAbs().maxCoeff() > 15.0 &&
        (beta_new - beta).norm() > 1e-3 * beta_new.norm()) {
      ++growth_streak;
    } else {
      growth_streak = 0;
    }
    if (growth_streak >= 5 || (ll_new > -1e-8 && growth_streak >= 1)) {
      throw SeparationError("complete separation: coefficients diverge monotonically");
    }
    beta = beta_new;
    eta = eta_new;
    ll = ll_new;
  }
  throw DivergenceError("logistic regression did not converge in " +
                        std::to_string(options.max_iter) + " iterations");
}

LrtResult lrt_compare(const FitResult& full, const FitResult& reduced, int df_diff) {
  if (df_diff < 1) throw DomainError("likelihood-ratio test needs df_diff >= 1");
  double stat = 2.0 * (full.log_likelihood - reduced.log_likelihood);
  if (stat < -1e-8) {
    throw NestingViolationError("reduced model fits better than the full model; models are not nested");
  }
  stat = std::max(0.0, stat);
  LrtResult out;
  out.statistic = stat;
  out.df = df_diff;
  out.p_value = chi_squared_sf(stat, static_cast<double>(df_diff));
  return out;
}

CovarianceMatrix::CovarianceMatrix(Eigen::MatrixXd s, std::vector<std::string> labels)
    : s_(std::move(s)), labels_(std::move(labels)) {
  if (s_.rows() != s_.cols()) throw DomainError("covariance matrix must be square");
  if (!labels_.empty() && static_cast<Eigen::Index>(labels_.size()) != s_.rows()) {
    throw DomainError("covariance label count does not match dimension");
  }
  check_finite(s_, "covariance matrix");
  if ((s_ - s_.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * std::max(1.0, s_.cwiseAbs().maxCoeff())) {
    throw DomainError("covariance matrix must be symmetric");
  }
  llt_.compute(s_);
  positive_definite_ = llt_.info() == Eigen::Success;
  if (positive_definite_) {
    // LLT accepts tiny pivots; reject numerically singular matrices too.
    const Eigen::VectorXd d = llt_.matrixLLT().diagonal();
    const double ratio = d.minCoeff() / d.maxCoeff();
    positive_definite_ = ratio * ratio > 1e-14;
  }
}

CovarianceMatrix CovarianceMatrix::FromSample(const Eigen::MatrixXd& sample,
                                              std::vector<std::string> labels) {
  if (sample.rows() < 2) throw SingularMatrixError("covariance needs at least two rows");
  const Eigen::RowVectorXd centre = sample.colwise().mean();
  const Eigen::MatrixXd centred = sample.rowwise() - centre;
  Eigen::MatrixXd s = centred.transpose() * centred / static_cast<double>(sample.rows() - 1);
  s = 0.5 * (s + s.transpose());
  return CovarianceMatrix(std::move(s), std::move(labels));
}

const Eigen::LLT<Eigen::MatrixXd>& CovarianceMatrix::cholesky() const {
  if (!positive_definite_) throw SingularMatrixError("covariance matrix is singular");
  return llt_;
}

double mahalanobis_sq(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                      const CovarianceMatrix& s) {
  if (u.size() != s.dim() || v.size() != s.dim()) {
    throw DomainError("Mahalanobis distance: dimension mismatch");
  }
  const Eigen::VectorXd diff = u - v;
  const Eigen::VectorXd z = s.cholesky().matrixL().solve(diff);
  return z.squaredNorm();
}

}  // namespace hypex::numerics
