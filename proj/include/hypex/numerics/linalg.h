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

#ifndef HYPEX_NUMERICS_LINALG_H_
#define HYPEX_NUMERICS_LINALG_H_

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace hypex::numerics {

// Regression design: n units by p columns, the first column the constant.
class DesignMatrix {
 public:
  DesignMatrix(Eigen::MatrixXd x, std::vector<std::string> labels);

  // Prepends the constant column to `covariates` and labels it "(intercept)".
  static DesignMatrix WithIntercept(const Eigen::MatrixXd& covariates,
                                    std::vector<std::string> labels);

  const Eigen::MatrixXd& matrix() const { return x_; }
  Eigen::Index rows() const { return x_.rows(); }
  Eigen::Index cols() const { return x_.cols(); }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  Eigen::MatrixXd x_;
  std::vector<std::string> labels_;
};

struct FitResult {
  std::vector<std::string> labels;
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd covariance;
  // Least squares only: RSS / (n - p).
  double residual_variance = 0.0;
  // Logistic only.
  double log_likelihood = 0.0;
  int df = 0;  // n - p
  int iterations = 0;
  double condition_number = 1.0;
  Eigen::VectorXd fitted;
  std::vector<std::string> warnings;

  // Coefficient index by label; throws if absent.
  Eigen::Index index_of(const std::string& label) const;
  double standard_error(Eigen::Index j) const;
};

// Condition numbers above this trigger a warning on the fit.
inline constexpr double kConditionWarning = 1e8;

// Least squares via column-pivoted QR. Covariance is (X'X)^-1 s^2.
// Throws SingularMatrixError on rank deficiency or when n <= p.
FitResult solve_ols(const DesignMatrix& x, const Eigen::VectorXd& y);

// Weighted least squares: minimises sum w_i r_i^2. residual_variance is the
// weighted RSS / (n - p) and covariance is (X'WX)^-1 times that.
FitResult solve_wls(const DesignMatrix& x, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& weights);

struct LogisticOptions {
  double tol = 1e-8;  // on max |score|
  int max_iter = 50;
};

// Bernoulli maximum likelihood by Newton-Raphson with step halving.
// Throws SeparationError when the coefficients diverge toward a separating
// direction and DivergenceError when max_iter is exhausted.
FitResult logistic_newton(const DesignMatrix& x, const Eigen::VectorXd& w,
                          const LogisticOptions& options = {});

struct LrtResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int df = 0;
};

LrtResult lrt_compare(const FitResult& full, const FitResult& reduced, int df_diff);

class CovarianceMatrix {
 public:
  CovarianceMatrix(Eigen::MatrixXd s, std::vector<std::string> labels);

  // Unbiased sample covariance of the rows of `sample`.
  static CovarianceMatrix FromSample(const Eigen::MatrixXd& sample,
                                     std::vector<std::string> labels);

  const Eigen::MatrixXd& matrix() const { return s_; }
  const std::vector<std::string>& labels() const { return labels_; }
  Eigen::Index dim() const { return s_.rows(); }
  bool positive_definite() const { return positive_definite_; }
  // Throws SingularMatrixError unless positive definite.
  const Eigen::LLT<Eigen::MatrixXd>& cholesky() const;

 private:
  Eigen::MatrixXd s_;
  std::vector<std::string> labels_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  bool positive_definite_ = false;
};

// (u - v)' S^-1 (u - v).
double mahalanobis_sq(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                      const CovarianceMatrix& s);

}  // namespace hypex::numerics

#endif  // HYPEX_NUMERICS_LINALG_H_
