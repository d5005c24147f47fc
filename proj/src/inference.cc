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

#include "hypex/inference.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "hypex/error.h"
#include "hypex/numerics/linalg.h"
#include "hypex/numerics/stats.h"
#include "hypex/parallel.h"

namespace hypex {
namespace {

// Treated units weigh 1; a control in stratum s weighs (m_c / m_t)(n_t,s / n_c,s).
Eigen::VectorXd stratum_weights(const AnalysisDataset& ad) {
  const DesignResult& d = ad.design();
  Eigen::VectorXd w = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(ad.size()));
  double m_t = 0.0, m_c = 0.0;
  for (const auto& u : ad.units()) (u.treatment ? m_t : m_c) += 1.0;
  for (const auto& s : d.strata) {
    double nt = 0.0, nc = 0.0;
    for (int id : s.ids) (ad.unit(id).treatment ? nt : nc) += 1.0;
    for (int id : s.ids) {
      if (!ad.unit(id).treatment) {
        w[static_cast<Eigen::Index>(ad.position(id))] = (m_c / m_t) * (nt / nc);
      }
    }
  }
  return w;
}

numerics::FitResult fit_model(const AnalysisDataset& ad, const Eigen::MatrixXd& covs,
                              std::vector<std::string> labels) {
  const auto design = numerics::DesignMatrix::WithIntercept(covs, std::move(labels));
  const auto y_span = ad.outcomes();
  const Eigen::VectorXd y =
      Eigen::Map<const Eigen::VectorXd>(y_span.data(), static_cast<Eigen::Index>(y_span.size()));
  if (ad.design().has_strata()) return numerics::solve_wls(design, y, stratum_weights(ad));
  return numerics::solve_ols(design, y);
}

void fill_from_coefficient(InferenceResult& r, const numerics::FitResult& fit,
                           const std::string& label, double level) {
  const Eigen::Index j = fit.index_of(label);
  r.estimate = fit.coefficients[j];
  const double se = fit.standard_error(j);
  r.standard_error = se;
  r.df = fit.df;
  r.warnings.insert(r.warnings.end(), fit.warnings.begin(), fit.warnings.end());
  if (!(se > 0.0)) {
    r.warnings.push_back("degenerate standard error (zero residual variance)");
    r.lower = r.upper = r.estimate;
    r.statistic = r.estimate == 0.0 ? 0.0 : std::copysign(INFINITY, r.estimate);
    r.p_value = r.estimate == 0.0 ? 1.0 : 0.0;
    return;
  }
  const double q = numerics::student_t_quantile(fit.df, 0.5 + level / 2.0);
  r.lower = r.estimate - q * se;
  r.upper = r.estimate + q * se;
  r.statistic = r.estimate / se;
  r.p_value = numerics::student_t_two_sided_p(*r.statistic, fit.df);
}

Eigen::MatrixXd treatment_and_covariates(const AnalysisDataset& ad,
                                         const std::vector<Covariate>& covariates,
                                         std::vector<std::string>* labels) {
  const auto units = ad.units();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(units.size()),
                    static_cast<Eigen::Index>(covariates.size() + 1));
  labels->assign({"treatment"});
  for (Covariate c : covariates) labels->emplace_back(to_string(c));
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    m(r, 0) = units[i].treatment;
    for (std::size_t k = 0; k < covariates.size(); ++k) {
      m(r, static_cast<Eigen::Index>(k + 1)) = units[i].value(covariates[k]);
    }
  }
  return m;
}

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigurationError("level must lie in (0, 1)");
}

std::vector<double> shifted(std::span<const double> y, const Assignment& w, double tau) {
  std::vector<double> out(y.begin(), y.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (w[i]) out[i] -= tau;
  }
  return out;
}

}  // namespace

Json to_json(const InferenceResult& r) {
  Json j = {{"method", r.method},
            {"interval_kind", r.interval_kind},
            {"n", r.n},
            {"estimate", r.estimate},
            {"lower", r.lower},
            {"upper", r.upper},
            {"level", r.level},
            {"draws", r.draws},
            {"warnings", r.warnings}};
  j["experiment"] = r.experiment ? Json(to_string(*r.experiment)) : Json(nullptr);
  j["standard_error"] = r.standard_error ? Json(*r.standard_error) : Json(nullptr);
  j["df"] = r.df ? Json(*r.df) : Json(nullptr);
  j["statistic"] = r.statistic && std::isfinite(*r.statistic) ? Json(*r.statistic) : Json(nullptr);
  j["p_value"] = r.p_value ? Json(*r.p_value) : Json(nullptr);
  j["seed"] = r.seed ? Json(*r.seed) : Json(nullptr);
  return j;
}

InferenceResult neyman_crude(const AnalysisDataset& ad, double level) {
  check_level(level);
  InferenceResult r;
  r.method = "crude";
  r.interval_kind = "confidence";
  r.level = level;
  r.n = static_cast<int>(ad.size());
  if (ad.design().has_strata()) {
    std::vector<std::string> labels;
    const Eigen::MatrixXd m = treatment_and_covariates(ad, {}, &labels);
    fill_from_coefficient(r, fit_model(ad, m, labels), "treatment", level);
    r.warnings.push_back("stratum-weighted comparison");
    return r;
  }
  std::vector<double> t, c;
  const auto units = ad.units();
  const auto y = ad.outcomes();
  for (std::size_t i = 0; i < units.size(); ++i) (units[i].treatment ? t : c).push_back(y[i]);
  if (t.size() < 2 || c.size() < 2) {
    throw VarianceUndefinedError("crude comparison needs at least two units per group");
  }
  const double diff = numerics::mean(t) - numerics::mean(c);
  const double se = std::sqrt(numerics::sample_variance(t) / static_cast<double>(t.size()) +
                              numerics::sample_variance(c) / static_cast<double>(c.size()));
  r.estimate = diff;
  r.standard_error = se;
  if (!(se > 0.0)) {
    r.warnings.push_back("degenerate standard error (no outcome variation)");
    r.lower = r.upper = diff;
    r.statistic = diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff);
    r.p_value = diff == 0.0 ? 1.0 : 0.0;
    return r;
  }
  const auto w = numerics::welch(t, c);
  const double q = numerics::student_t_quantile(w.df, 0.5 + level / 2.0);
  r.df = w.df;
  r.lower = diff - q * se;
  r.upper = diff + q * se;
  r.statistic = diff / se;
  r.p_value = numerics::student_t_two_sided_p(*r.statistic, w.df);
  return r;
}

InferenceResult ols_adjusted(const AnalysisDataset& ad, const std::vector<Covariate>& covariates,
                             double level) {
  check_level(level);
  InferenceResult r;
  r.method = "adjusted";
  r.interval_kind = "confidence";
  r.level = level;
  r.n = static_cast<int>(ad.size());
  std::vector<std::string> labels;
  const Eigen::MatrixXd m = treatment_and_covariates(ad, covariates, &labels);
  fill_from_coefficient(r, fit_model(ad, m, labels), "treatment", level);
  if (ad.design().has_strata()) r.warnings.push_back("stratum-weighted regression");
  return r;
}

std::vector<InteractionTest> interaction_screen(const AnalysisDataset& ad,
                                                const std::vector<Covariate>& covariates) {
  std::vector<std::string> labels;
  const Eigen::MatrixXd base = treatment_and_covariates(ad, covariates, &labels);
  std::vector<InteractionTest> out;
  for (std::size_t k = 0; k < covariates.size(); ++k) {
    Eigen::MatrixXd m(base.rows(), base.cols() + 1);
    m.leftCols(base.cols()) = base;
    m.col(base.cols()) = base.col(0).cwiseProduct(base.col(static_cast<Eigen::Index>(k + 1)));
    auto l = labels;
    const std::string term = "treatment*" + std::string(to_string(covariates[k]));
    l.push_back(term);
    const auto fit = fit_model(ad, m, l);
    const Eigen::Index j = fit.index_of(term);
    InteractionTest t;
    t.term = term;
    t.estimate = fit.coefficients[j];
    t.standard_error = fit.standard_error(j);
    t.statistic = t.estimate / t.standard_error;
    t.p_value = numerics::student_t_two_sided_p(t.statistic, fit.df);
    out.push_back(t);
  }
  return out;
}

bool at_least_as_extreme(double t, double t_obs) {
  const double a = std::abs(t_obs);
  if (std::isinf(a)) return std::isinf(t);
  return std::abs(t) >= a - 1e-9 * std::max(1.0, a);
}

Json to_json(const FisherResult& r) {
  Json j = {{"statistic", to_string(r.statistic)},
            {"experiment", to_string(r.experiment)},
            {"tau0", r.tau0},
            {"p_value", r.p_value},
            {"draws", r.draws},
            {"exact", r.exact},
            {"seed", r.seed}};
  j["observed"] = std::isfinite(r.observed) ? Json(r.observed) : Json(nullptr);
  j["acceptance_rate"] = r.acceptance_rate ? Json(*r.acceptance_rate) : Json(nullptr);
  return j;
}

FisherResult fisher_test(const AnalysisDataset& ad, const RandomizationScheme& scheme,
                         const FisherOptions& options) {
  if (options.draws < 1) throw ConfigurationError("fisher test needs at least one draw");
  const TestStatistic stat(ad, scheme, options.statistic, options.statistic_options);
  const Assignment& w_obs = scheme.observed();
  const auto bound = stat.bind(shifted(ad.outcomes(), w_obs, options.tau0));

  FisherResult r;
  r.statistic = options.statistic;
  r.experiment = scheme.kind();
  r.tau0 = options.tau0;
  r.seed = options.seed;
  r.draws = options.draws;
  r.acceptance_rate = scheme.acceptance_rate();
  r.observed = bound(w_obs);
  std::vector<double> t(static_cast<std::size_t>(options.draws));
  parallel_for(t.size(), options.threads, [&](std::size_t k) {
    numerics::Rng rng = numerics::Rng::Stream(options.seed, k);
    t[k] = bound(scheme.draw(rng));
  });
  std::size_t extreme = 0;
  for (double v : t) extreme += at_least_as_extreme(v, r.observed) ? 1 : 0;
  r.p_value = static_cast<double>(1 + extreme) / static_cast<double>(1 + options.draws);
  if (options.keep_draws) r.null_draws = std::move(t);
  return r;
}

FisherResult fisher_test_exact(const AnalysisDataset& ad, const RandomizationScheme& scheme,
                               Statistic statistic, double tau0,
                               const StatisticOptions& statistic_options) {
  const TestStatistic stat(ad, scheme, statistic, statistic_options);
  const Assignment& w_obs = scheme.observed();
  const auto bound = stat.bind(shifted(ad.outcomes(), w_obs, tau0));
  FisherResult r;
  r.statistic = statistic;
  r.experiment = scheme.kind();
  r.tau0 = tau0;
  r.exact = true;
  r.observed = bound(w_obs);
  std::size_t extreme = 0;
  scheme.enumerate([&](const Assignment& w) {
    const double v = bound(w);
    r.null_draws.push_back(v);
    extreme += at_least_as_extreme(v, r.observed) ? 1 : 0;
  });
  r.draws = static_cast<int>(r.null_draws.size());
  if (r.draws == 0) throw EmptyDesignError("the scheme admits no assignment");
  r.p_value = static_cast<double>(extreme) / static_cast<double>(r.draws);
  return r;
}

double point_estimate(const AnalysisDataset& ad, const RandomizationScheme& scheme,
                      Statistic statistic, const StatisticOptions& options) {
  const auto y = ad.outcomes();
  const Assignment& w = scheme.observed();
  if (scheme.kind() == ExperimentKind::kE) {
    double sum = 0.0;
    for (const auto& [t, c] : scheme.pairs()) {
      sum += y[static_cast<std::size_t>(t)] - y[static_cast<std::size_t>(c)];
    }
    return sum / static_cast<double>(scheme.pairs().size());
  }
  if (statistic == Statistic::kRegressionT) {
    return ols_adjusted(ad, options.covariates).estimate;
  }
  if (statistic == Statistic::kBayesT) {
    return ace_moments(regressor_matrix(ad.units(), options.covariates), y, w).mean;
  }
  double st = 0, sc = 0, nt = 0, nc = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (w[i]) {
      st += y[i];
      nt += 1;
    } else {
      sc += y[i];
      nc += 1;
    }
  }
  return st / nt - sc / nc;
}

FiducialResult fiducial_interval(const AnalysisDataset& ad, const RandomizationScheme& scheme,
                                 const FiducialOptions& options) {
  check_level(options.level);
  if (options.draws < 1) throw ConfigurationError("fiducial interval needs at least one draw");
  if (!(options.grid_step > 0.0) || !(options.grid_lo < options.grid_hi)) {
    throw ConfigurationError("fiducial grid must have lo < hi and a positive step");
  }
  const TestStatistic stat(ad, scheme, options.statistic, options.statistic_options);
  const Assignment& w_obs = scheme.observed();
  const auto y = ad.outcomes();

  std::vector<Assignment> assignments(static_cast<std::size_t>(options.draws));
  parallel_for(assignments.size(), options.threads, [&](std::size_t k) {
    numerics::Rng rng = numerics::Rng::Stream(options.seed, k);
    assignments[k] = scheme.draw(rng);
  });

  const double alpha = 1.0 - options.level;
  std::vector<double> t(assignments.size());
  auto p_of = [&](double tau) {
    const auto bound = stat.bind(shifted(y, w_obs, tau));
    const double t_obs = bound(w_obs);
    parallel_for(t.size(), options.threads, [&](std::size_t k) { t[k] = bound(assignments[k]); });
    std::size_t extreme = 0;
    for (double v : t) extreme += at_least_as_extreme(v, t_obs) ? 1 : 0;
    return static_cast<double>(1 + extreme) / static_cast<double>(1 + t.size());
  };

  FiducialResult r;
  r.point = point_estimate(ad, scheme, options.statistic, options.statistic_options);
  const auto steps =
      static_cast<int>(std::floor((options.grid_hi - options.grid_lo) / options.grid_step + 1e-9));
  for (int j = 0; j <= steps; ++j) r.grid.push_back(options.grid_lo + j * options.grid_step);
  if (r.point > options.grid_lo && r.point < options.grid_hi) {
    r.grid.insert(std::upper_bound(r.grid.begin(), r.grid.end(), r.point), r.point);
  }
  for (double tau : r.grid) r.p_values.push_back(p_of(tau));

  std::vector<std::size_t> accepted;
  for (std::size_t j = 0; j < r.grid.size(); ++j) {
    if (r.p_values[j] >= alpha) accepted.push_back(j);
  }
  if (accepted.empty()) {
    r.warnings.push_back("no grid value accepted; interval reported at the point estimate");
    r.lower = r.upper = r.point;
    return r;
  }
  const std::size_t first = accepted.front();
  const std::size_t last = accepted.back();
  if (last - first + 1 != accepted.size()) {
    r.warnings.push_back("acceptance region is not an interval; reporting its hull");
  }
  auto bisect = [&](double rejected, double acc) {
    for (int s = 0; s < options.bisection_steps; ++s) {
      const double mid = 0.5 * (rejected + acc);
      (p_of(mid) >= alpha ? acc : rejected) = mid;
    }
    return acc;
  };
  if (first == 0) {
    r.warnings.push_back("interval truncated at the lower grid edge");
    r.lower = r.grid.front();
  } else {
    r.lower = bisect(r.grid[first - 1], r.grid[first]);
  }
  if (last + 1 == r.grid.size()) {
    r.warnings.push_back("interval truncated at the upper grid edge");
    r.upper = r.grid.back();
  } else {
    r.upper = bisect(r.grid[last + 1], r.grid[last]);
  }
  return r;
}

Json to_json(const AcePosterior& p) {
  return Json{{"mean", p.mean},
              {"sd", p.sd},
              {"lower", p.lower},
              {"upper", p.upper},
              {"draws", p.draws.size()},
              {"seed", p.seed}};
}

}  // namespace hypex
