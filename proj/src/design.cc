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

#include "hypex/design.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "hypex/error.h"
#include "hypex/numerics/assignment.h"
#include "hypex/numerics/stats.h"

namespace hypex {
namespace {

std::string format_number(double x) {
  std::ostringstream out;
  out << x;
  return out.str();
}

std::vector<int> all_ids(const BlindedDataset& ds) {
  std::vector<int> ids;
  ids.reserve(ds.size());
  for (const auto& u : ds.units()) ids.push_back(u.id);
  return ids;
}

HypotheticalExperiment experiment_for(ExperimentKind kind, const BlindedDataset& ds,
                                      std::span<const int> ids) {
  HypotheticalExperiment e;
  e.kind = kind;
  for (int id : ids) {
    if (ds.unit(id).treatment == 1) {
      ++e.n_treated;
    } else {
      ++e.n_control;
    }
  }
  return e;
}

// Keeps `ids` in dataset order.
std::vector<int> in_dataset_order(const BlindedDataset& ds, std::vector<int> ids) {
  std::sort(ids.begin(), ids.end(),
            [&](int a, int b) { return ds.position(a) < ds.position(b); });
  return ids;
}

Json covariate_list_json(const std::vector<Covariate>& covariates) {
  Json out = Json::array();
  for (Covariate c : covariates) out.push_back(to_string(c));
  return out;
}

}  // namespace

DesignResult design_none(const BlindedDataset& ds) {
  DesignResult d;
  d.method = DesignMethod::kNone;
  d.retained_ids = all_ids(ds);
  d.experiments.push_back(experiment_for(ExperimentKind::kA, ds, d.retained_ids));
  return d;
}

std::vector<TrimRule> default_trim_rules() {
  return {
      TrimRule{0, {{Covariate::kAge, {10, 18}}, {Covariate::kHeight, {60, 69}}}},
      TrimRule{1, {{Covariate::kAge, {9, 18}}, {Covariate::kHeight, {58, 72}}}},
  };
}

DesignResult trim_by_ranges(const BlindedDataset& ds, const std::vector<TrimRule>& rules) {
  if (rules.empty()) throw ConfigurationError("trimming needs at least one rule");
  for (std::size_t a = 0; a < rules.size(); ++a) {
    for (const auto& [cov, r] : rules[a].ranges) {
      if (is_binary(cov)) {
        throw ConfigurationError("trim ranges apply to continuous covariates; use the stratum "
                                 "predicate for sex");
      }
      if (!(r.lo <= r.hi)) {
        throw ConfigurationError("trim range for " + std::string(to_string(cov)) +
                                 " has lower bound above upper bound");
      }
    }
    for (std::size_t b = a + 1; b < rules.size(); ++b) {
      if (!rules[a].sex || !rules[b].sex || *rules[a].sex == *rules[b].sex) {
        throw ConfigurationError("trim rules " + std::to_string(a + 1) + " and " +
                                 std::to_string(b + 1) + " cover overlapping strata");
      }
    }
  }

  DesignResult d;
  d.method = DesignMethod::kTrim;
  for (const auto& u : ds.units()) {
    const TrimRule* rule = nullptr;
    for (const auto& r : rules) {
      if (!r.sex || *r.sex == u.sex) {
        rule = &r;
        break;
      }
    }
    if (rule == nullptr) {
      throw ConfigurationError("unit " + std::to_string(u.id) + " matches no trim rule");
    }
    std::string violation;
    for (const auto& [cov, r] : rule->ranges) {
      const double v = u.value(cov);
      if (v < r.lo || v > r.hi) {
        violation = std::string(to_string(cov)) + " " + format_number(v) + " outside [" +
                    format_number(r.lo) + ", " + format_number(r.hi) + "]";
        break;
      }
    }
    if (violation.empty()) {
      d.retained_ids.push_back(u.id);
    } else {
      d.provenance.discards.push_back({u.id, violation});
    }
  }
  if (d.retained_ids.empty()) throw EmptyDesignError("trimming discarded every unit");

  Json rules_json = Json::array();
  for (const auto& r : rules) {
    Json ranges = Json::object();
    for (const auto& [cov, range] : r.ranges) {
      ranges[std::string(to_string(cov))] = {range.lo, range.hi};
    }
    rules_json.push_back({{"sex", r.sex ? Json(*r.sex) : Json(nullptr)}, {"ranges", ranges}});
  }
  d.provenance.parameters = {{"rules", rules_json}};
  d.experiments.push_back(experiment_for(ExperimentKind::kB, ds, d.retained_ids));
  return d;
}

std::vector<double> sturges_cutpoints(std::span<const double> x) {
  if (x.empty()) throw EmptyInputError("cannot bin an empty sample");
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (lo == hi) return {};
  const int k = static_cast<int>(std::ceil(std::log2(static_cast<double>(x.size())) + 1.0));
  const double width = (hi - lo) / k;
  std::vector<double> cuts;
  for (int j = 1; j < k; ++j) cuts.push_back(lo + j * width);
  return cuts;
}

StratifyOptions default_stratify_options(const BlindedDataset& ds) {
  StratifyOptions o;
  for (Covariate c : {Covariate::kAge, Covariate::kHeight}) {
    std::vector<double> x;
    x.reserve(ds.size());
    for (const auto& u : ds.units()) x.push_back(u.value(c));
    o.bins.push_back({c, sturges_cutpoints(x)});
  }
  o.exact = {Covariate::kSex};
  return o;
}

DesignResult coarsened_stratify(const BlindedDataset& ds, const StratifyOptions& options) {
  std::unordered_set<int> used;
  for (const auto& b : options.bins) {
    if (!used.insert(static_cast<int>(b.covariate)).second) {
      throw ConfigurationError("covariate " + std::string(to_string(b.covariate)) +
                               " is binned twice");
    }
    for (std::size_t k = 1; k < b.cutpoints.size(); ++k) {
      if (!(b.cutpoints[k - 1] < b.cutpoints[k])) {
        throw ConfigurationError("cutpoints for " + std::string(to_string(b.covariate)) +
                                 " must be strictly increasing");
      }
    }
  }
  for (Covariate c : options.exact) {
    if (!used.insert(static_cast<int>(c)).second) {
      throw ConfigurationError("covariate " + std::string(to_string(c)) +
                               " is both binned and matched exactly");
    }
  }

  // Signature -> member ids in dataset order.
  std::map<std::vector<long>, std::vector<int>> cells;
  for (const auto& u : ds.units()) {
    std::vector<long> sig;
    for (const auto& b : options.bins) {
      const double v = u.value(b.covariate);
      sig.push_back(std::lower_bound(b.cutpoints.begin(), b.cutpoints.end(), v) -
                    b.cutpoints.begin());
    }
    for (Covariate c : options.exact) sig.push_back(std::lround(u.value(c)));
    cells[sig].push_back(u.id);
  }

  DesignResult d;
  d.method = DesignMethod::kStratify;
  std::unordered_set<int> keep;
  int total_treated = 0;
  for (const auto& [sig, ids] : cells) {
    int nt = 0;
    for (int id : ids) nt += ds.unit(id).treatment;
    const bool both = nt > 0 && nt < static_cast<int>(ids.size());
    if (!both) {
      const std::string reason = nt == 0 ? "stratum has no treated units"
                                         : "stratum has no control units";
      for (int id : ids) d.provenance.discards.push_back({id, reason});
      continue;
    }
    std::string label;
    std::size_t k = 0;
    for (const auto& b : options.bins) {
      label += (label.empty() ? "" : "|") + std::string(to_string(b.covariate)) + ":" +
               std::to_string(sig[k++]);
    }
    for (Covariate c : options.exact) {
      label += (label.empty() ? "" : "|") + std::string(to_string(c)) + "=" +
               std::to_string(sig[k++]);
    }
    d.strata.push_back({label, ids, static_cast<double>(nt)});
    total_treated += nt;
    keep.insert(ids.begin(), ids.end());
  }
  if (keep.empty()) throw EmptyDesignError("no stratum contains both treated and control units");
  for (auto& s : d.strata) s.weight /= total_treated;
  for (const auto& u : ds.units()) {
    if (keep.contains(u.id)) d.retained_ids.push_back(u.id);
  }
  std::sort(d.provenance.discards.begin(), d.provenance.discards.end(),
            [&](const DiscardRecord& a, const DiscardRecord& b) {
              return ds.position(a.id) < ds.position(b.id);
            });

  Json bins = Json::object();
  for (const auto& b : options.bins) bins[std::string(to_string(b.covariate))] = b.cutpoints;
  d.provenance.parameters = {{"cutpoints", bins}, {"exact", covariate_list_json(options.exact)}};
  d.experiments.push_back(experiment_for(ExperimentKind::kC, ds, d.retained_ids));
  return d;
}

double PropensityModel::score(int id) const {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) {
    throw ConsistencyError("no propensity score for unit " + std::to_string(id));
  }
  return scores[static_cast<std::size_t>(it - ids.begin())];
}

std::vector<std::vector<Term>> default_propensity_candidates() {
  return {main_effect_terms(), balance_terms()};
}

namespace {

numerics::FitResult fit_candidate(const BlindedDataset& ds, const std::vector<Term>& terms) {
  const auto n = static_cast<Eigen::Index>(ds.size());
  Eigen::MatrixXd cov(n, static_cast<Eigen::Index>(terms.size()));
  Eigen::VectorXd w(n);
  Eigen::Index i = 0;
  for (const auto& u : ds.units()) {
    for (std::size_t k = 0; k < terms.size(); ++k) {
      cov(i, static_cast<Eigen::Index>(k)) = terms[k].eval(u);
    }
    w[i] = u.treatment;
    ++i;
  }
  return numerics::logistic_newton(
      numerics::DesignMatrix::WithIntercept(cov, term_labels(terms)), w);
}

}  // namespace

PropensityModel fit_propensity(const BlindedDataset& ds,
                               const std::vector<std::vector<Term>>& candidates, double alpha) {
  if (candidates.empty()) throw ConfigurationError("propensity model needs a candidate");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigurationError("alpha must lie in (0, 1)");
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (candidates[k].empty()) throw ConfigurationError("empty propensity candidate");
    if (k == 0) continue;
    const auto& small = candidates[k - 1];
    const auto& big = candidates[k];
    const bool nested =
        big.size() > small.size() && std::all_of(small.begin(), small.end(), [&](const Term& t) {
          return std::find(big.begin(), big.end(), t) != big.end();
        });
    if (!nested) {
      throw ConfigurationError("propensity candidate " + std::to_string(k + 1) +
                               " does not strictly contain candidate " + std::to_string(k));
    }
  }

  PropensityModel pm;
  pm.selected = candidates.size() - 1;
  numerics::FitResult current = fit_candidate(ds, candidates[0]);
  numerics::FitResult chosen;
  bool done = false;
  for (std::size_t k = 0; k + 1 < candidates.size(); ++k) {
    numerics::FitResult richer = fit_candidate(ds, candidates[k + 1]);
    const int df_diff = static_cast<int>(candidates[k + 1].size() - candidates[k].size());
    pm.tests.push_back(numerics::lrt_compare(richer, current, df_diff));
    if (pm.tests.back().p_value >= alpha) {
      pm.selected = k;
      chosen = std::move(current);
      done = true;
      break;
    }
    current = std::move(richer);
  }
  if (!done) chosen = std::move(current);

  pm.fit = std::move(chosen);
  pm.terms = term_labels(candidates[pm.selected]);
  pm.ids = all_ids(ds);
  pm.scores.assign(pm.fit.fitted.data(), pm.fit.fitted.data() + pm.fit.fitted.size());
  for (double s : pm.scores) {
    if (!(s > 0.0 && s < 1.0)) {
      throw SeparationError("estimated propensity score is numerically 0 or 1");
    }
  }
  pm.score_sd = numerics::sample_sd(pm.scores);
  return pm;
}

DesignResult discard_nonoverlap(const BlindedDataset& ds, const PropensityModel& pm,
                                const OverlapOptions& options) {
  if (pm.ids.size() != ds.size()) {
    throw ConsistencyError("propensity model does not cover the dataset");
  }
  std::vector<int> current = all_ids(ds);
  DesignResult d;
  d.method = DesignMethod::kPsCaliper;
  for (int pass = 0;; ++pass) {
    double t_lo = std::numeric_limits<double>::infinity(), t_hi = -t_lo;
    double c_lo = t_lo, c_hi = -t_lo;
    for (int id : current) {
      const double s = pm.score(id);
      if (ds.unit(id).treatment == 1) {
        t_lo = std::min(t_lo, s);
        t_hi = std::max(t_hi, s);
      } else {
        c_lo = std::min(c_lo, s);
        c_hi = std::max(c_hi, s);
      }
    }
    std::vector<int> next;
    for (int id : current) {
      const double s = pm.score(id);
      const bool treated = ds.unit(id).treatment == 1;
      const double lo = treated ? c_lo : t_lo;
      const double hi = treated ? c_hi : t_hi;
      if (s < lo) {
        d.provenance.discards.push_back(
            {id, std::string(treated ? "treated" : "control") + " score below the " +
                     (treated ? "control" : "treated") + " minimum"});
      } else if (s > hi) {
        d.provenance.discards.push_back(
            {id, std::string(treated ? "treated" : "control") + " score above the " +
                     (treated ? "control" : "treated") + " maximum"});
      } else {
        next.push_back(id);
      }
    }
    const bool stable = next.size() == current.size();
    current = std::move(next);
    if (!options.iterate || stable) break;
  }

  d.retained_ids = current;
  const auto e = experiment_for(ExperimentKind::kA, ds, d.retained_ids);
  if (e.n_treated == 0 || e.n_control == 0) {
    throw EmptyDesignError("overlap discarding removed every unit of one group");
  }
  d.provenance.support_ids = d.retained_ids;
  d.provenance.parameters = {{"stage", "overlap"},
                             {"iterate", options.iterate},
                             {"propensity_terms", pm.terms}};
  return d;
}

DesignResult caliper_match(const BlindedDataset& ds, const DesignResult& overlap,
                           const PropensityModel& pm, double caliper_sd_multiple,
                           const AcceptanceCriterion& criterion) {
  if (!(caliper_sd_multiple > 0.0) || !std::isfinite(caliper_sd_multiple)) {
    throw ConfigurationError("caliper multiple must be positive");
  }
  criterion.validate();
  const GroupIds groups = split_groups(overlap, ds);
  if (groups.treated.empty() || groups.control.empty()) {
    throw EmptyDesignError("caliper matching needs both groups");
  }
  const double caliper = caliper_sd_multiple * pm.score_sd;

  std::vector<int> treated = groups.treated;
  std::sort(treated.begin(), treated.end(), [&](int a, int b) {
    const double sa = pm.score(a), sb = pm.score(b);
    return sa != sb ? sa > sb : a < b;
  });
  struct Control {
    int id;
    double score;
    bool used;
  };
  std::vector<Control> controls;
  for (int id : groups.control) controls.push_back({id, pm.score(id), false});

  DesignResult d;
  d.method = DesignMethod::kPsCaliper;
  d.provenance.discards = overlap.provenance.discards;
  std::vector<int> kept;
  for (int t : treated) {
    const double st = pm.score(t);
    Control* best = nullptr;
    double best_gap = std::numeric_limits<double>::infinity();
    for (auto& c : controls) {
      if (c.used) continue;
      const double gap = std::abs(st - c.score);
      if (gap < best_gap || (gap == best_gap && best != nullptr && c.id < best->id)) {
        best = &c;
        best_gap = gap;
      }
    }
    if (best == nullptr || best_gap > caliper) {
      d.provenance.discards.push_back({t, "no unused control within the caliper"});
      continue;
    }
    best->used = true;
    d.pairs.push_back({t, best->id, best_gap});
    kept.push_back(t);
    kept.push_back(best->id);
  }
  for (const auto& c : controls) {
    if (!c.used) d.provenance.discards.push_back({c.id, "control not selected by caliper matching"});
  }
  if (d.pairs.empty()) throw EmptyDesignError("caliper matching formed no pairs");

  d.retained_ids = in_dataset_order(ds, std::move(kept));
  d.provenance.support_ids = overlap.retained_ids;
  d.provenance.parameters = {{"caliper_sd_multiple", caliper_sd_multiple},
                             {"caliper", caliper},
                             {"score_sd", pm.score_sd},
                             {"propensity_terms", pm.terms}};
  const int n = static_cast<int>(d.pairs.size());
  d.experiments.push_back({ExperimentKind::kD1, n, n, std::nullopt});
  d.experiments.push_back({ExperimentKind::kD2, n, n, criterion});
  return d;
}

Eigen::VectorXd covariate_vector(const UnitRecord& u, const std::vector<Covariate>& covariates) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(covariates.size()));
  for (std::size_t k = 0; k < covariates.size(); ++k) {
    v[static_cast<Eigen::Index>(k)] = u.value(covariates[k]);
  }
  return v;
}

numerics::CovarianceMatrix covariate_covariance(const BlindedDataset& ds, std::span<const int> ids,
                                                const std::vector<Covariate>& covariates) {
  if (covariates.empty()) throw ConfigurationError("no covariates given for the distance metric");
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(ids.size()),
                       static_cast<Eigen::Index>(covariates.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    rows.row(static_cast<Eigen::Index>(i)) = covariate_vector(ds.unit(ids[i]), covariates);
  }
  std::vector<std::string> labels;
  for (Covariate c : covariates) labels.emplace_back(to_string(c));
  return numerics::CovarianceMatrix::FromSample(rows, std::move(labels));
}

DesignResult optimal_match(const BlindedDataset& ds, const DesignResult& overlap,
                           const std::vector<Covariate>& covariates) {
  const GroupIds groups = split_groups(overlap, ds);
  if (groups.treated.empty() || groups.control.empty()) {
    throw EmptyDesignError("optimal matching needs both groups");
  }
  const auto cov = covariate_covariance(ds, overlap.retained_ids, covariates);
  cov.cholesky();  // singular covariance fails here

  const auto nt = static_cast<Eigen::Index>(groups.treated.size());
  const auto nc = static_cast<Eigen::Index>(groups.control.size());
  std::vector<Eigen::VectorXd> xc;
  xc.reserve(groups.control.size());
  for (int id : groups.control) xc.push_back(covariate_vector(ds.unit(id), covariates));
  Eigen::MatrixXd cost(nt, nc);
  for (Eigen::Index i = 0; i < nt; ++i) {
    const Eigen::VectorXd xt = covariate_vector(ds.unit(groups.treated[i]), covariates);
    for (Eigen::Index j = 0; j < nc; ++j) cost(i, j) = numerics::mahalanobis_sq(xt, xc[j], cov);
  }
  const auto solution = numerics::assignment_min_cost(cost);

  DesignResult d;
  d.method = DesignMethod::kOptimalPair;
  d.provenance.discards = overlap.provenance.discards;
  std::vector<bool> chosen(groups.control.size(), false);
  std::vector<int> kept = groups.treated;
  for (Eigen::Index i = 0; i < nt; ++i) {
    const int j = solution.column_of_row[i];
    chosen[j] = true;
    d.pairs.push_back({groups.treated[i], groups.control[j], cost(i, j)});
    kept.push_back(groups.control[j]);
  }
  for (std::size_t j = 0; j < groups.control.size(); ++j) {
    if (!chosen[j]) {
      d.provenance.discards.push_back({groups.control[j], "control not selected by optimal pairing"});
    }
  }
  d.retained_ids = in_dataset_order(ds, std::move(kept));
  d.provenance.support_ids = overlap.retained_ids;
  d.provenance.parameters = {{"covariates", covariate_list_json(covariates)},
                             {"total_distance", solution.total_cost}};
  const int n = static_cast<int>(nt);
  d.experiments.push_back({ExperimentKind::kE, n, n, std::nullopt});
  return d;
}

}  // namespace hypex
