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

#include "hypex/balance.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include "hypex/design.h"
#include "hypex/error.h"
#include "hypex/numerics/linalg.h"
#include "hypex/numerics/stats.h"

namespace hypex {
namespace {

struct Groups {
  std::vector<const UnitRecord*> treated;
  std::vector<const UnitRecord*> control;
};

Groups groups_of(const DesignResult& design, const BlindedDataset& ds) {
  Groups g;
  for (int id : design.retained_ids) {
    const UnitRecord& u = ds.unit(id);
    (u.treatment == 1 ? g.treated : g.control).push_back(&u);
  }
  return g;
}

template <typename F>
std::vector<double> collect(const std::vector<const UnitRecord*>& units, F f) {
  std::vector<double> out;
  out.reserve(units.size());
  for (const UnitRecord* u : units) out.push_back(f(*u));
  return out;
}

MeanSd mean_sd(std::span<const double> x) {
  return {numerics::mean(x), numerics::sample_sd(x)};
}

// KS statistic as an integer: max |i n - j m| over tie-block ends, where i
// and j count x and y values at or below the threshold.
long long ks_integer_statistic(const std::vector<std::pair<double, int>>& pooled, long long m,
                               long long n) {
  long long i = 0, j = 0, best = 0;
  for (std::size_t k = 0; k < pooled.size(); ++k) {
    (pooled[k].second == 0 ? i : j) += 1;
    if (k + 1 == pooled.size() || pooled[k + 1].first != pooled[k].first) {
      best = std::max(best, std::llabs(i * n - j * m));
    }
  }
  return best;
}

// P(max over block ends |i n - j m| >= k_obs) when the m + n pooled values
// are split uniformly at random into samples of sizes m and n.
double ks_exact_p(const std::vector<std::pair<double, int>>& pooled, long long m, long long n,
                  long long k_obs) {
  if (k_obs <= 0) return 1.0;
  const long long total = m + n;
  std::vector<double> prob(static_cast<std::size_t>(m + 1), 0.0), next(prob.size());
  prob[0] = 1.0;
  double absorbed = 0.0;
  for (long long k = 0; k < total; ++k) {
    std::fill(next.begin(), next.end(), 0.0);
    const double remaining = static_cast<double>(total - k);
    for (long long i = std::max(0LL, k - n); i <= std::min(k, m); ++i) {
      const double p = prob[static_cast<std::size_t>(i)];
      if (p == 0.0) continue;
      const long long j = k - i;
      if (i < m) next[static_cast<std::size_t>(i + 1)] += p * static_cast<double>(m - i) / remaining;
      if (j < n) next[static_cast<std::size_t>(i)] += p * static_cast<double>(n - j) / remaining;
    }
    prob.swap(next);
    const long long step = k + 1;
    const bool block_end = step == total || pooled[static_cast<std::size_t>(step)].first !=
                                                pooled[static_cast<std::size_t>(step - 1)].first;
    if (!block_end) continue;
    for (long long i = std::max(0LL, step - n); i <= std::min(step, m); ++i) {
      const long long j = step - i;
      if (std::llabs(i * n - j * m) >= k_obs) {
        absorbed += prob[static_cast<std::size_t>(i)];
        prob[static_cast<std::size_t>(i)] = 0.0;
      }
    }
  }
  return std::clamp(absorbed, 0.0, 1.0);
}

double welch_p(std::span<const double> t, std::span<const double> c, double* stat) {
  const double diff = numerics::mean(t) - numerics::mean(c);
  const double vt = numerics::sample_variance(t) / static_cast<double>(t.size());
  const double vc = numerics::sample_variance(c) / static_cast<double>(c.size());
  const double se = std::sqrt(vt + vc);
  if (se == 0.0) {
    *stat = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    return diff == 0.0 ? 1.0 : 0.0;
  }
  const auto w = numerics::welch(t, c);
  *stat = w.difference / w.standard_error;
  return numerics::student_t_two_sided_p(*stat, w.df);
}

double two_proportion_p(std::span<const double> t, std::span<const double> c, double* stat) {
  const double nt = static_cast<double>(t.size());
  const double nc = static_cast<double>(c.size());
  const double pt = numerics::mean(t);
  const double pc = numerics::mean(c);
  const double pooled = (pt * nt + pc * nc) / (nt + nc);
  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / nt + 1.0 / nc));
  if (se == 0.0) {
    *stat = 0.0;
    return 1.0;
  }
  *stat = (pt - pc) / se;
  return 2.0 * (1.0 - numerics::normal_cdf(std::abs(*stat)));
}

}  // namespace

double standardized_difference(std::span<const double> treated, std::span<const double> control) {
  if (treated.empty() || control.empty()) {
    throw EmptyInputError("standardized difference needs both groups");
  }
  const double pooled = std::sqrt(
      0.5 * (numerics::sample_variance(treated) + numerics::sample_variance(control)));
  if (pooled == 0.0) throw UndefinedSmdError("pooled standard deviation is zero");
  return (numerics::mean(treated) - numerics::mean(control)) / pooled;
}

std::vector<double> smd(const DesignResult& design, const BlindedDataset& ds,
                        const std::vector<Term>& terms) {
  const Groups g = groups_of(design, ds);
  if (g.treated.empty() || g.control.empty()) {
    throw EmptyDesignError("SMD needs both groups among the retained units");
  }
  std::vector<double> out;
  out.reserve(terms.size());
  for (const auto& term : terms) {
    const auto f = [&](const UnitRecord& u) { return term.eval(u); };
    try {
      out.push_back(standardized_difference(collect(g.treated, f), collect(g.control, f)));
    } catch (const UndefinedSmdError&) {
      throw UndefinedSmdError("SMD undefined for term '" + term.label() +
                              "': pooled standard deviation is zero");
    }
  }
  return out;
}

double kolmogorov_sf(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  if (lambda < 1.18) {
    // CDF via the theta-function form, accurate for small lambda.
    const double a = std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    double cdf = 0.0;
    for (int k = 1; k <= 20; ++k) {
      cdf += std::exp(-static_cast<double>((2 * k - 1) * (2 * k - 1)) * a);
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sf = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sf += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-300) break;
  }
  return std::clamp(sf, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> x, std::span<const double> y, KsMethod method) {
  if (x.empty() || y.empty()) throw EmptyInputError("KS test needs two non-empty samples");
  std::vector<std::pair<double, int>> pooled;
  pooled.reserve(x.size() + y.size());
  for (double v : x) pooled.emplace_back(v, 0);
  for (double v : y) pooled.emplace_back(v, 1);
  std::sort(pooled.begin(), pooled.end());
  const auto m = static_cast<long long>(x.size());
  const auto n = static_cast<long long>(y.size());
  bool ties = false;
  for (std::size_t k = 1; k < pooled.size(); ++k) ties |= pooled[k].first == pooled[k - 1].first;

  const long long k_obs = ks_integer_statistic(pooled, m, n);
  KsResult r;
  r.statistic = static_cast<double>(k_obs) / static_cast<double>(m * n);
  r.exact = method == KsMethod::kExact ||
            (method == KsMethod::kAuto && (std::min(m, n) <= 30 || ties));
  if (r.exact) {
    r.p_value = ks_exact_p(pooled, m, n, k_obs);
  } else {
    const double en = std::sqrt(static_cast<double>(m * n) / static_cast<double>(m + n));
    r.p_value = kolmogorov_sf(en * r.statistic);
  }
  return r;
}

BalanceRow balance_table(const DesignResult& design, const BlindedDataset& ds) {
  const Groups g = groups_of(design, ds);
  if (g.treated.empty() || g.control.empty()) {
    throw EmptyDesignError("balance table needs both groups");
  }
  auto age = [](const UnitRecord& u) { return static_cast<double>(u.age); };
  auto height = [](const UnitRecord& u) { return u.height; };
  auto male = [](const UnitRecord& u) { return static_cast<double>(u.sex); };
  BalanceRow row;
  row.n_treated = static_cast<int>(g.treated.size());
  row.n_control = static_cast<int>(g.control.size());
  row.n = row.n_treated + row.n_control;
  row.age_treated = mean_sd(collect(g.treated, age));
  row.age_control = mean_sd(collect(g.control, age));
  row.height_treated = mean_sd(collect(g.treated, height));
  row.height_control = mean_sd(collect(g.control, height));
  row.male_treated = numerics::mean(collect(g.treated, male));
  row.male_control = numerics::mean(collect(g.control, male));
  return row;
}

PairDistanceSummary pair_distances(const DesignResult& design, const BlindedDataset& ds,
                                   const std::vector<Covariate>& covariates, double bin_width) {
  if (!design.has_pairs()) {
    throw NotApplicableError("design '" + std::string(to_string(design.method)) +
                             "' has no pairs");
  }
  if (!(bin_width > 0.0)) throw ConfigurationError("histogram bin width must be positive");
  const std::vector<int>& support = design.provenance.support_ids.empty()
                                        ? design.retained_ids
                                        : design.provenance.support_ids;
  const auto cov = covariate_covariance(ds, support, covariates);
  PairDistanceSummary s;
  s.bin_width = bin_width;
  for (const auto& p : design.pairs) {
    const double d = numerics::mahalanobis_sq(covariate_vector(ds.unit(p.treated_id), covariates),
                                              covariate_vector(ds.unit(p.control_id), covariates),
                                              cov);
    s.distances.push_back(d);
    s.total += d;
    const auto bin = static_cast<std::size_t>(std::floor(d / bin_width));
    if (s.counts.size() <= bin) s.counts.resize(bin + 1, 0);
    ++s.counts[bin];
  }
  return s;
}

PlausibilityVerdict assess_plausibility(const DesignResult& design, const BlindedDataset& ds,
                                        double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigurationError("alpha must lie in (0, 1)");
  const Groups g = groups_of(design, ds);
  if (g.treated.empty() || g.control.empty()) {
    throw EmptyDesignError("plausibility screen needs both groups");
  }
  PlausibilityVerdict v;
  v.alpha = alpha;
  for (Covariate c : {Covariate::kAge, Covariate::kHeight, Covariate::kSex}) {
    auto f = [c](const UnitRecord& u) { return u.value(c); };
    const auto t = collect(g.treated, f);
    const auto k = collect(g.control, f);
    CovariateTest test;
    test.covariate = std::string(to_string(c));
    if (is_binary(c)) {
      test.test = "two_proportion_z";
      test.p_value = two_proportion_p(t, k, &test.statistic);
    } else {
      test.test = "welch_t";
      test.p_value = welch_p(t, k, &test.statistic);
    }
    if (test.p_value < alpha) v.plausible = false;
    v.tests.push_back(std::move(test));
  }
  return v;
}

BalanceReport balance_report(const DesignResult& design, const BlindedDataset& ds,
                             const BalanceOptions& options) {
  BalanceReport r;
  r.terms = term_labels(options.terms);
  const DesignResult full = design_none(ds);
  r.smd_before = smd(full, ds, options.terms);
  r.smd_after = smd(design, ds, options.terms);
  for (Covariate c : {Covariate::kAge, Covariate::kHeight}) {
    for (const auto* phase : {&full, &design}) {
      const Groups g = groups_of(*phase, ds);
      auto f = [c](const UnitRecord& u) { return u.value(c); };
      r.ks.push_back({std::string(to_string(c)), phase == &full ? "before" : "after",
                      ks_two_sample(collect(g.treated, f), collect(g.control, f),
                                    options.ks_method)});
    }
  }
  r.table = balance_table(design, ds);
  if (design.has_pairs()) {
    r.pair_histogram = pair_distances(design, ds, options.distance_covariates, options.bin_width);
  }
  r.verdict = assess_plausibility(design, ds, options.alpha);
  return r;
}

Json to_json(const BalanceRow& row) {
  auto ms = [](const MeanSd& m) { return Json{{"mean", m.mean}, {"sd", m.sd}}; };
  return Json{{"n", row.n},
              {"n_treated", row.n_treated},
              {"n_control", row.n_control},
              {"age", {{"treated", ms(row.age_treated)}, {"control", ms(row.age_control)}}},
              {"height",
               {{"treated", ms(row.height_treated)}, {"control", ms(row.height_control)}}},
              {"male", {{"treated", row.male_treated}, {"control", row.male_control}}}};
}

Json to_json(const BalanceReport& report) {
  Json smd_rows = Json::array();
  for (std::size_t k = 0; k < report.terms.size(); ++k) {
    smd_rows.push_back({{"term", report.terms[k]},
                        {"before", report.smd_before[k]},
                        {"after", report.smd_after[k]}});
  }
  Json ks = Json::array();
  for (const auto& row : report.ks) {
    ks.push_back({{"covariate", row.covariate},
                  {"phase", row.phase},
                  {"statistic", row.result.statistic},
                  {"p_value", row.result.p_value},
                  {"exact", row.result.exact}});
  }
  Json tests = Json::array();
  for (const auto& t : report.verdict.tests) {
    tests.push_back({{"covariate", t.covariate},
                     {"test", t.test},
                     {"statistic", t.statistic},
                     {"p_value", t.p_value}});
  }
  Json j = {{"smd", smd_rows},
            {"ks", ks},
            {"table", to_json(report.table)},
            {"plausibility",
             {{"alpha", report.verdict.alpha},
              {"plausible", report.verdict.plausible},
              {"tests", tests}}}};
  if (report.pair_histogram) {
    const auto& h = *report.pair_histogram;
    j["pair_distances"] = {{"distances", h.distances},
                           {"total", h.total},
                           {"bin_width", h.bin_width},
                           {"counts", h.counts},
                           {"max", h.distances.empty()
                                       ? 0.0
                                       : *std::max_element(h.distances.begin(),
                                                           h.distances.end())}};
  }
  return j;
}

}  // namespace hypex
