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
#include <map>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "hypex/design.h"
#include "hypex/error.h"
#include "hypex/lock.h"
#include "hypex/terms.h"
#include "support.h"

namespace hypex {
namespace {

const std::vector<Covariate> kAll = {Covariate::kAge, Covariate::kHeight, Covariate::kSex};

class DesignTest : public ::testing::Test {
 protected:
  DesignTest()
      : ds_(testing::synthetic_fev()),
        pm_(fit_propensity(ds_, default_propensity_candidates())),
        overlap_(discard_nonoverlap(ds_, pm_)) {}

  BlindedDataset ds_;
  PropensityModel pm_;
  DesignResult overlap_;
};

bool contains_all(const std::vector<int>& outer, const std::vector<int>& inner) {
  const std::set<int> s(outer.begin(), outer.end());
  return std::all_of(inner.begin(), inner.end(), [&](int id) { return s.contains(id); });
}

TEST(TermTest, ParsesAndEvaluates) {
  const UnitRecord u{1, 12, 60.0, 1, 0};
  EXPECT_DOUBLE_EQ(Term::Parse("age^2").eval(u), 144.0);
  EXPECT_DOUBLE_EQ(Term::Parse("sex*height").eval(u), 60.0);
  EXPECT_EQ(Term::Parse("height").label(), "height");
  EXPECT_TRUE(Term::Parse("sex").is_binary());
  EXPECT_THROW(Term::Parse("weight"), ConfigurationError);
  EXPECT_THROW(Term::Parse("age^"), ConfigurationError);
  EXPECT_EQ(balance_terms().size(), 7u);
}

TEST(DesignNoneTest, KeepsEveryUnit) {
  const auto ds = testing::synthetic_fev({.n = 50});
  const auto d = design_none(ds);
  EXPECT_EQ(d.retained_ids.size(), 50u);
  EXPECT_TRUE(d.offers(ExperimentKind::kA));
  EXPECT_THROW(d.experiment(ExperimentKind::kE), NotApplicableError);
}

TEST(TrimTest, RetainsExactlyTheUnitsInsideTheirSexRanges) {
  const auto ds = testing::synthetic_fev();
  const auto d = trim_by_ranges(ds, default_trim_rules());
  const std::set<int> kept(d.retained_ids.begin(), d.retained_ids.end());
  for (const auto& u : ds.units()) {
    const bool inside = u.sex == 0 ? (u.age >= 10 && u.age <= 18 && u.height >= 60 && u.height <= 69)
                                    : (u.age >= 9 && u.age <= 18 && u.height >= 58 && u.height <= 72);
    EXPECT_EQ(kept.contains(u.id), inside) << "unit " << u.id;
  }
  EXPECT_EQ(d.provenance.discards.size() + d.retained_ids.size(), ds.size());
  EXPECT_TRUE(d.offers(ExperimentKind::kB));
}

TEST(TrimTest, RejectsBadRules) {
  const auto ds = testing::synthetic_fev({.n = 50});
  TrimRule reversed;
  reversed.ranges[Covariate::kAge] = {18, 10};
  EXPECT_THROW(trim_by_ranges(ds, {reversed}), ConfigurationError);
  TrimRule any;
  EXPECT_THROW(trim_by_ranges(ds, {any, any}), ConfigurationError);
  TrimRule girls;
  girls.sex = 0;
  EXPECT_THROW(trim_by_ranges(ds, {girls}), ConfigurationError);  // boys match no rule
  EXPECT_THROW(trim_by_ranges(ds, {}), ConfigurationError);
}

TEST(SturgesTest, EqualWidthBins) {
  std::vector<double> x(654);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 3.0 + static_cast<double>(i % 17);
  const auto cuts = sturges_cutpoints(x);
  const int k = static_cast<int>(std::ceil(std::log2(654.0) + 1.0));
  ASSERT_EQ(static_cast<int>(cuts.size()), k - 1);
  for (int j = 1; j < k; ++j) EXPECT_NEAR(cuts[j - 1], 3.0 + j * 16.0 / k, 1e-12);
}

int bin_of(const std::vector<double>& cuts, double v) {
  return static_cast<int>(std::lower_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
}

TEST(StratifyTest, StrataShareBinsAndHoldBothGroups) {
  const auto ds = testing::synthetic_fev();
  const auto opts = default_stratify_options(ds);
  const auto d = coarsened_stratify(ds, opts);
  ASSERT_TRUE(d.has_strata());
  std::size_t members = 0;
  double weight = 0.0, treated_total = 0.0;
  for (const auto& s : d.strata) {
    members += s.ids.size();
    weight += s.weight;
    std::set<std::vector<int>> keys;
    int nt = 0, nc = 0;
    for (int id : s.ids) {
      const auto& u = ds.unit(id);
      std::vector<int> key = {u.sex};
      for (const auto& b : opts.bins) key.push_back(bin_of(b.cutpoints, u.value(b.covariate)));
      keys.insert(key);
      (u.treatment ? nt : nc) += 1;
    }
    EXPECT_EQ(keys.size(), 1u) << s.label;
    EXPECT_GT(nt, 0);
    EXPECT_GT(nc, 0);
    treated_total += nt;
  }
  EXPECT_EQ(members, d.retained_ids.size());
  EXPECT_NEAR(weight, 1.0, 1e-12);
  for (const auto& s : d.strata) {
    double nt = 0;
    for (int id : s.ids) nt += ds.unit(id).treatment;
    EXPECT_NEAR(s.weight, nt / treated_total, 1e-12);
  }
  EXPECT_TRUE(d.offers(ExperimentKind::kC));
}

TEST(StratifyTest, RejectsUnsortedCutpoints) {
  const auto ds = testing::synthetic_fev({.n = 100});
  StratifyOptions o;
  o.bins = {{Covariate::kAge, {10, 8}}};
  EXPECT_THROW(coarsened_stratify(ds, o), ConfigurationError);
}

TEST(PropensityTest, LrtHoldsItsLevelWhenTruthIsLinear) {
  // Treatment is logistic-linear in age, so the richer candidate is rejected
  // at about the nominal 5% rate. P(Binomial(40, 0.05) >= 7) < 0.004.
  int richer = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto ds = testing::synthetic_fev({.seed = seed});
    const auto pm = fit_propensity(ds, default_propensity_candidates());
    ASSERT_EQ(pm.tests.size(), 1u);
    EXPECT_EQ(pm.tests[0].df, 4);
    EXPECT_EQ(pm.selected == 0, pm.tests[0].p_value >= 0.05);
    EXPECT_EQ(pm.terms, pm.selected == 0 ? term_labels(main_effect_terms())
                                         : term_labels(balance_terms()));
    EXPECT_EQ(pm.ids.size(), ds.size());
    for (double sc : pm.scores) {
      EXPECT_GT(sc, 0.0);
      EXPECT_LT(sc, 1.0);
    }
    richer += pm.selected == 1 ? 1 : 0;
  }
  EXPECT_LE(richer, 6);
}

TEST(PropensityTest, LrtPicksRicherModelUnderCurvature) {
  // Exposure depends on |age - 11| so the quadratic terms matter.
  std::vector<UnitRecord> units;
  std::vector<double> y;
  std::uint64_t state = 7;
  auto next = [&] {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return static_cast<double>(state >> 11) * 0x1.0p-53;
  };
  for (int i = 0; i < 600; ++i) {
    UnitRecord u;
    u.id = i + 1;
    u.age = 3 + static_cast<int>(next() * 17);
    u.sex = next() < 0.5 ? 1 : 0;
    u.height = 46 + 1.6 * (u.age - 3) + 4 * (next() - 0.5);
    const double eta = -3.0 + 0.12 * (u.age - 11) * (u.age - 11);
    u.treatment = next() < 1 / (1 + std::exp(-eta)) ? 1 : 0;
    units.push_back(u);
    y.push_back(1.0);
  }
  const auto ds = BlindedDataset::FromUnits(units, y);
  const auto pm = fit_propensity(ds, default_propensity_candidates());
  EXPECT_EQ(pm.selected, 1u);
  EXPECT_LT(pm.tests[0].p_value, 0.05);
}

TEST(PropensityTest, CandidatesMustNest) {
  const auto ds = testing::synthetic_fev({.n = 200});
  EXPECT_THROW(fit_propensity(ds, {parse_terms({"age", "sex"}), parse_terms({"age", "height"})}),
               ConfigurationError);
}

TEST_F(DesignTest, OverlapUsesPreDiscardBounds) {
  double tmin = 1, tmax = 0, cmin = 1, cmax = 0;
  for (std::size_t i = 0; i < pm_.ids.size(); ++i) {
    const bool t = ds_.unit(pm_.ids[i]).treatment == 1;
    (t ? tmin : cmin) = std::min(t ? tmin : cmin, pm_.scores[i]);
    (t ? tmax : cmax) = std::max(t ? tmax : cmax, pm_.scores[i]);
  }
  const std::set<int> kept(overlap_.retained_ids.begin(), overlap_.retained_ids.end());
  for (std::size_t i = 0; i < pm_.ids.size(); ++i) {
    const bool t = ds_.unit(pm_.ids[i]).treatment == 1;
    const double s = pm_.scores[i];
    const bool inside = t ? (s >= cmin && s <= cmax) : (s >= tmin && s <= tmax);
    EXPECT_EQ(kept.contains(pm_.ids[i]), inside);
  }
  EXPECT_EQ(overlap_.provenance.discards.size(), ds_.size() - overlap_.retained_ids.size());
  EXPECT_EQ(overlap_.provenance.support_ids, overlap_.retained_ids);
}

// Greedy caliper matching written out independently.
std::vector<std::pair<int, int>> greedy_oracle(const BlindedDataset& ds, const DesignResult& overlap,
                                               const PropensityModel& pm, double caliper) {
  std::vector<int> t, c;
  for (int id : overlap.retained_ids) (ds.unit(id).treatment ? t : c).push_back(id);
  std::stable_sort(t.begin(), t.end(), [&](int a, int b) {
    return pm.score(a) > pm.score(b) || (pm.score(a) == pm.score(b) && a < b);
  });
  std::sort(c.begin(), c.end());
  std::set<int> used;
  std::vector<std::pair<int, int>> out;
  for (int a : t) {
    int best = -1;
    double gap = INFINITY;
    for (int b : c) {
      if (used.contains(b)) continue;
      const double g = std::abs(pm.score(a) - pm.score(b));
      if (g < gap) {
        gap = g;
        best = b;
      }
    }
    if (best >= 0 && gap <= caliper) {
      used.insert(best);
      out.emplace_back(a, best);
    }
  }
  return out;
}

TEST_F(DesignTest, CaliperMatchingEqualsGreedyOracle) {
  for (double mult : {1.0, 0.2, 0.02}) {
    const auto d = caliper_match(ds_, overlap_, pm_, mult);
    const auto oracle = greedy_oracle(ds_, overlap_, pm_, mult * pm_.score_sd);
    ASSERT_EQ(d.pairs.size(), oracle.size()) << mult;
    std::set<int> controls;
    for (std::size_t k = 0; k < oracle.size(); ++k) {
      EXPECT_EQ(d.pairs[k].treated_id, oracle[k].first);
      EXPECT_EQ(d.pairs[k].control_id, oracle[k].second);
      EXPECT_LE(d.pairs[k].distance, mult * pm_.score_sd);
      EXPECT_TRUE(controls.insert(d.pairs[k].control_id).second);
    }
    EXPECT_TRUE(d.offers(ExperimentKind::kD1));
    ASSERT_TRUE(d.experiment(ExperimentKind::kD2).criterion.has_value());
    EXPECT_NO_THROW(d.validate(ds_));
  }
}

TEST_F(DesignTest, VanishingCaliperEmptiesTheDesign) {
  // Break every covariate tie so that no two scores coincide.
  std::vector<UnitRecord> units(ds_.units().begin(), ds_.units().end());
  for (auto& u : units) u.height += 1e-4 * u.id;
  const auto ds = BlindedDataset::FromUnits(units, std::vector<double>(units.size(), 1.0));
  const auto pm = fit_propensity(ds, default_propensity_candidates());
  const auto overlap = discard_nonoverlap(ds, pm);
  EXPECT_THROW(caliper_match(ds, overlap, pm, 1e-15), EmptyDesignError);
  EXPECT_THROW(caliper_match(ds_, overlap_, pm_, 0.0), ConfigurationError);
}

TEST_F(DesignTest, MonotonePipeline) {
  const auto cal = caliper_match(ds_, overlap_, pm_, 1.0);
  const auto opt = optimal_match(ds_, overlap_, kAll);
  const auto all = design_none(ds_);
  EXPECT_TRUE(contains_all(all.retained_ids, overlap_.retained_ids));
  EXPECT_TRUE(contains_all(overlap_.retained_ids, cal.retained_ids));
  EXPECT_TRUE(contains_all(overlap_.retained_ids, opt.retained_ids));
}

TEST_F(DesignTest, OptimalPairsEveryRetainedTreatedUnit) {
  const auto d = optimal_match(ds_, overlap_, kAll);
  int nt = 0;
  for (int id : overlap_.retained_ids) nt += ds_.unit(id).treatment;
  EXPECT_EQ(static_cast<int>(d.pairs.size()), nt);
  EXPECT_EQ(d.experiment(ExperimentKind::kE).n_treated, nt);
  const auto cov = covariate_covariance(ds_, overlap_.retained_ids, kAll);
  double total = 0.0;
  for (const auto& p : d.pairs) {
    const double d2 = numerics::mahalanobis_sq(covariate_vector(ds_.unit(p.treated_id), kAll),
                                               covariate_vector(ds_.unit(p.control_id), kAll), cov);
    EXPECT_NEAR(p.distance, d2, 1e-9);
    total += d2;
  }
  EXPECT_NEAR(d.provenance.parameters.at("total_distance").get<double>(), total, 1e-8);
}

TEST_F(DesignTest, OptimalNeverWorseThanCaliperPairing) {
  const auto cal = caliper_match(ds_, overlap_, pm_, 1.0);
  DesignResult support;
  support.retained_ids = cal.retained_ids;
  const auto opt = optimal_match(ds_, support, kAll);
  const auto cov = covariate_covariance(ds_, cal.retained_ids, kAll);
  double cal_total = 0.0, opt_total = 0.0;
  for (const auto& p : cal.pairs) {
    cal_total += numerics::mahalanobis_sq(covariate_vector(ds_.unit(p.treated_id), kAll),
                                          covariate_vector(ds_.unit(p.control_id), kAll), cov);
  }
  for (const auto& p : opt.pairs) opt_total += p.distance;
  EXPECT_LE(opt_total, cal_total + 1e-9);
}

TEST(OptimalMatchTest, SmallInstanceAgainstEnumeration) {
  const auto ds = testing::make_dataset({1, 1, 1, 0, 0, 0, 0, 0}, std::vector<double>(8, 1.0),
                                        {10, 12, 15, 9, 11, 13, 16, 12},
                                        {55, 60, 66, 54, 58, 61, 67, 59}, {0, 1, 0, 1, 0, 1, 0, 1});
  const auto d = optimal_match(ds, design_none(ds), kAll);
  const auto cov = covariate_covariance(ds, design_none(ds).retained_ids, kAll);
  const std::vector<int> t = {1, 2, 3};
  std::vector<int> c = {4, 5, 6, 7, 8};
  double best = INFINITY;
  do {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
      s += numerics::mahalanobis_sq(covariate_vector(ds.unit(t[i]), kAll),
                                    covariate_vector(ds.unit(c[i]), kAll), cov);
    }
    best = std::min(best, s);
  } while (std::next_permutation(c.begin(), c.end()));
  double got = 0.0;
  for (const auto& p : d.pairs) got += p.distance;
  EXPECT_NEAR(got, best, 1e-9);
}

TEST_F(DesignTest, JsonRoundTripAndLock) {
  const auto d = optimal_match(ds_, overlap_, kAll);
  const auto back = design_from_json(to_json(d));
  EXPECT_EQ(back, d);
  EXPECT_EQ(canonical_dump(to_json(back)), canonical_dump(to_json(d)));

  const Json protocol = {{"seed", 1}};
  const auto lock = freeze(d, protocol, "2026-01-01T00:00:00Z");
  EXPECT_TRUE(lock.verifies(d));
  EXPECT_EQ(lock.hash(), freeze(d, protocol).hash());  // timestamp is not hashed
  EXPECT_EQ(DesignLock::FromJson(lock.to_json()).hash(), lock.hash());

  auto edited = d;
  std::swap(edited.pairs[0].control_id, edited.pairs[1].control_id);
  EXPECT_FALSE(lock.verifies(edited));
  EXPECT_THROW(unseal_outcomes(ds_, lock, edited), TamperError);
  EXPECT_NE(freeze(d, Json{{"seed", 2}}).hash(), lock.hash());

  const auto ad = unseal_outcomes(ds_, lock, d);
  EXPECT_EQ(ad.size(), d.retained_ids.size());
  EXPECT_EQ(ad.units()[0].id, d.retained_ids[0]);
}

TEST(DesignJsonTest, MalformedDocumentsAreRejected) {
  EXPECT_THROW(design_from_json(Json::object()), ParseError);
  EXPECT_THROW(DesignLock::FromJson(Json{{"design_id", "x"}}), ParseError);
  const auto ds = testing::synthetic_fev({.n = 40});
  Json j = to_json(design_none(ds));
  EXPECT_NO_THROW(design_from_json(j));
  j["notes"] = "extra";
  EXPECT_THROW(design_from_json(j), ParseError);
  j.erase("notes");
  j["provenance"]["comment"] = 1;
  EXPECT_THROW(design_from_json(j), ParseError);
}

}  // namespace
}  // namespace hypex
