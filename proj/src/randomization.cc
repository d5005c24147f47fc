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

#include "hypex/randomization.h"

#include <cmath>
#include <numeric>
#include <sstream>

#include "hypex/error.h"
#include "hypex/numerics/stats.h"

namespace hypex {
namespace {

constexpr std::uint64_t kProbeStream = 1ULL << 63;

double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// Calls visit(chosen) for every k-subset of `items`, lexicographic order.
void for_each_subset(const std::vector<int>& items, int k,
                     const std::function<void(const std::vector<int>&)>& visit) {
  const int m = static_cast<int>(items.size());
  std::vector<int> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<int> chosen(static_cast<std::size_t>(k));
  for (;;) {
    for (int a = 0; a < k; ++a) chosen[a] = items[idx[a]];
    visit(chosen);
    int a = k - 1;
    while (a >= 0 && idx[a] == m - k + a) --a;
    if (a < 0) return;
    ++idx[a];
    for (int b = a + 1; b < k; ++b) idx[b] = idx[b - 1] + 1;
  }
}

}  // namespace

RandomizationScheme RandomizationScheme::Make(const AnalysisDataset& ad, ExperimentKind kind,
                                              std::uint64_t seed) {
  const DesignResult& design = ad.design();
  const HypotheticalExperiment& experiment = design.experiment(kind);

  RandomizationScheme s;
  s.kind_ = kind;
  const auto units = ad.units();
  s.observed_.resize(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) {
    s.observed_[i] = static_cast<std::uint8_t>(units[i].treatment);
    s.n_treated_ += units[i].treatment;
  }
  const int n = static_cast<int>(units.size());
  if (s.n_treated_ == 0 || s.n_treated_ == n) {
    throw EmptyDesignError("randomization needs both groups");
  }

  switch (kind) {
    case ExperimentKind::kE: {
      if (!design.has_pairs()) throw ConsistencyError("experiment E without pairs");
      for (const auto& p : design.pairs) {
        s.pairs_.emplace_back(static_cast<int>(ad.position(p.treated_id)),
                              static_cast<int>(ad.position(p.control_id)));
      }
      if (static_cast<int>(s.pairs_.size()) * 2 != n) {
        throw ConsistencyError("paired experiment must cover every analysis unit");
      }
      break;
    }
    case ExperimentKind::kC: {
      if (!design.has_strata()) throw ConsistencyError("experiment C without strata");
      for (const auto& st : design.strata) {
        std::vector<int> pos;
        int nt = 0;
        for (int id : st.ids) {
          pos.push_back(static_cast<int>(ad.position(id)));
          nt += ad.unit(id).treatment;
        }
        s.strata_.push_back(std::move(pos));
        s.stratum_treated_.push_back(nt);
      }
      break;
    }
    default: {
      std::vector<int> all(static_cast<std::size_t>(n));
      std::iota(all.begin(), all.end(), 0);
      s.strata_.push_back(std::move(all));
      s.stratum_treated_.push_back(s.n_treated_);
      break;
    }
  }

  if (kind == ExperimentKind::kD2) {
    const AcceptanceCriterion& criterion = *experiment.criterion;
    for (const auto& c : criterion.calipers) {
      std::vector<double> v;
      v.reserve(units.size());
      for (const auto& u : units) v.push_back(u.value(c.covariate));
      double scale = 1.0;
      if (!is_binary(c.covariate)) {
        const double sd = numerics::sample_sd(v);
        if (sd > 0.0) scale = sd;
      }
      s.criterion_total_.push_back(std::accumulate(v.begin(), v.end(), 0.0));
      s.criterion_values_.push_back(std::move(v));
      s.criterion_scale_.push_back(scale);
      s.criterion_threshold_.push_back(c.threshold);
    }
    numerics::Rng probe = numerics::Rng::Stream(seed, kProbeStream);
    int accepted = 0;
    for (int t = 0; t < kCriterionProbeTries; ++t) {
      if (s.accepts(s.draw_unrestricted(probe))) ++accepted;
    }
    s.acceptance_rate_ = static_cast<double>(accepted) / kCriterionProbeTries;
    if (*s.acceptance_rate_ < kMinAcceptanceRate) {
      std::ostringstream msg;
      msg << "rerandomization criterion accepts " << accepted << " of " << kCriterionProbeTries
          << " probe assignments (below " << kMinAcceptanceRate << ")";
      throw CriterionTooTightError(msg.str());
    }
  }
  return s;
}

Assignment RandomizationScheme::draw_unrestricted(numerics::Rng& rng) const {
  Assignment w(observed_.size(), 0);
  if (kind_ == ExperimentKind::kE) {
    for (const auto& [a, b] : pairs_) {
      const bool first = (rng() >> 63) != 0;
      w[static_cast<std::size_t>(first ? a : b)] = 1;
    }
    return w;
  }
  std::vector<int> pool;
  for (std::size_t s = 0; s < strata_.size(); ++s) {
    pool = strata_[s];
    const int m = static_cast<int>(pool.size());
    const int k = stratum_treated_[s];
    for (int i = 0; i < k; ++i) {
      const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(m - i)));
      std::swap(pool[i], pool[j]);
      w[static_cast<std::size_t>(pool[i])] = 1;
    }
  }
  return w;
}

Assignment RandomizationScheme::draw(numerics::Rng& rng) const {
  for (;;) {
    Assignment w = draw_unrestricted(rng);
    if (accepts(w)) return w;
  }
}

bool RandomizationScheme::accepts(const Assignment& w) const {
  if (criterion_values_.empty()) return true;
  const double nt = n_treated_;
  const double nc = static_cast<double>(w.size()) - nt;
  for (std::size_t r = 0; r < criterion_values_.size(); ++r) {
    const auto& v = criterion_values_[r];
    double sum_t = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i]) sum_t += v[i];
    }
    const double gap = std::abs(sum_t / nt - (criterion_total_[r] - sum_t) / nc);
    if (gap / criterion_scale_[r] > criterion_threshold_[r]) return false;
  }
  return true;
}

void RandomizationScheme::enumerate(const std::function<void(const Assignment&)>& visit,
                                    std::uint64_t limit) const {
  if (kind_ == ExperimentKind::kE) {
    if (pairs_.size() > 40 || (1ULL << pairs_.size()) > limit) {
      throw DomainError("too many paired assignments to enumerate");
    }
    const std::uint64_t total = 1ULL << pairs_.size();
    Assignment w(observed_.size(), 0);
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      std::fill(w.begin(), w.end(), 0);
      for (std::size_t k = 0; k < pairs_.size(); ++k) {
        const bool first = ((mask >> k) & 1ULL) != 0;
        w[static_cast<std::size_t>(first ? pairs_[k].first : pairs_[k].second)] = 1;
      }
      visit(w);
    }
    return;
  }
  double log_count = 0.0;
  for (std::size_t s = 0; s < strata_.size(); ++s) {
    log_count += log_binomial(static_cast<int>(strata_[s].size()), stratum_treated_[s]);
  }
  if (log_count > std::log(static_cast<double>(limit))) {
    throw DomainError("too many assignments to enumerate");
  }
  Assignment w(observed_.size(), 0);
  std::function<void(std::size_t)> recurse = [&](std::size_t s) {
    if (s == strata_.size()) {
      if (accepts(w)) visit(w);
      return;
    }
    for_each_subset(strata_[s], stratum_treated_[s], [&](const std::vector<int>& chosen) {
      for (int p : strata_[s]) w[static_cast<std::size_t>(p)] = 0;
      for (int p : chosen) w[static_cast<std::size_t>(p)] = 1;
      recurse(s + 1);
    });
    for (int p : strata_[s]) w[static_cast<std::size_t>(p)] = 0;
  };
  recurse(0);
}

}  // namespace hypex
