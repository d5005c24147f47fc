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

// Value types produced by the design stage and their canonical JSON form.

#ifndef HYPEX_DESIGN_TYPES_H_
#define HYPEX_DESIGN_TYPES_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hypex/dataset.h"

namespace hypex {

using Json = nlohmann::json;

enum class DesignMethod { kNone, kTrim, kStratify, kPsCaliper, kOptimalPair };

enum class ExperimentKind {
  kA,   // no design: all units, Bernoulli-like
  kB,   // trimmed, completely randomized
  kC,   // stratified
  kD1,  // completely randomized, n_t = n_c
  kD2,  // rerandomized under an acceptance criterion
  kE,   // paired
};

std::string_view to_string(DesignMethod m);
DesignMethod design_method_from_string(std::string_view s);
std::string_view to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(std::string_view s);

// For a continuous covariate, |mean_t - mean_c| / sd must not exceed
// `threshold`, with sd the standard deviation over all units being
// re-randomized (so it does not move with the assignment). For a binary
// covariate the bound applies to the raw proportion difference.
struct CovariateCaliper {
  Covariate covariate = Covariate::kAge;
  double threshold = 0.0;
  friend bool operator==(const CovariateCaliper&, const CovariateCaliper&) = default;
};

struct AcceptanceCriterion {
  std::vector<CovariateCaliper> calipers;

  // 0.2 for age and height, 0.1 on the male proportion.
  static AcceptanceCriterion Default();
  // Throws ConfigurationError unless non-empty with positive thresholds.
  void validate() const;
  friend bool operator==(const AcceptanceCriterion&, const AcceptanceCriterion&) = default;
};

struct HypotheticalExperiment {
  ExperimentKind kind = ExperimentKind::kA;
  int n_treated = 0;
  int n_control = 0;
  std::optional<AcceptanceCriterion> criterion;  // D.2 only
  friend bool operator==(const HypotheticalExperiment&, const HypotheticalExperiment&) = default;
};

struct MatchedPair {
  int treated_id = 0;
  int control_id = 0;
  // Squared Mahalanobis distance for optimal pairs, absolute score
  // difference for caliper pairs.
  double distance = 0.0;
  friend bool operator==(const MatchedPair&, const MatchedPair&) = default;
};

struct DiscardRecord {
  int id = 0;
  std::string reason;
  friend bool operator==(const DiscardRecord&, const DiscardRecord&) = default;
};

struct Stratum {
  std::string label;
  std::vector<int> ids;
  double weight = 0.0;  // share of the retained treated units
  friend bool operator==(const Stratum&, const Stratum&) = default;
};

struct Provenance {
  Json parameters = Json::object();
  std::optional<std::uint64_t> seed;
  std::vector<DiscardRecord> discards;
  // Units the pairing metric was estimated on (post-overlap sample).
  std::vector<int> support_ids;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct DesignResult {
  DesignMethod method = DesignMethod::kNone;
  std::vector<int> retained_ids;
  std::vector<Stratum> strata;
  std::vector<MatchedPair> pairs;
  std::vector<HypotheticalExperiment> experiments;
  Provenance provenance;

  bool has_pairs() const { return !pairs.empty(); }
  bool has_strata() const { return !strata.empty(); }
  // Throws NotApplicableError when the design does not instantiate `kind`.
  const HypotheticalExperiment& experiment(ExperimentKind kind) const;
  bool offers(ExperimentKind kind) const;

  // Structural invariants: distinct retained ids, pair members and stratum
  // members retained, finite non-negative distances, experiment sizes
  // consistent with pairs. Throws ConsistencyError.
  void validate() const;
  // Additionally checks treatment codes against the dataset: each pair has
  // one treated and one control, experiment group sizes match.
  void validate(const BlindedDataset& ds) const;

  friend bool operator==(const DesignResult&, const DesignResult&) = default;
};

Json to_json(const DesignResult& d);
DesignResult design_from_json(const Json& j);
Json to_json(const AcceptanceCriterion& c);
AcceptanceCriterion criterion_from_json(const Json& j);

// Compact dump with sorted keys; the byte string that gets hashed.
std::string canonical_dump(const Json& j);

struct GroupIds {
  std::vector<int> treated;
  std::vector<int> control;
};
// Retained ids split by treatment, each in retained order.
GroupIds split_groups(const DesignResult& d, const BlindedDataset& ds);

}  // namespace hypex

#endif  // HYPEX_DESIGN_TYPES_H_
