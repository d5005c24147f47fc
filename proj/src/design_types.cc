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

#include "hypex/design_types.h"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <set>
#include <unordered_set>

#include "hypex/error.h"

namespace hypex {
namespace {

constexpr std::pair<DesignMethod, std::string_view> kMethodNames[] = {
    {DesignMethod::kNone, "none"},
    {DesignMethod::kTrim, "trim"},
    {DesignMethod::kStratify, "stratify"},
    {DesignMethod::kPsCaliper, "ps-caliper"},
    {DesignMethod::kOptimalPair, "optimal-pair"},
};

constexpr std::pair<ExperimentKind, std::string_view> kKindNames[] = {
    {ExperimentKind::kA, "A"},   {ExperimentKind::kB, "B"},   {ExperimentKind::kC, "C"},
    {ExperimentKind::kD1, "D.1"}, {ExperimentKind::kD2, "D.2"}, {ExperimentKind::kE, "E"},
};

template <typename T>
T get_field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw ParseError(std::string("design document: missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("design document: bad field '") + key + "': " + e.what());
  }
}

// Unknown keys would be dropped on re-serialization and escape the lock hash.
void only_keys(const Json& j, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ParseError("design document: expected an object");
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
      throw ParseError("design document: unknown field '" + k + "'");
    }
  }
}

Json experiment_json(const HypotheticalExperiment& e) {
  Json j = {{"kind", to_string(e.kind)},
            {"n_treated", e.n_treated},
            {"n_control", e.n_control}};
  if (e.criterion) j["criterion"] = to_json(*e.criterion);
  return j;
}

}  // namespace

std::string_view to_string(DesignMethod m) {
  for (const auto& [k, v] : kMethodNames) {
    if (k == m) return v;
  }
  return "?";
}

DesignMethod design_method_from_string(std::string_view s) {
  for (const auto& [k, v] : kMethodNames) {
    if (v == s) return k;
  }
  throw ConfigurationError("unknown design method '" + std::string(s) +
                           "' (expected none, trim, stratify, ps-caliper, optimal-pair)");
}

std::string_view to_string(ExperimentKind k) {
  for (const auto& [kind, v] : kKindNames) {
    if (kind == k) return v;
  }
  return "?";
}

ExperimentKind experiment_kind_from_string(std::string_view s) {
  for (const auto& [k, v] : kKindNames) {
    if (v == s) return k;
  }
  throw ConfigurationError("unknown experiment kind '" + std::string(s) + "'");
}

AcceptanceCriterion AcceptanceCriterion::Default() {
  return {{{Covariate::kAge, 0.2}, {Covariate::kHeight, 0.2}, {Covariate::kSex, 0.1}}};
}

void AcceptanceCriterion::validate() const {
  if (calipers.empty()) throw ConfigurationError("acceptance criterion has no calipers");
  std::set<Covariate> seen;
  for (const auto& c : calipers) {
    if (!(c.threshold > 0.0) || !std::isfinite(c.threshold)) {
      throw ConfigurationError("caliper for " + std::string(to_string(c.covariate)) +
                               " must be positive");
    }
    if (!seen.insert(c.covariate).second) {
      throw ConfigurationError("duplicate caliper for " + std::string(to_string(c.covariate)));
    }
  }
}

const HypotheticalExperiment& DesignResult::experiment(ExperimentKind kind) const {
  for (const auto& e : experiments) {
    if (e.kind == kind) return e;
  }
  throw NotApplicableError("design '" + std::string(to_string(method)) +
                           "' does not instantiate experiment " + std::string(to_string(kind)));
}

bool DesignResult::offers(ExperimentKind kind) const {
  for (const auto& e : experiments) {
    if (e.kind == kind) return true;
  }
  return false;
}

void DesignResult::validate() const {
  std::unordered_set<int> retained;
  for (int id : retained_ids) {
    if (!retained.insert(id).second) {
      throw ConsistencyError("retained id " + std::to_string(id) + " appears twice");
    }
  }
  std::unordered_set<int> paired;
  for (const auto& p : pairs) {
    if (!retained.contains(p.treated_id) || !retained.contains(p.control_id)) {
      throw ConsistencyError("pair (" + std::to_string(p.treated_id) + ", " +
                             std::to_string(p.control_id) + ") has an unretained member");
    }
    if (!paired.insert(p.treated_id).second || !paired.insert(p.control_id).second) {
      throw ConsistencyError("a unit appears in more than one pair");
    }
    if (!(p.distance >= 0.0) || !std::isfinite(p.distance)) {
      throw ConsistencyError("pair distance must be finite and non-negative");
    }
  }
  std::unordered_set<int> stratified;
  for (const auto& s : strata) {
    for (int id : s.ids) {
      if (!retained.contains(id)) {
        throw ConsistencyError("stratum '" + s.label + "' lists unretained id " +
                               std::to_string(id));
      }
      if (!stratified.insert(id).second) {
        throw ConsistencyError("id " + std::to_string(id) + " belongs to two strata");
      }
    }
    if (!(s.weight >= 0.0)) throw ConsistencyError("stratum weight must be non-negative");
  }
  for (const auto& e : experiments) {
    if (e.n_treated < 0 || e.n_control < 0) {
      throw ConsistencyError("negative group size");
    }
    if ((e.kind == ExperimentKind::kD1 || e.kind == ExperimentKind::kD2 ||
         e.kind == ExperimentKind::kE) &&
        e.n_treated != e.n_control) {
      throw ConsistencyError("experiment " + std::string(to_string(e.kind)) +
                             " requires equal group sizes");
    }
    if (e.kind == ExperimentKind::kE &&
        static_cast<std::size_t>(e.n_treated) != pairs.size()) {
      throw ConsistencyError("experiment E requires one pair per treated unit");
    }
    if (e.kind == ExperimentKind::kD2) {
      if (!e.criterion) throw ConsistencyError("experiment D.2 requires an acceptance criterion");
      e.criterion->validate();
    }
    if (static_cast<std::size_t>(e.n_treated + e.n_control) != retained_ids.size()) {
      throw ConsistencyError("experiment group sizes do not add up to the retained count");
    }
  }
}

void DesignResult::validate(const BlindedDataset& ds) const {
  validate();
  for (int id : retained_ids) {
    if (!ds.contains(id)) {
      throw ConsistencyError("retained id " + std::to_string(id) + " is not in the dataset");
    }
  }
  for (const auto& p : pairs) {
    if (ds.unit(p.treated_id).treatment != 1 || ds.unit(p.control_id).treatment != 0) {
      throw ConsistencyError("pair (" + std::to_string(p.treated_id) + ", " +
                             std::to_string(p.control_id) +
                             ") does not join one treated and one control unit");
    }
  }
  const GroupIds groups = split_groups(*this, ds);
  for (const auto& e : experiments) {
    if (static_cast<std::size_t>(e.n_treated) != groups.treated.size() ||
        static_cast<std::size_t>(e.n_control) != groups.control.size()) {
      throw ConsistencyError("experiment " + std::string(to_string(e.kind)) +
                             " group sizes disagree with the dataset");
    }
  }
}

Json to_json(const AcceptanceCriterion& c) {
  Json calipers = Json::array();
  for (const auto& k : c.calipers) {
    calipers.push_back({{"covariate", to_string(k.covariate)}, {"threshold", k.threshold}});
  }
  return Json{{"calipers", calipers}};
}

AcceptanceCriterion criterion_from_json(const Json& j) {
  AcceptanceCriterion c;
  only_keys(j, {"calipers"});
  for (const auto& k : get_field<Json>(j, "calipers")) {
    only_keys(k, {"covariate", "threshold"});
    c.calipers.push_back({covariate_from_string(get_field<std::string>(k, "covariate")),
                          get_field<double>(k, "threshold")});
  }
  return c;
}

Json to_json(const DesignResult& d) {
  Json strata = Json::array();
  for (const auto& s : d.strata) {
    strata.push_back({{"label", s.label}, {"ids", s.ids}, {"weight", s.weight}});
  }
  Json pairs = Json::array();
  for (const auto& p : d.pairs) {
    pairs.push_back({{"treated", p.treated_id}, {"control", p.control_id}, {"distance", p.distance}});
  }
  Json experiments = Json::array();
  for (const auto& e : d.experiments) experiments.push_back(experiment_json(e));
  Json discards = Json::array();
  for (const auto& r : d.provenance.discards) {
    discards.push_back({{"id", r.id}, {"reason", r.reason}});
  }
  Json provenance = {{"parameters", d.provenance.parameters},
                     {"discards", discards},
                     {"support_ids", d.provenance.support_ids}};
  provenance["seed"] = d.provenance.seed ? Json(*d.provenance.seed) : Json(nullptr);
  return Json{{"method", to_string(d.method)},
              {"retained_ids", d.retained_ids},
              {"strata", strata},
              {"pairs", pairs},
              {"experiments", experiments},
              {"provenance", provenance}};
}

DesignResult design_from_json(const Json& j) {
  DesignResult d;
  only_keys(j, {"method", "retained_ids", "strata", "pairs", "experiments", "provenance"});
  d.method = design_method_from_string(get_field<std::string>(j, "method"));
  d.retained_ids = get_field<std::vector<int>>(j, "retained_ids");
  for (const auto& s : get_field<Json>(j, "strata")) {
    only_keys(s, {"label", "ids", "weight"});
    d.strata.push_back({get_field<std::string>(s, "label"), get_field<std::vector<int>>(s, "ids"),
                        get_field<double>(s, "weight")});
  }
  for (const auto& p : get_field<Json>(j, "pairs")) {
    only_keys(p, {"treated", "control", "distance"});
    d.pairs.push_back({get_field<int>(p, "treated"), get_field<int>(p, "control"),
                       get_field<double>(p, "distance")});
  }
  for (const auto& e : get_field<Json>(j, "experiments")) {
    only_keys(e, {"kind", "n_treated", "n_control", "criterion"});
    HypotheticalExperiment x;
    x.kind = experiment_kind_from_string(get_field<std::string>(e, "kind"));
    x.n_treated = get_field<int>(e, "n_treated");
    x.n_control = get_field<int>(e, "n_control");
    if (e.contains("criterion")) x.criterion = criterion_from_json(e.at("criterion"));
    d.experiments.push_back(std::move(x));
  }
  const Json prov = get_field<Json>(j, "provenance");
  only_keys(prov, {"parameters", "seed", "discards", "support_ids"});
  d.provenance.parameters = get_field<Json>(prov, "parameters");
  for (const auto& r : get_field<Json>(prov, "discards")) {
    only_keys(r, {"id", "reason"});
    d.provenance.discards.push_back({get_field<int>(r, "id"), get_field<std::string>(r, "reason")});
  }
  d.provenance.support_ids = get_field<std::vector<int>>(prov, "support_ids");
  if (prov.contains("seed") && !prov.at("seed").is_null()) {
    d.provenance.seed = get_field<std::uint64_t>(prov, "seed");
  }
  d.validate();
  return d;
}

std::string canonical_dump(const Json& j) { return j.dump(); }

GroupIds split_groups(const DesignResult& d, const BlindedDataset& ds) {
  GroupIds g;
  for (int id : d.retained_ids) {
    (ds.unit(id).treatment == 1 ? g.treated : g.control).push_back(id);
  }
  return g;
}

}  // namespace hypex
