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

#include "hypex/protocol.h"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "hypex/error.h"
#include "hypex/terms.h"

namespace hypex {
namespace {

using Keys = std::set<std::string>;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigurationError("config " + where + ": " + what);
}

void expect_map(const YAML::Node& n, const std::string& where, const Keys& allowed) {
  if (!n.IsMap()) fail(where, "expected a mapping");
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) fail(where, "unknown key '" + key + "'");
  }
}

template <typename T>
T scalar(const YAML::Node& n, const std::string& where) {
  if (!n.IsScalar()) fail(where, "expected a scalar");
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    fail(where, "cannot read '" + n.Scalar() + "'");
  }
}

std::vector<std::string> strings(const YAML::Node& n, const std::string& where) {
  if (!n.IsSequence()) fail(where, "expected a list");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n.size(); ++i) {
    out.push_back(scalar<std::string>(n[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<double> numbers(const YAML::Node& n, const std::string& where) {
  if (!n.IsSequence()) fail(where, "expected a list");
  std::vector<double> out;
  for (std::size_t i = 0; i < n.size(); ++i) {
    out.push_back(scalar<double>(n[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

Covariate covariate(const std::string& s, const std::string& where) {
  try {
    return covariate_from_string(s);
  } catch (const Error& e) {
    fail(where, e.what());
  }
}

std::vector<Covariate> covariates(const YAML::Node& n, const std::string& where) {
  std::vector<Covariate> out;
  for (const auto& s : strings(n, where)) out.push_back(covariate(s, where));
  return out;
}

Json covariates_json(const std::vector<Covariate>& cs) {
  Json out = Json::array();
  for (Covariate c : cs) out.push_back(to_string(c));
  return out;
}

void read_schema(const YAML::Node& n, CsvSchema& s) {
  expect_map(n, "input.schema",
             {"age", "height", "sex", "treatment", "outcome", "female", "male", "control",
              "treated"});
  if (n["age"]) s.age = scalar<std::string>(n["age"], "input.schema.age");
  if (n["height"]) s.height = scalar<std::string>(n["height"], "input.schema.height");
  if (n["sex"]) s.sex = scalar<std::string>(n["sex"], "input.schema.sex");
  if (n["treatment"]) s.treatment = scalar<std::string>(n["treatment"], "input.schema.treatment");
  if (n["outcome"]) s.outcome = scalar<std::string>(n["outcome"], "input.schema.outcome");
  if (n["female"]) s.female_labels = strings(n["female"], "input.schema.female");
  if (n["male"]) s.male_labels = strings(n["male"], "input.schema.male");
  if (n["control"]) s.control_labels = strings(n["control"], "input.schema.control");
  if (n["treated"]) s.treated_labels = strings(n["treated"], "input.schema.treated");
}

TrimRule read_trim_rule(const YAML::Node& n, const std::string& where) {
  expect_map(n, where, {"sex", "age", "height"});
  TrimRule r;
  if (n["sex"]) {
    const auto s = scalar<std::string>(n["sex"], where + ".sex");
    if (s == "female" || s == "0") {
      r.sex = 0;
    } else if (s == "male" || s == "1") {
      r.sex = 1;
    } else {
      fail(where + ".sex", "expected female, male, 0 or 1");
    }
  }
  for (const char* name : {"age", "height"}) {
    if (!n[name]) continue;
    const auto v = numbers(n[name], where + "." + name);
    if (v.size() != 2) fail(where + "." + name, "expected [lo, hi]");
    r.ranges[covariate_from_string(name)] = {v[0], v[1]};
  }
  return r;
}

void read_design(const YAML::Node& n, DesignConfig& d) {
  expect_map(n, "design",
             {"method", "trim", "bins", "exact", "propensity", "caliper_sd_multiple", "criterion",
              "match_covariates"});
  if (!n["method"]) fail("design", "missing 'method'");
  try {
    d.method = design_method_from_string(scalar<std::string>(n["method"], "design.method"));
  } catch (const ConfigurationError& e) {
    fail("design.method", e.what());
  }
  if (n["trim"]) {
    if (!n["trim"].IsSequence()) fail("design.trim", "expected a list of rules");
    d.trim_rules.clear();
    for (std::size_t i = 0; i < n["trim"].size(); ++i) {
      d.trim_rules.push_back(read_trim_rule(n["trim"][i], "design.trim[" + std::to_string(i) + "]"));
    }
  }
  if (n["bins"]) {
    const auto& b = n["bins"];
    expect_map(b, "design.bins", {"age", "height"});
    for (const auto& kv : b) {
      const auto name = kv.first.as<std::string>();
      d.bins.push_back({covariate_from_string(name), numbers(kv.second, "design.bins." + name)});
    }
  }
  if (n["exact"]) d.exact = covariates(n["exact"], "design.exact");
  if (n["propensity"]) {
    const auto& p = n["propensity"];
    expect_map(p, "design.propensity", {"candidates", "alpha", "overlap_iterate"});
    if (p["candidates"]) {
      if (!p["candidates"].IsSequence()) fail("design.propensity.candidates", "expected a list");
      d.propensity_candidates.clear();
      for (std::size_t i = 0; i < p["candidates"].size(); ++i) {
        d.propensity_candidates.push_back(strings(
            p["candidates"][i], "design.propensity.candidates[" + std::to_string(i) + "]"));
      }
    }
    if (p["alpha"]) d.propensity_alpha = scalar<double>(p["alpha"], "design.propensity.alpha");
    if (p["overlap_iterate"]) {
      d.overlap_iterate = scalar<bool>(p["overlap_iterate"], "design.propensity.overlap_iterate");
    }
  }
  if (n["caliper_sd_multiple"]) {
    d.caliper_sd_multiple = scalar<double>(n["caliper_sd_multiple"], "design.caliper_sd_multiple");
  }
  if (n["criterion"]) {
    const auto& c = n["criterion"];
    expect_map(c, "design.criterion", {"age", "height", "sex"});
    d.criterion.calipers.clear();
    for (const auto& kv : c) {
      const auto name = kv.first.as<std::string>();
      d.criterion.calipers.push_back(
          {covariate_from_string(name), scalar<double>(kv.second, "design.criterion." + name)});
    }
  }
  if (n["match_covariates"]) {
    d.match_covariates = covariates(n["match_covariates"], "design.match_covariates");
  }
}

AnalysisSpec read_analysis(const YAML::Node& n, const std::string& where) {
  expect_map(n, where, {"type", "experiment", "statistic", "covariates", "tau0", "fast"});
  AnalysisSpec a;
  if (!n["type"]) fail(where, "missing 'type'");
  try {
    a.type = analysis_type_from_string(scalar<std::string>(n["type"], where + ".type"));
    if (n["experiment"]) {
      a.experiment =
          experiment_kind_from_string(scalar<std::string>(n["experiment"], where + ".experiment"));
    }
    if (n["statistic"]) {
      a.statistic = statistic_from_string(scalar<std::string>(n["statistic"], where + ".statistic"));
    }
  } catch (const ConfigurationError& e) {
    fail(where, e.what());
  }
  if (n["covariates"]) a.covariates = covariates(n["covariates"], where + ".covariates");
  if (n["tau0"]) a.tau0 = scalar<double>(n["tau0"], where + ".tau0");
  if (n["fast"]) a.bayes_fast = scalar<bool>(n["fast"], where + ".fast");
  if (a.type == AnalysisType::kMixed) {
    if (n["statistic"] && a.statistic != Statistic::kBayesT) {
      fail(where, "mixed analyses always use bayes_t");
    }
    a.statistic = Statistic::kBayesT;
  }
  if ((n["statistic"] || n["tau0"]) && a.type != AnalysisType::kFisher &&
      a.type != AnalysisType::kFiducial && a.type != AnalysisType::kMixed) {
    fail(where, "statistic and tau0 apply to fisher, fiducial and mixed analyses only");
  }
  return a;
}

}  // namespace

std::string_view to_string(AnalysisType t) {
  switch (t) {
    case AnalysisType::kCrude: return "crude";
    case AnalysisType::kAdjusted: return "adjusted";
    case AnalysisType::kInteractions: return "interactions";
    case AnalysisType::kFisher: return "fisher";
    case AnalysisType::kFiducial: return "fiducial";
    case AnalysisType::kBayes: return "bayes";
    case AnalysisType::kMixed: return "mixed";
  }
  return "?";
}

AnalysisType analysis_type_from_string(std::string_view s) {
  for (auto t : {AnalysisType::kCrude, AnalysisType::kAdjusted, AnalysisType::kInteractions,
                 AnalysisType::kFisher, AnalysisType::kFiducial, AnalysisType::kBayes,
                 AnalysisType::kMixed}) {
    if (to_string(t) == s) return t;
  }
  throw ConfigurationError("unknown analysis type '" + std::string(s) +
                           "' (expected crude, adjusted, interactions, fisher, fiducial, bayes, "
                           "mixed)");
}

std::string AnalysisSpec::name() const {
  std::string out(to_string(type));
  if (type == AnalysisType::kFisher || type == AnalysisType::kFiducial) {
    out += "/" + std::string(to_string(statistic));
  }
  if (experiment) out += "/" + std::string(to_string(*experiment));
  if (tau0 != 0.0) {
    std::ostringstream os;
    os << tau0;
    out += "/tau0=" + os.str();
  }
  return out;
}

bool AnalysisSpec::is_monte_carlo() const {
  return type == AnalysisType::kFisher || type == AnalysisType::kFiducial ||
         type == AnalysisType::kBayes || type == AnalysisType::kMixed;
}

std::vector<ExperimentKind> experiments_of(DesignMethod m) {
  switch (m) {
    case DesignMethod::kNone: return {ExperimentKind::kA};
    case DesignMethod::kTrim: return {ExperimentKind::kB};
    case DesignMethod::kStratify: return {ExperimentKind::kC};
    case DesignMethod::kPsCaliper: return {ExperimentKind::kD1, ExperimentKind::kD2};
    case DesignMethod::kOptimalPair: return {ExperimentKind::kE};
  }
  return {};
}

ProtocolConfig ProtocolConfig::FromYaml(const std::string& text,
                                        const std::filesystem::path& base_dir,
                                        const ProtocolOverrides& overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigurationError(std::string("config is not valid YAML: ") + e.what());
  }
  expect_map(root, "root",
             {"input", "design", "analyses", "seed", "draws", "level", "balance", "threads",
              "output"});
  ProtocolConfig cfg;
  cfg.source_text = text;

  if (!root["input"]) fail("root", "missing 'input'");
  const auto& in = root["input"];
  expect_map(in, "input", {"path", "schema"});
  if (!in["path"]) fail("input", "missing 'path'");
  cfg.input = scalar<std::string>(in["path"], "input.path");
  if (cfg.input.is_relative()) cfg.input = base_dir / cfg.input;
  if (in["schema"]) read_schema(in["schema"], cfg.schema);

  if (!root["design"]) fail("root", "missing 'design'");
  read_design(root["design"], cfg.design);

  if (root["analyses"]) {
    const auto& list = root["analyses"];
    if (!list.IsSequence()) fail("analyses", "expected a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      cfg.analyses.push_back(read_analysis(list[i], "analyses[" + std::to_string(i) + "]"));
    }
  }
  if (root["seed"]) cfg.seed = scalar<std::uint64_t>(root["seed"], "seed");
  if (root["draws"]) cfg.draws = scalar<int>(root["draws"], "draws");
  if (root["level"]) cfg.level = scalar<double>(root["level"], "level");
  if (root["balance"]) {
    const auto& b = root["balance"];
    expect_map(b, "balance", {"alpha", "histogram_bin_width"});
    if (b["alpha"]) cfg.balance_alpha = scalar<double>(b["alpha"], "balance.alpha");
    if (b["histogram_bin_width"]) {
      cfg.histogram_bin_width = scalar<double>(b["histogram_bin_width"], "balance.histogram_bin_width");
    }
  }
  if (root["threads"]) cfg.threads = scalar<int>(root["threads"], "threads");
  if (root["output"]) cfg.out_dir = scalar<std::string>(root["output"], "output");
  if (overrides.seed) cfg.seed = overrides.seed;
  if (overrides.draws) cfg.draws = overrides.draws;
  if (overrides.threads) cfg.threads = *overrides.threads;
  if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;
  cfg.validate();
  return cfg;
}

ProtocolConfig ProtocolConfig::Load(const std::filesystem::path& path,
                                    const ProtocolOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return FromYaml(buf.str(), path.parent_path().empty() ? "." : path.parent_path(), overrides);
}

ExperimentKind ProtocolConfig::default_experiment() const {
  return experiments_of(design.method).front();
}

ExperimentKind ProtocolConfig::experiment_of(const AnalysisSpec& a) const {
  return a.experiment.value_or(default_experiment());
}

void ProtocolConfig::validate() const {
  if (!(level > 0.0 && level < 1.0)) fail("level", "must lie in (0, 1)");
  if (!(balance_alpha > 0.0 && balance_alpha < 1.0)) fail("balance.alpha", "must lie in (0, 1)");
  if (!(histogram_bin_width > 0.0)) fail("balance.histogram_bin_width", "must be positive");
  if (threads < 1) fail("threads", "must be at least 1");
  if (draws && *draws < 1) fail("draws", "must be positive");
  if (!(design.caliper_sd_multiple > 0.0)) fail("design.caliper_sd_multiple", "must be positive");
  if (!(design.propensity_alpha > 0.0 && design.propensity_alpha < 1.0)) {
    fail("design.propensity.alpha", "must lie in (0, 1)");
  }
  if (design.propensity_candidates.empty()) fail("design.propensity.candidates", "empty list");
  for (const auto& c : design.propensity_candidates) parse_terms(c);
  design.criterion.validate();
  if (design.match_covariates.empty()) fail("design.match_covariates", "empty list");

  const auto offered = experiments_of(design.method);
  std::set<std::string> names;
  for (const auto& a : analyses) {
    const std::string name = a.name();
    if (!names.insert(name).second) fail("analyses", "duplicate analysis '" + name + "'");
    const ExperimentKind e = experiment_of(a);
    if (a.experiment && std::find(offered.begin(), offered.end(), e) == offered.end()) {
      fail("analyses", "experiment " + std::string(to_string(e)) + " is not produced by design '" +
                           std::string(to_string(design.method)) + "'");
    }
    if (a.statistic == Statistic::kPairedT &&
        (a.type == AnalysisType::kFisher || a.type == AnalysisType::kFiducial) &&
        e != ExperimentKind::kE) {
      fail("analyses", "statistic paired_t needs the paired experiment E of design 'optimal-pair'; " +
                           name + " uses experiment " + std::string(to_string(e)) +
                           " of design '" + std::string(to_string(design.method)) + "'");
    }
    if (a.is_monte_carlo() && (!seed || !draws)) {
      fail("analyses", name + " is a Monte Carlo analysis; 'seed' and 'draws' are required");
    }
  }
}

Json ProtocolConfig::locked_json() const {
  Json schema_json = {{"age", schema.age},
                      {"height", schema.height},
                      {"sex", schema.sex},
                      {"treatment", schema.treatment},
                      {"outcome", schema.outcome},
                      {"female", schema.female_labels},
                      {"male", schema.male_labels},
                      {"control", schema.control_labels},
                      {"treated", schema.treated_labels}};
  Json trim = Json::array();
  for (const auto& r : design.trim_rules) {
    Json ranges = Json::object();
    for (const auto& [c, range] : r.ranges) ranges[std::string(to_string(c))] = {range.lo, range.hi};
    trim.push_back({{"sex", r.sex ? Json(*r.sex) : Json(nullptr)}, {"ranges", ranges}});
  }
  Json bins = Json::object();
  for (const auto& b : design.bins) bins[std::string(to_string(b.covariate))] = b.cutpoints;
  Json design_json = {{"method", to_string(design.method)},
                      {"trim", trim},
                      {"bins", bins},
                      {"exact", covariates_json(design.exact)},
                      {"propensity_candidates", design.propensity_candidates},
                      {"propensity_alpha", design.propensity_alpha},
                      {"overlap_iterate", design.overlap_iterate},
                      {"caliper_sd_multiple", design.caliper_sd_multiple},
                      {"criterion", to_json(design.criterion)},
                      {"match_covariates", covariates_json(design.match_covariates)}};
  Json list = Json::array();
  for (const auto& a : analyses) {
    list.push_back({{"type", to_string(a.type)},
                    {"experiment", to_string(experiment_of(a))},
                    {"statistic", to_string(a.statistic)},
                    {"covariates", covariates_json(a.covariates)},
                    {"tau0", a.tau0},
                    {"fast", a.bayes_fast}});
  }
  return {{"schema", schema_json},
          {"design", design_json},
          {"analyses", list},
          {"seed", seed ? Json(*seed) : Json(nullptr)},
          {"draws", draws ? Json(*draws) : Json(nullptr)},
          {"level", level},
          {"balance", {{"alpha", balance_alpha}, {"histogram_bin_width", histogram_bin_width}}}};
}

}  // namespace hypex
