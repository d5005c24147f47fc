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

// Pre-registered study protocol, read from a YAML file.

#ifndef HYPEX_PROTOCOL_H_
#define HYPEX_PROTOCOL_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hypex/dataset.h"
#include "hypex/design.h"
#include "hypex/design_types.h"
#include "hypex/statistics.h"

namespace hypex {

struct DesignConfig {
  DesignMethod method = DesignMethod::kNone;
  std::vector<TrimRule> trim_rules = default_trim_rules();
  // Empty bins mean Sturges cutpoints on the pooled sample.
  std::vector<BinSpec> bins;
  std::vector<Covariate> exact = {Covariate::kSex};
  std::vector<std::vector<std::string>> propensity_candidates = {
      {"age", "height", "sex"},
      {"age", "age^2", "height", "height^2", "sex", "sex*age", "sex*height"}};
  double propensity_alpha = 0.05;
  bool overlap_iterate = false;
  double caliper_sd_multiple = 1.0;
  AcceptanceCriterion criterion = AcceptanceCriterion::Default();
  std::vector<Covariate> match_covariates = {Covariate::kAge, Covariate::kHeight,
                                             Covariate::kSex};
};

enum class AnalysisType { kCrude, kAdjusted, kInteractions, kFisher, kFiducial, kBayes, kMixed };

std::string_view to_string(AnalysisType t);
AnalysisType analysis_type_from_string(std::string_view s);

struct AnalysisSpec {
  AnalysisType type = AnalysisType::kCrude;
  // Randomization-based analyses only; defaults to the design's first
  // experiment.
  std::optional<ExperimentKind> experiment;
  Statistic statistic = Statistic::kWelchT;  // fisher and fiducial
  std::vector<Covariate> covariates = {Covariate::kAge, Covariate::kHeight, Covariate::kSex};
  double tau0 = 0.0;
  bool bayes_fast = true;  // mixed only

  // Unique within a protocol, e.g. "fisher/welch_t/D.1".
  std::string name() const;
  bool is_monte_carlo() const;
};

// Command-line settings applied on top of the file before validation.
struct ProtocolOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> draws;
  std::optional<int> threads;
  std::optional<std::filesystem::path> out_dir;
};

struct ProtocolConfig {
  std::filesystem::path input;
  CsvSchema schema;
  DesignConfig design;
  std::vector<AnalysisSpec> analyses;
  std::optional<std::uint64_t> seed;
  std::optional<int> draws;
  double level = 0.95;
  double balance_alpha = 0.05;
  double histogram_bin_width = 1.0;
  // Execution settings; not part of the locked protocol.
  int threads = 1;
  std::filesystem::path out_dir;  // empty: caller's default
  std::string source_text;

  // Relative input paths resolve against `base_dir`. Unknown keys and
  // malformed values throw ConfigurationError; validate() runs before return.
  static ProtocolConfig FromYaml(const std::string& text,
                                 const std::filesystem::path& base_dir = ".",
                                 const ProtocolOverrides& overrides = {});
  static ProtocolConfig Load(const std::filesystem::path& path,
                             const ProtocolOverrides& overrides = {});

  // Cross-field rules: experiments produced by the design method, paired_t
  // only with a pairing design, seed and draws for Monte Carlo analyses,
  // distinct analysis names. Throws ConfigurationError.
  void validate() const;

  ExperimentKind default_experiment() const;
  ExperimentKind experiment_of(const AnalysisSpec& a) const;

  // The part of the protocol a design lock pins: schema, design settings,
  // analyses, seed, draws and levels. Paths and thread counts are excluded.
  Json locked_json() const;
};

// Experiments a design method instantiates, in order.
std::vector<ExperimentKind> experiments_of(DesignMethod m);

}  // namespace hypex

#endif  // HYPEX_PROTOCOL_H_
