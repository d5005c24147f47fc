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

// Observational units and the outcome-blinded dataset.
//
// A BlindedDataset carries covariates and treatment openly. Outcomes are
// parsed at load time but kept in a sealed store with no accessor; the only
// way to read them is unseal_outcomes() in lock.h, which demands a
// DesignLock matching the design being analysed.

#ifndef HYPEX_DATASET_H_
#define HYPEX_DATASET_H_

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hypex {

enum class Covariate { kAge, kHeight, kSex };

std::string_view to_string(Covariate c);
// Accepts "age", "height", "sex". Throws ConfigurationError otherwise.
Covariate covariate_from_string(std::string_view name);
bool is_binary(Covariate c);

// One child. The FEV-1 outcome is not a member: it lives in the owning
// dataset's sealed store.
struct UnitRecord {
  int id = 0;
  int age = 0;          // years
  double height = 0.0;  // inches
  int sex = 0;          // 0 female, 1 male
  int treatment = 0;    // 1 smoking parents, 0 non-smoking

  double value(Covariate c) const;
  friend bool operator==(const UnitRecord&, const UnitRecord&) = default;
};

// Column names in the input file plus the accepted encodings of the two
// binary columns. Cells are matched after trimming whitespace and quotes.
struct CsvSchema {
  std::string age = "age";
  std::string height = "ht";
  std::string sex = "sex";
  std::string treatment = "smoke";
  std::string outcome = "fev";
  std::vector<std::string> female_labels = {"0", "F"};
  std::vector<std::string> male_labels = {"1", "M"};
  std::vector<std::string> control_labels = {"0", "no"};
  std::vector<std::string> treated_labels = {"1", "yes"};
};

class AnalysisDataset;
class DesignLock;
struct DesignResult;

class BlindedDataset {
 public:
  // Validates ids (unique), ages in [0, 120], heights in (0, 100), binary
  // codes, and that `outcomes` is parallel to `units`.
  static BlindedDataset FromUnits(std::vector<UnitRecord> units,
                                  std::vector<double> outcomes,
                                  std::string fingerprint = "manual");

  std::span<const UnitRecord> units() const { return units_; }
  std::size_t size() const { return units_.size(); }
  bool contains(int id) const { return index_.contains(id); }
  // Position of `id` in units(); throws ConsistencyError when absent.
  std::size_t position(int id) const;
  const UnitRecord& unit(int id) const { return units_[position(id)]; }
  // Hash of the column layout the units were read with.
  const std::string& fingerprint() const { return fingerprint_; }

 private:
  BlindedDataset() = default;
  friend AnalysisDataset unseal_outcomes(const BlindedDataset&, const DesignLock&,
                                         const DesignResult&);

  std::vector<UnitRecord> units_;
  std::vector<double> sealed_outcomes_;
  std::unordered_map<int, std::size_t> index_;
  std::string fingerprint_;
};

// Reads a header-first comma-separated file. Ids are 1..n in row order.
// Throws SchemaError (missing column), ParseError (with the 1-based data row
// number), EmptyInputError (no data rows).
BlindedDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
BlindedDataset parse_csv(std::istream& in, const CsvSchema& schema = {});

// Writes id, age, height, sex, treatment (canonical 0/1 codes). Never
// writes outcomes.
void write_covariates_csv(std::ostream& out, const BlindedDataset& ds);

struct VariableSummary {
  std::string name;
  bool binary = false;
  std::size_t n = 0;
  double min = 0.0;
  double q25 = 0.0;
  double mean = 0.0;  // a proportion for binary variables
  double median = 0.0;
  double q75 = 0.0;
  double max = 0.0;
};

struct CovariateSummary {
  std::size_t n = 0;
  std::size_t n_treated = 0;
  // age, height, treatment, male.
  std::vector<VariableSummary> variables;

  const VariableSummary& variable(std::string_view name) const;
};

// Per-variable description using type-7 quantiles. Restricts to `ids`
// when given. Throws EmptyInputError on an empty selection.
CovariateSummary summarize(const BlindedDataset& ds);
CovariateSummary summarize(const BlindedDataset& ds, std::span<const int> ids);

}  // namespace hypex

#endif  // HYPEX_DATASET_H_
