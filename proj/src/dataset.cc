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

#include "hypex/dataset.h"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>

#include "hypex/error.h"
#include "hypex/hash.h"
#include "hypex/numerics/stats.h"

namespace hypex {
namespace {

std::string trim(std::string_view s) {
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s = s.substr(1, s.size() - 2);
  }
  return std::string(s);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string current;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
      current.push_back(c);
    } else if (c == ',' && !quoted) {
      cells.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  cells.push_back(trim(current));
  return cells;
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

double parse_number(const std::string& cell, std::size_t row, const std::string& column) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (cell.empty() || end != begin + cell.size() || errno == ERANGE || !std::isfinite(v)) {
    throw ParseError("row " + std::to_string(row) + ": column '" + column +
                     "' has non-numeric value '" + cell + "'");
  }
  return v;
}

int parse_binary(const std::string& cell, const std::vector<std::string>& zero,
                 const std::vector<std::string>& one, std::size_t row,
                 const std::string& column) {
  if (std::find(zero.begin(), zero.end(), cell) != zero.end()) return 0;
  if (std::find(one.begin(), one.end(), cell) != one.end()) return 1;
  throw ParseError("row " + std::to_string(row) + ": column '" + column +
                   "' has unrecognised code '" + cell + "'");
}

VariableSummary describe(std::string name, bool binary, std::vector<double> values) {
  std::sort(values.begin(), values.end());
  VariableSummary s;
  s.name = std::move(name);
  s.binary = binary;
  s.n = values.size();
  s.min = values.front();
  s.max = values.back();
  s.q25 = numerics::quantile_sorted(values, 0.25);
  s.median = numerics::quantile_sorted(values, 0.5);
  s.q75 = numerics::quantile_sorted(values, 0.75);
  s.mean = numerics::mean(values);
  return s;
}

}  // namespace

std::string_view to_string(Covariate c) {
  switch (c) {
    case Covariate::kAge: return "age";
    case Covariate::kHeight: return "height";
    case Covariate::kSex: return "sex";
  }
  return "?";
}

Covariate covariate_from_string(std::string_view name) {
  if (name == "age") return Covariate::kAge;
  if (name == "height") return Covariate::kHeight;
  if (name == "sex") return Covariate::kSex;
  throw ConfigurationError("unknown covariate '" + std::string(name) +
                           "' (expected age, height or sex)");
}

bool is_binary(Covariate c) { return c == Covariate::kSex; }

double UnitRecord::value(Covariate c) const {
  switch (c) {
    case Covariate::kAge: return static_cast<double>(age);
    case Covariate::kHeight: return height;
    case Covariate::kSex: return static_cast<double>(sex);
  }
  return 0.0;
}

BlindedDataset BlindedDataset::FromUnits(std::vector<UnitRecord> units,
                                         std::vector<double> outcomes,
                                         std::string fingerprint) {
  if (units.empty()) throw EmptyInputError("dataset has no units");
  if (outcomes.size() != units.size()) {
    throw ConsistencyError("outcome count does not match unit count");
  }
  BlindedDataset ds;
  for (std::size_t i = 0; i < units.size(); ++i) {
    const UnitRecord& u = units[i];
    const std::string where = "unit " + std::to_string(u.id);
    if (!ds.index_.emplace(u.id, i).second) throw ConsistencyError("duplicate " + where);
    if (u.age < 0 || u.age > 120) throw ConsistencyError(where + ": age outside [0, 120]");
    if (!(u.height > 0.0 && u.height < 100.0)) {
      throw ConsistencyError(where + ": height outside (0, 100)");
    }
    if (u.sex != 0 && u.sex != 1) throw ConsistencyError(where + ": sex must be 0 or 1");
    if (u.treatment != 0 && u.treatment != 1) {
      throw ConsistencyError(where + ": treatment must be 0 or 1");
    }
    if (!std::isfinite(outcomes[i])) throw ConsistencyError(where + ": non-finite outcome");
  }
  ds.units_ = std::move(units);
  ds.sealed_outcomes_ = std::move(outcomes);
  ds.fingerprint_ = std::move(fingerprint);
  return ds;
}

std::size_t BlindedDataset::position(int id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) {
    throw ConsistencyError("unit id " + std::to_string(id) + " is not in the dataset");
  }
  return it->second;
}

BlindedDataset parse_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!blank(line)) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.empty()) throw EmptyInputError("input is empty");

  auto column = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError("missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_age = column(schema.age);
  const std::size_t c_height = column(schema.height);
  const std::size_t c_sex = column(schema.sex);
  const std::size_t c_treat = column(schema.treatment);
  const std::size_t c_out = column(schema.outcome);

  std::string layout;
  for (const auto& h : header) layout += h + "\n";
  layout += "age=" + schema.age + ";height=" + schema.height + ";sex=" + schema.sex +
            ";treatment=" + schema.treatment + ";outcome=" + schema.outcome;

  std::vector<UnitRecord> units;
  std::vector<double> outcomes;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    ++row;
    const auto cells = split_csv_line(line);
    if (cells.size() < header.size()) {
      throw ParseError("row " + std::to_string(row) + ": expected " +
                       std::to_string(header.size()) + " cells, found " +
                       std::to_string(cells.size()));
    }
    UnitRecord u;
    u.id = static_cast<int>(row);
    const double age = parse_number(cells[c_age], row, schema.age);
    if (age != std::floor(age)) {
      throw ParseError("row " + std::to_string(row) + ": age '" + cells[c_age] +
                       "' is not a whole number of years");
    }
    u.age = static_cast<int>(age);
    u.height = parse_number(cells[c_height], row, schema.height);
    u.sex = parse_binary(cells[c_sex], schema.female_labels, schema.male_labels, row, schema.sex);
    u.treatment = parse_binary(cells[c_treat], schema.control_labels, schema.treated_labels, row,
                               schema.treatment);
    const double y = parse_number(cells[c_out], row, schema.outcome);
    units.push_back(u);
    outcomes.push_back(y);
  }
  if (units.empty()) throw EmptyInputError("input has a header but no data rows");
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!(outcomes[i] > 0.0)) {
      throw ParseError("row " + std::to_string(i + 1) + ": outcome must be positive");
    }
  }
  try {
    return BlindedDataset::FromUnits(std::move(units), std::move(outcomes), sha256_hex(layout));
  } catch (const ConsistencyError& e) {
    throw ParseError(e.what());
  }
}

BlindedDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  return parse_csv(in, schema);
}

void write_covariates_csv(std::ostream& out, const BlindedDataset& ds) {
  out << "id,age,height,sex,treatment\n";
  const auto old_precision = out.precision(17);
  for (const auto& u : ds.units()) {
    out << u.id << ',' << u.age << ',' << u.height << ',' << u.sex << ',' << u.treatment << '\n';
  }
  out.precision(old_precision);
}

const VariableSummary& CovariateSummary::variable(std::string_view name) const {
  for (const auto& v : variables) {
    if (v.name == name) return v;
  }
  throw DomainError("no summary for variable '" + std::string(name) + "'");
}

CovariateSummary summarize(const BlindedDataset& ds, std::span<const int> ids) {
  if (ids.empty()) throw EmptyInputError("cannot summarize an empty selection");
  std::vector<double> age, height, treatment, male;
  for (int id : ids) {
    const UnitRecord& u = ds.unit(id);
    age.push_back(u.age);
    height.push_back(u.height);
    treatment.push_back(u.treatment);
    male.push_back(u.sex);
  }
  CovariateSummary s;
  s.n = ids.size();
  s.n_treated = static_cast<std::size_t>(std::count(treatment.begin(), treatment.end(), 1.0));
  s.variables.push_back(describe("age", false, std::move(age)));
  s.variables.push_back(describe("height", false, std::move(height)));
  s.variables.push_back(describe("treatment", true, std::move(treatment)));
  s.variables.push_back(describe("male", true, std::move(male)));
  return s;
}

CovariateSummary summarize(const BlindedDataset& ds) {
  std::vector<int> ids;
  ids.reserve(ds.size());
  for (const auto& u : ds.units()) ids.push_back(u.id);
  return summarize(ds, ids);
}

}  // namespace hypex
