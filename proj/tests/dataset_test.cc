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
#include <sstream>

#include <gtest/gtest.h>

#include "hypex/dataset.h"
#include "hypex/error.h"
#include "support.h"

namespace hypex {
namespace {

BlindedDataset parse(const std::string& text, const CsvSchema& schema = {}) {
  std::istringstream in(text);
  return parse_csv(in, schema);
}

TEST(ParseCsvTest, ReadsColumnsByNameInAnyOrder) {
  const auto ds = parse("smoke,sex,fev,ht,age\n0,1,2.5,60,11\n1,0,\"3.1\",62.5,14\n\n");
  ASSERT_EQ(ds.size(), 2u);
  const auto& u = ds.units()[1];
  EXPECT_EQ(u.id, 2);
  EXPECT_EQ(u.age, 14);
  EXPECT_DOUBLE_EQ(u.height, 62.5);
  EXPECT_EQ(u.sex, 0);
  EXPECT_EQ(u.treatment, 1);
}

TEST(ParseCsvTest, SchemaMapAndLabels) {
  CsvSchema s;
  s.height = "height";
  s.treatment = "exposed";
  s.outcome = "y";
  s.sex = "gender";
  s.female_labels = {"F"};
  s.male_labels = {"M"};
  s.treated_labels = {"yes"};
  s.control_labels = {"no"};
  const auto ds = parse("age,y,height,gender,exposed\n9,1.2,55,M,no\n12,2.0,59,F,yes\n", s);
  EXPECT_EQ(ds.units()[0].sex, 1);
  EXPECT_EQ(ds.units()[1].treatment, 1);
}

TEST(ParseCsvTest, MissingColumnNamesIt) {
  try {
    parse("age,fev,sex,smoke\n9,1.2,0,0\n");
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("'ht'"), std::string::npos);
  }
}

TEST(ParseCsvTest, BadCellReportsRow) {
  try {
    parse("age,fev,ht,sex,smoke\n9,1.2,55,0,0\n10,abc,56,1,0\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
  }
  EXPECT_THROW(parse("age,fev,ht,sex,smoke\n9,1.2,55,2,0\n"), ParseError);
  EXPECT_THROW(parse("age,fev,ht,sex,smoke\n9,1.2,55,0\n"), ParseError);
  EXPECT_THROW(parse("age,fev,ht,sex,smoke\n9,-1.0,55,0,0\n"), ParseError);
}

TEST(ParseCsvTest, EmptyInputs) {
  EXPECT_THROW(parse(""), EmptyInputError);
  EXPECT_THROW(parse("age,fev,ht,sex,smoke\n"), EmptyInputError);
}

TEST(ParseCsvTest, FingerprintDependsOnLayoutOnly) {
  const auto a = parse("age,fev,ht,sex,smoke\n9,1.2,55,0,0\n");
  const auto b = parse("age,fev,ht,sex,smoke\n11,2.2,58,1,1\n");
  const auto c = parse("fev,age,ht,sex,smoke\n1.2,9,55,0,0\n");
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_NE(a.fingerprint(), c.fingerprint());
}

TEST(FromUnitsTest, ValidatesRecords) {
  UnitRecord u{1, 10, 55.0, 0, 0};
  EXPECT_THROW(BlindedDataset::FromUnits({u, u}, {1.0, 2.0}), ConsistencyError);
  EXPECT_THROW(BlindedDataset::FromUnits({u}, {1.0, 2.0}), ConsistencyError);
  UnitRecord bad = u;
  bad.treatment = 2;
  EXPECT_THROW(BlindedDataset::FromUnits({bad}, {1.0}), ConsistencyError);
  EXPECT_THROW(BlindedDataset::FromUnits({}, {}), EmptyInputError);
  const auto ds = BlindedDataset::FromUnits({u}, {1.0});
  EXPECT_THROW(ds.position(99), ConsistencyError);
}

TEST(CovariateCsvTest, CarriesNoOutcomeColumn) {
  const auto ds = testing::synthetic_fev({.n = 30});
  std::ostringstream out;
  write_covariates_csv(out, ds);
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "id,age,height,sex,treatment");
}

// Type-7 quantile from its definition on the sorted sample.
double type7(std::vector<double> x, double p) {
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

TEST(SummarizeTest, AgreesWithDirectComputation) {
  const auto ds = testing::synthetic_fev({.n = 97, .seed = 5});
  const auto s = summarize(ds);
  std::vector<double> age, height;
  double males = 0, treated = 0;
  for (const auto& u : ds.units()) {
    age.push_back(u.age);
    height.push_back(u.height);
    males += u.sex;
    treated += u.treatment;
  }
  EXPECT_EQ(s.n, 97u);
  EXPECT_EQ(s.n_treated, static_cast<std::size_t>(treated));
  const auto& a = s.variable("age");
  EXPECT_DOUBLE_EQ(a.min, *std::min_element(age.begin(), age.end()));
  EXPECT_DOUBLE_EQ(a.max, *std::max_element(age.begin(), age.end()));
  EXPECT_NEAR(a.q25, type7(age, 0.25), 1e-12);
  EXPECT_NEAR(a.median, type7(age, 0.5), 1e-12);
  EXPECT_NEAR(s.variable("height").q75, type7(height, 0.75), 1e-12);
  EXPECT_NEAR(s.variable("male").mean, males / 97.0, 1e-12);
  EXPECT_NEAR(s.variable("treatment").mean, treated / 97.0, 1e-12);
  EXPECT_THROW(s.variable("fev"), DomainError);
}

TEST(SummarizeTest, SubsetByIds) {
  const auto ds = testing::synthetic_fev({.n = 40});
  const std::vector<int> ids = {1, 2, 3, 4};
  const auto s = summarize(ds, ids);
  EXPECT_EQ(s.n, 4u);
  EXPECT_THROW(summarize(ds, std::vector<int>{}), EmptyInputError);
}

}  // namespace
}  // namespace hypex
