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

// Polynomial terms over the covariates: "age", "age^2", "sex*height", ...

#ifndef HYPEX_TERMS_H_
#define HYPEX_TERMS_H_

#include <string>
#include <string_view>
#include <vector>

#include "hypex/dataset.h"

namespace hypex {

// A product of covariates. Factors are kept in the order written so that
// labels round-trip ("sex*age" stays "sex*age").
class Term {
 public:
  explicit Term(std::vector<Covariate> factors);
  // Grammar: name ( "^" integer | ( "*" name )* ). Throws ConfigurationError.
  static Term Parse(std::string_view text);

  double eval(const UnitRecord& u) const;
  const std::string& label() const { return label_; }
  const std::vector<Covariate>& factors() const { return factors_; }
  bool is_binary() const;

  friend bool operator==(const Term& a, const Term& b) { return a.label_ == b.label_; }

 private:
  std::vector<Covariate> factors_;
  std::string label_;
};

std::vector<Term> parse_terms(const std::vector<std::string>& texts);
std::vector<std::string> term_labels(const std::vector<Term>& terms);

// age, height, sex.
std::vector<Term> main_effect_terms();
// age, age^2, height, height^2, sex, sex*age, sex*height.
std::vector<Term> balance_terms();

}  // namespace hypex

#endif  // HYPEX_TERMS_H_
